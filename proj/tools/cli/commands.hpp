#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cli/run_config.hpp"

namespace tmt::cli {

/// Records every file a command writes so the run manifest can list them.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  void write(const std::filesystem::path& relative, const std::string& bytes);
  void record(const std::filesystem::path& absolute);
  /// Writes run_manifest.json listing every recorded file. Call last.
  void finish(const std::string& command, const RunConfig& config,
              const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

struct Dataset {
  RunConfig config;  ///< the generating config, from the manifest
  std::vector<LabeledImage> source;
  std::vector<LabeledImage> target;
  std::vector<LabeledImage> test;
};

/// Writes `<out>/{source,target,test}/img_NNNN.f64` + `_labels.pgm` and `manifest.json`.
void cmd_gen(const RunConfig& config);

Dataset load_dataset(const std::filesystem::path& dir);

/// Clusters every image, trains the adaptive and grid estimators, writes
/// per-image T maps (PGM and exact f64), region CSVs, `pad.csv` and the
/// discriminator weights.
void cmd_estimate(const RunConfig& config, const std::filesystem::path& dataset);

/// Source training, fine-tuning as `variant` and evaluation on the test split.
/// Throws InputError when `maps` is needed but missing.
void cmd_finetune(const RunConfig& config, const std::filesystem::path& dataset,
                  const std::filesystem::path& maps, Variant variant);

void cmd_ablate(const RunConfig& config);
void cmd_sweep(const RunConfig& config);

/// Returns false if any instance exceeds the tolerance.
bool cmd_gradcheck(const RunConfig& config, std::size_t instances, double tolerance);

}  // namespace tmt::cli
