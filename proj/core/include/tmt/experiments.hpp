#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmt/adaptive_cluster.hpp"
#include "tmt/metrics.hpp"
#include "tmt/segmodel.hpp"
#include "tmt/synthdata.hpp"
#include "tmt/transferability.hpp"

namespace tmt {

enum class Variant { Vanilla, Tmt, NoActe, NoTma };

const char* variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);
inline constexpr Variant kAllVariants[] = {Variant::Vanilla, Variant::Tmt, Variant::NoActe,
                                           Variant::NoTma};

struct ExperimentConfig {
  SynthConfig data;
  std::size_t source_images = 200;
  std::size_t target_images = 200;
  std::size_t test_images = 100;

  std::size_t stride = kDefaultStride;
  double temperature = kDefaultTemperature;
  std::size_t cluster_iters = kDefaultClusterIters;

  DiscriminatorConfig discriminator;
  SegModelConfig model;

  std::size_t source_steps = 500;
  std::size_t finetune_steps = 300;
  std::size_t batch_size = 8;
  double source_lr = 3e-3;
  double finetune_lr = 1e-4;
  double weight_decay = 0.01;

  double mask_threshold = kDefaultMaskThreshold;  ///< λ_M
  double percentile = kDefaultPercentile;         ///< p_T

  std::size_t preview_images = 2;  ///< test images kept for map/label export
  std::size_t threads = 1;
};

/// Everything derived from one seed before the variants diverge: data,
/// region partitions, frozen estimators, transferability maps and the
/// source-trained model.
struct SeedWorkspace {
  std::uint64_t seed = 0;
  std::vector<LabeledImage> source;
  std::vector<LabeledImage> target;
  std::vector<LabeledImage> test;

  /// Indexed [target image]; adaptive clusters and the plain grid.
  std::vector<TransferabilityMap> target_maps;
  std::vector<TransferabilityMap> test_maps;
  std::vector<TransferabilityMap> target_grid_maps;
  std::vector<TransferabilityMap> test_grid_maps;
  std::vector<std::vector<std::size_t>> test_region_labels;  ///< adaptive partition, preview only

  PadEstimate pad;
  PadEstimate grid_pad;
  TrainedDiscriminator estimator;
  SegModelParams source_model;
};

struct VariantResult {
  Variant variant = Variant::Vanilla;
  std::uint64_t seed = 0;
  double percentile = kDefaultPercentile;
  double mask_threshold = kDefaultMaskThreshold;
  double miou = 0.0;
  double macc = 0.0;
  double pad = 0.0;
  double fallback_rate = 0.0;
  std::vector<double> class_iou;
  std::vector<std::vector<int>> preview_labels;
  SegModelParams model;
};

struct ExperimentReport {
  std::vector<VariantResult> rows;
  std::vector<std::uint64_t> seeds;
  /// One per seed: preview transferability maps and region partitions.
  std::vector<std::vector<TransferabilityMap>> preview_maps;
  std::vector<std::vector<std::vector<std::size_t>>> preview_regions;

  double median_miou(Variant v) const;
  double median_macc(Variant v) const;
};

/// Discriminator region features gathered from a set of images.
std::vector<std::vector<double>> collect_region_features(const std::vector<ClusterState>& states);

/// Region-level AUC of T against the majority ground-truth transferability bit of each region.
double transferability_auc(const std::vector<TransferabilityMap>& maps,
                           const std::vector<ClusterState>& states,
                           const std::vector<LabeledImage>& images);

/// Source-domain training of a fresh model (ungated attention).
SegModelParams train_source_model(const ExperimentConfig& config,
                                  const std::vector<LabeledImage>& source, std::uint64_t seed);

SeedWorkspace prepare_seed(const ExperimentConfig& config, std::uint64_t seed);

/// Fine-tunes the workspace's source model as `variant` and evaluates on the target test split.
VariantResult run_variant(const ExperimentConfig& config, const SeedWorkspace& ws, Variant variant,
                          double percentile, double mask_threshold);

/// Evaluates `model` on the target test split with the given gating.
VariantResult evaluate(const ExperimentConfig& config, const SeedWorkspace& ws,
                       const SegModelParams& model, Variant variant, double percentile,
                       double mask_threshold);

/// Source model plus four fine-tuned variants per seed. Needs at least one seed.
ExperimentReport run_ablation(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                              const std::vector<Variant>& variants = {std::begin(kAllVariants),
                                                                      std::end(kAllVariants)});

/// The tmt variant at each percentile for each seed.
ExperimentReport sweep_pt(const ExperimentConfig& config, const std::vector<double>& percentiles,
                          const std::vector<std::uint64_t>& seeds);

inline const std::vector<double> kDefaultSweep{10, 20, 30, 40, 50};

/// CSV with header `variant,seed,p_T,miou,macc,pad,fallback_rate`, LF endings.
std::string report_csv(const ExperimentReport& report);

}  // namespace tmt
