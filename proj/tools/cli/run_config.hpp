#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmt/experiments.hpp"

namespace tmt::cli {

/// Everything a command needs, parsed from one flat JSON object. Unknown keys
/// are rejected.
struct RunConfig {
  ExperimentConfig experiment;
  std::uint64_t seed = 0;
  std::size_t num_seeds = 5;
  std::vector<double> sweep_percentiles = kDefaultSweep;
  std::string output_dir = "out";

  /// seed, seed + 1, ... (num_seeds values).
  std::vector<std::uint64_t> seeds() const;
};

/// Throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::ordered_json& doc);
RunConfig load_run_config(const std::string& path);

/// Every key with its effective value, in schema order. output_dir is left
/// out so artifacts do not depend on where they were written.
nlohmann::ordered_json to_json(const RunConfig& config);

/// Names accepted by parse_run_config.
std::vector<std::string> config_keys();

}  // namespace tmt::cli
