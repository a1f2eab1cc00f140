#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmt/adaptive_cluster.hpp"
#include "tmt/matrix.hpp"
#include "tmt/mlp.hpp"

namespace tmt {

/// Domain label convention: the discriminator is trained toward the numeric label.
enum class Domain : int { Target = 0, Source = 1 };

struct DomainSample {
  std::vector<double> feature;
  int label = 0;  ///< 1 = source, 0 = target
};

struct DiscriminatorConfig {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double held_out_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct EpochLog {
  double loss = 0.0;
  double held_out_accuracy = 0.0;  ///< balanced accuracy
};

struct TrainedDiscriminator {
  MlpParams params;
  std::vector<EpochLog> log;
  std::vector<DomainSample> held_out;
  std::string provenance;
};

/// Trains the domain discriminator on region features with AdamW.
///
/// Samples are split 80/20 by a seeded shuffle within each domain. Every batch
/// draws half of its samples uniformly from each domain's training part.
/// Throws InputError when either domain is empty.
TrainedDiscriminator train_discriminator(const std::vector<std::vector<double>>& source_regions,
                                         const std::vector<std::vector<double>>& target_regions,
                                         const DiscriminatorConfig& config);

/// Balanced (mean per-domain) accuracy of E > 0.5 ⇔ source.
double balanced_accuracy(const MlpParams& params, const std::vector<DomainSample>& samples);

/// 2·min(E, 1−E): one when the discriminator is maximally confused.
double transferability_from_probability(double prob);
double region_transferability(const MlpParams& params, std::span<const double> region_feature);

struct TransferabilityMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> region_scores;  ///< per region id, in [0, 1]
  std::vector<bool> region_empty;
  std::vector<double> pixel_scores;   ///< H·W, equal to the pixel's region score
  std::string provenance;
};

/// Scores every region center and broadcasts each score onto its pixels.
TransferabilityMap build_transferability_map(const MlpParams& params, const ClusterState& state,
                                             std::string provenance = {});

struct PadEstimate {
  double epsilon = 0.0;   ///< held-out balanced error
  double distance = 0.0;  ///< 2·(1 − 2ε), in [−2, 2]
};

PadEstimate pad_from_error(double epsilon);
/// Throws InputError unless both domains appear in `held_out`.
PadEstimate compute_pad(const MlpParams& params, const std::vector<DomainSample>& held_out);

/// Features of every non-empty region, in region-id order.
std::vector<std::vector<double>> region_features(const ClusterState& state);

}  // namespace tmt
