#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tmt/adamw.hpp"
#include "tmt/feature_map.hpp"
#include "tmt/matrix.hpp"
#include "tmt/params.hpp"
#include "tmt/rng.hpp"
#include "tmt/tma.hpp"

namespace tmt {

struct SegModelConfig {
  std::size_t in_channels = 16;
  std::size_t channels = 16;     ///< C
  std::size_t queries = 8;       ///< N
  std::size_t layers = 3;        ///< L
  std::size_t classes = 4;       ///< excluding the no-object class
  std::size_t ffn_hidden = 32;
  std::size_t patch_radius = 0;  ///< patch = (2r+1)² pixel window

  std::size_t patch_dim() const {
    const std::size_t side = 2 * patch_radius + 1;
    return in_channels * side * side;
  }
};

struct DecoderLayer {
  Matrix query_proj;  ///< C × C
  Matrix ffn_w1;      ///< C × F
  Matrix ffn_b1;      ///< 1 × F
  Matrix ffn_w2;      ///< F × C
  Matrix ffn_b2;      ///< 1 × C
};

/// Query-based segmentation head. Keys and values are shared projections of
/// the pixel embedding; each decoder layer refines the queries with masked
/// attention followed by a residual feed-forward block.
struct SegModelParams {
  SegModelConfig config;
  Matrix embed_w;     ///< patch_dim × C
  Matrix embed_b;     ///< 1 × C
  Matrix query_init;  ///< N × C
  Matrix key_proj;    ///< C × C
  Matrix value_proj;  ///< C × C
  std::vector<DecoderLayer> layers;
  Matrix class_w;     ///< C × (classes + 1)
  Matrix class_b;     ///< 1 × (classes + 1)
  Matrix mask_w;      ///< C × C
  Matrix mask_b;      ///< 1 × C

  ParamRefs refs();
  ConstParamRefs refs() const;
  SegModelParams zeros_like() const;
};

SegModelParams make_seg_model(const SegModelConfig& config, Rng& rng);

/// Attention gating for one forward pass.
struct GateOptions {
  double mask_threshold = kDefaultMaskThreshold;  ///< λ_M
  /// Pixel transferability; when empty the λ_T condition is disabled.
  std::span<const double> transferability;
  double percentile = kDefaultPercentile;  ///< p_T, selects λ_T per image
};

struct SegPrediction {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  Matrix class_logits;  ///< N × (classes + 1)
  Matrix mask_logits;   ///< N × H·W
  Matrix class_probs;
  Matrix mask_probs;
  std::vector<int> labels;  ///< per pixel
  std::size_t fallback_rows = 0;  ///< mask rows reset over all layers
  std::size_t mask_rows = 0;      ///< rows built over all layers
  /// Smallest |M − λ_M| over every gated mask entry; how far the hard mask is from flipping.
  double mask_margin = std::numeric_limits<double>::infinity();
};

/// Fills class/mask probabilities and per-pixel labels from the logits.
void finalize_prediction(SegPrediction& pred);

/// Raw pixel windows (zero padded) as rows of a H·W × patch_dim matrix.
Matrix extract_patches(const FeatureMap& fm, std::size_t radius);

SegPrediction seg_forward(const SegModelParams& params, const FeatureMap& fm,
                          const GateOptions& gate);

struct SegLoss {
  double value = 0.0;
  Matrix d_class_logits;
  Matrix d_mask_logits;
};

/// Fixed query↔class assignment: query n < classes owns class n and gets a
/// per-pixel binary mask loss; every query gets a class cross-entropy, with
/// queries ≥ classes targeting no-object. `pixel_weights` (optional, H·W)
/// scales the per-pixel mask terms. Throws InputError on out-of-range labels.
SegLoss seg_loss(const SegPrediction& pred, std::span<const int> labels,
                 std::span<const double> pixel_weights = {});

struct SegLossAndGrad {
  double loss = 0.0;
  SegModelParams grads;
  SegPrediction prediction;
};

SegLossAndGrad seg_loss_and_grad(const SegModelParams& params, const FeatureMap& fm,
                                 std::span<const int> labels, const GateOptions& gate,
                                 std::span<const double> pixel_weights = {});

struct TrainSample {
  const FeatureMap* features = nullptr;
  std::span<const int> labels;
  std::span<const double> transferability;  ///< empty → ungated
  std::span<const double> pixel_weights;    ///< empty → uniform
};

struct TrainConfig {
  std::size_t steps = 300;
  std::size_t batch_size = 8;
  AdamWConfig optimizer{};
  double mask_threshold = kDefaultMaskThreshold;
  double percentile = kDefaultPercentile;
  std::uint64_t seed = 0;
};

struct TrainResult {
  SegModelParams params;
  std::vector<double> loss_log;  ///< mean batch loss per step
};

/// AdamW over seeded shuffled mini-batches.
TrainResult train(SegModelParams params, const std::vector<TrainSample>& dataset,
                  const TrainConfig& config);

}  // namespace tmt
