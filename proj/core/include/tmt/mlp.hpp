#pragma once

#include <span>
#include <vector>

#include "tmt/matrix.hpp"
#include "tmt/params.hpp"
#include "tmt/rng.hpp"

namespace tmt {

/// Fully connected net: ReLU hidden layers, single sigmoid output.
///
/// weights[l] is (in × out); biases[l] is (1 × out).
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;

  std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().rows(); }
  std::size_t layer_count() const { return weights.size(); }

  ParamRefs refs();
  ConstParamRefs refs() const;
  MlpParams zeros_like() const;
};

/// He-initialized net with layer widths `dims` (dims.back() must be 1).
MlpParams make_mlp(std::span<const std::size_t> dims, Rng& rng);

/// Pre-sigmoid output.
double mlp_logit(const MlpParams& p, std::span<const double> x);
/// Probability in (0, 1). Throws InputError on non-finite input or a width mismatch.
double mlp_forward(const MlpParams& p, std::span<const double> x);

/// Cross-entropy L(E, d) = -(d log E + (1-d) log(1-E)), E clamped to
/// [1e-7, 1-1e-7] for this computation only.
double domain_loss(double prob, int label);

struct MlpGradient {
  double loss = 0.0;
  MlpParams grads;
};

/// Loss and parameter gradients for one sample with label d ∈ {0, 1}.
MlpGradient mlp_backward(const MlpParams& p, std::span<const double> x, int label);

/// Mean loss and mean gradients over the rows of `xs`.
MlpGradient mlp_batch_gradient(const MlpParams& p, const Matrix& xs, std::span<const int> labels);

}  // namespace tmt
