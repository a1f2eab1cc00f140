#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tmt/matrix.hpp"

namespace tmt {

inline constexpr double kDefaultMaskThreshold = 0.5;  // λ_M
inline constexpr double kDefaultPercentile = 30.0;    // p_T

/// Nearest-rank percentile: sorted ascending, element ⌈p/100·n⌉ − 1 clamped to
/// [0, n−1]. Throws InputError on empty input or p outside [0, 100].
double percentile_threshold(std::span<const double> values, double percent);

struct MaskInputs {
  Matrix mask_probs;                    ///< N × P predicted mask probabilities
  std::span<const double> transferability;  ///< P pixel scores
  double mask_threshold = kDefaultMaskThreshold;   ///< λ_M
  double transfer_threshold = 1.0;                 ///< λ_T
};

/// Additive attention mask with entries in {0, −∞}.
struct AttentionMask {
  Matrix additive;                 ///< N × P
  std::vector<std::uint8_t> fallback;  ///< per query: row was all −∞ and got reset to 0

  std::size_t fallback_count() const;
};

/// Entry (i, j) is 0 when M(i,j) ≤ λ_M and T(j) ≤ λ_T, −∞ otherwise. Rows
/// left without any admissible key are reset to all zeros and flagged.
AttentionMask build_mask(const MaskInputs& inputs);

/// An all-zero mask (attend everywhere) for N queries over P keys.
AttentionMask open_mask(std::size_t queries, std::size_t keys);

/// Queries are C × N, keys C × P, values P × C (channel-major, as in the
/// attention formula).
struct AttentionInputs {
  Matrix queries;
  Matrix keys;
  Matrix values;
};

struct AttentionResult {
  Matrix output;   ///< N × C
  Matrix weights;  ///< P × N; column n is query n's distribution over keys
};

/// softmax over keys of (KᵀQ/√C + maskᵀ), then weightsᵀ·V.
AttentionResult tma_attention(const AttentionInputs& in, const AttentionMask& mask);

struct AttentionGrads {
  Matrix queries;  ///< C × N
  Matrix keys;     ///< C × P
  Matrix values;   ///< P × C
};

/// Gradients of the masked attention given dL/d(output) (N × C). The mask
/// is a constant.
AttentionGrads tma_attention_backward(const AttentionInputs& in, const AttentionResult& forward,
                                      const Matrix& upstream);

/// Convenience overload that reruns the forward pass.
AttentionGrads tma_attention_backward(const AttentionInputs& in, const AttentionMask& mask,
                                      const Matrix& upstream);

}  // namespace tmt
