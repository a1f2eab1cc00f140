#include "tmt/tma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const AttentionInputs& in, const AttentionMask& mask) {
  const std::size_t c = in.queries.rows();
  const std::size_t n = in.queries.cols();
  const std::size_t p = in.keys.cols();
  if (c == 0 || n == 0 || p == 0) throw ShapeError("attention inputs must be non-empty");
  if (in.keys.rows() != c) throw ShapeError("keys and queries disagree on channel count");
  if (in.values.rows() != p || in.values.cols() != c) {
    throw ShapeError("values must be (keys) x (channels)");
  }
  if (mask.additive.rows() != n || mask.additive.cols() != p) {
    throw ShapeError("mask must be " + std::to_string(n) + "x" + std::to_string(p));
  }
}

}  // namespace

double percentile_threshold(std::span<const double> values, double percent) {
  if (values.empty()) throw InputError("percentile of an empty set");
  if (!(percent >= 0.0 && percent <= 100.0)) throw InputError("percentile must be in [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Rounding guard so that e.g. 30% of 10 lands on rank 3 exactly.
  const double rank = std::ceil(percent / 100.0 * n - 1e-9);
  const auto idx = static_cast<std::ptrdiff_t>(rank) - 1;
  const auto clamped =
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
  return sorted[static_cast<std::size_t>(clamped)];
}

std::size_t AttentionMask::fallback_count() const {
  return static_cast<std::size_t>(std::count(fallback.begin(), fallback.end(), 1));
}

AttentionMask build_mask(const MaskInputs& in) {
  const std::size_t n = in.mask_probs.rows();
  const std::size_t p = in.mask_probs.cols();
  if (in.transferability.size() != p) {
    throw ShapeError("transferability has " + std::to_string(in.transferability.size()) +
                     " entries for " + std::to_string(p) + " keys");
  }
  AttentionMask mask;
  mask.additive = Matrix(n, p, kNegInf);
  mask.fallback.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = mask.additive.row(i);
    bool any = false;
    for (std::size_t j = 0; j < p; ++j) {
      if (in.mask_probs(i, j) <= in.mask_threshold &&
          in.transferability[j] <= in.transfer_threshold) {
        row[j] = 0.0;
        any = true;
      }
    }
    if (!any) {
      std::fill(row.begin(), row.end(), 0.0);
      mask.fallback[i] = 1;
    }
  }
  return mask;
}

AttentionMask open_mask(std::size_t queries, std::size_t keys) {
  AttentionMask m;
  m.additive = Matrix(queries, keys, 0.0);
  m.fallback.assign(queries, 0);
  return m;
}

AttentionResult tma_attention(const AttentionInputs& in, const AttentionMask& mask) {
  check_shapes(in, mask);
  const std::size_t c = in.queries.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));

  Matrix scores = matmul_tn(in.keys, in.queries);  // P × N
  for (std::size_t j = 0; j < scores.rows(); ++j) {
    auto r = scores.row(j);
    for (std::size_t q = 0; q < r.size(); ++q) r[q] = r[q] * scale + mask.additive(q, j);
  }
  AttentionResult res;
  res.weights = softmax_columns(scores);
  res.output = matmul_tn(res.weights, in.values);  // N × C
  return res;
}

AttentionGrads tma_attention_backward(const AttentionInputs& in, const AttentionResult& fwd,
                                      const Matrix& upstream) {
  const std::size_t c = in.queries.rows();
  const std::size_t n = in.queries.cols();
  if (upstream.rows() != n || upstream.cols() != c) {
    throw ShapeError("upstream gradient must be queries x channels");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));

  AttentionGrads g;
  g.values = matmul(fwd.weights, upstream);                  // P × C
  Matrix d_weights = matmul_nt(in.values, upstream);         // P × N
  Matrix d_scores(d_weights.rows(), d_weights.cols());
  for (std::size_t q = 0; q < n; ++q) {
    double dot = 0.0;
    for (std::size_t j = 0; j < d_weights.rows(); ++j) dot += fwd.weights(j, q) * d_weights(j, q);
    for (std::size_t j = 0; j < d_weights.rows(); ++j) {
      d_scores(j, q) = fwd.weights(j, q) * (d_weights(j, q) - dot) * scale;
    }
  }
  g.queries = matmul(in.keys, d_scores);       // C × N
  g.keys = matmul_nt(in.queries, d_scores);    // C × P
  return g;
}

AttentionGrads tma_attention_backward(const AttentionInputs& in, const AttentionMask& mask,
                                      const Matrix& upstream) {
  return tma_attention_backward(in, tma_attention(in, mask), upstream);
}

}  // namespace tmt
