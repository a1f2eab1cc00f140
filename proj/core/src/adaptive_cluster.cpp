#include "tmt/adaptive_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

constexpr double kNormGuard = 1e-12;
constexpr double kMassGuard = 1e-12;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

FeatureMap::FeatureMap(std::size_t h, std::size_t w, Matrix f)
    : height(h), width(w), features(std::move(f)) {
  if (features.rows() != h * w) {
    throw ShapeError("feature map has " + std::to_string(features.rows()) + " rows for a " +
                     std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
}

std::size_t ClusterState::cell_of(std::size_t pixel) const {
  const std::size_t y = pixel / width;
  const std::size_t x = pixel % width;
  return (y / stride) * grid_cols + (x / stride);
}

std::span<const std::size_t> ClusterState::neighbors(std::size_t pixel) const {
  return cell_neighbors[cell_of(pixel)];
}

bool ClusterState::is_neighbor(std::size_t region, std::size_t pixel) const {
  auto n = neighbors(pixel);
  return std::binary_search(n.begin(), n.end(), region);
}

ClusterState init_grid(const FeatureMap& fm, std::size_t stride, double temperature) {
  if (fm.height == 0 || fm.width == 0) throw ConfigError("feature map must be non-empty");
  if (stride == 0 || fm.height % stride != 0 || fm.width % stride != 0) {
    throw ConfigError("grid stride " + std::to_string(stride) + " must divide " +
                      std::to_string(fm.height) + "x" + std::to_string(fm.width));
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");

  ClusterState s;
  s.stride = stride;
  s.height = fm.height;
  s.width = fm.width;
  s.grid_rows = fm.height / stride;
  s.grid_cols = fm.width / stride;
  s.temperature = temperature;

  const std::size_t np = s.regions();
  s.cell_neighbors.resize(np);
  for (std::size_t gy = 0; gy < s.grid_rows; ++gy) {
    for (std::size_t gx = 0; gx < s.grid_cols; ++gx) {
      auto& nb = s.cell_neighbors[gy * s.grid_cols + gx];
      const std::size_t y0 = gy == 0 ? 0 : gy - 1;
      const std::size_t x0 = gx == 0 ? 0 : gx - 1;
      const std::size_t y1 = std::min(gy + 1, s.grid_rows - 1);
      const std::size_t x1 = std::min(gx + 1, s.grid_cols - 1);
      for (std::size_t y = y0; y <= y1; ++y) {
        for (std::size_t x = x0; x <= x1; ++x) nb.push_back(y * s.grid_cols + x);
      }
    }
  }

  s.assignment = Matrix(np, fm.pixels());
  for (std::size_t j = 0; j < fm.pixels(); ++j) s.assignment(s.cell_of(j), j) = 1.0;
  s.centers = update_centers(s.assignment, fm);
  s.labels.resize(fm.pixels());
  for (std::size_t j = 0; j < fm.pixels(); ++j) s.labels[j] = s.cell_of(j);
  return s;
}

Matrix compute_similarity(const ClusterState& state, const FeatureMap& fm) {
  if (!(state.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (fm.height != state.height || fm.width != state.width) {
    throw ShapeError("feature map does not match cluster geometry");
  }
  if (state.centers.cols() != fm.channels()) throw ShapeError("center/feature width mismatch");

  const std::size_t np = state.regions();
  std::vector<double> center_norm(np);
  for (std::size_t i = 0; i < np; ++i) center_norm[i] = norm(state.centers.row(i)) + kNormGuard;

  Matrix d(np, fm.pixels(), -std::numeric_limits<double>::infinity());
  const double inv_tau = 1.0 / state.temperature;
  for (std::size_t j = 0; j < fm.pixels(); ++j) {
    auto k = fm.pixel(j);
    const double kn = norm(k) + kNormGuard;
    for (std::size_t i : state.neighbors(j)) {
      auto q = state.centers.row(i);
      double dot = 0.0;
      for (std::size_t c = 0; c < k.size(); ++c) dot += q[c] * k[c];
      d(i, j) = inv_tau * dot / (center_norm[i] * kn);
    }
  }
  return d;
}

Matrix soft_assign(const Matrix& similarity) { return softmax_columns(similarity); }

Matrix update_centers(const Matrix& assignment, const FeatureMap& fm) {
  if (assignment.cols() != fm.pixels()) throw ShapeError("assignment/pixel count mismatch");
  Matrix q = matmul(assignment, fm.features);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double mass = 0.0;
    for (double a : assignment.row(i)) mass += a;
    const double inv = 1.0 / std::max(mass, kMassGuard);
    for (double& v : q.row(i)) v *= inv;
  }
  return q;
}

std::vector<std::size_t> hard_labels(const Matrix& assignment) {
  // Assignments equal up to rounding count as ties.
  constexpr double kTieTolerance = 1e-12;
  std::vector<std::size_t> labels(assignment.cols(), 0);
  for (std::size_t j = 0; j < assignment.cols(); ++j) {
    double best = -1.0;
    for (std::size_t i = 0; i < assignment.rows(); ++i) best = std::max(best, assignment(i, j));
    for (std::size_t i = 0; i < assignment.rows(); ++i) {
      if (assignment(i, j) >= best - kTieTolerance) {
        labels[j] = i;
        break;
      }
    }
  }
  return labels;
}

ClusterState cluster(const FeatureMap& fm, std::size_t stride, double temperature,
                     std::size_t iters) {
  ClusterState s = init_grid(fm, stride, temperature);
  for (std::size_t it = 0; it < iters; ++it) {
    s.assignment = soft_assign(compute_similarity(s, fm));
    s.centers = update_centers(s.assignment, fm);
  }
  s.labels = hard_labels(s.assignment);
  return s;
}

std::vector<std::vector<std::size_t>> region_pixel_lists(const ClusterState& state) {
  std::vector<std::vector<std::size_t>> lists(state.regions());
  for (std::size_t j = 0; j < state.labels.size(); ++j) lists[state.labels[j]].push_back(j);
  return lists;
}

}  // namespace tmt
