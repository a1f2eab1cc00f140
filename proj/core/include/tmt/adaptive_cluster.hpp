#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tmt/feature_map.hpp"
#include "tmt/matrix.hpp"

namespace tmt {

inline constexpr double kDefaultTemperature = 0.07;
inline constexpr std::size_t kDefaultStride = 4;
inline constexpr std::size_t kDefaultClusterIters = 6;

/// Locally constrained soft clustering of a feature map into grid-seeded regions.
///
/// Regions start as the cells of an r×r grid. Each pixel may only be assigned
/// to the centers of the 3×3 block of cells around its own cell (clipped at
/// the image border), so `assignment(i, j)` is exactly zero whenever region i
/// is not in pixel j's neighborhood.
struct ClusterState {
  std::size_t stride = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double temperature = kDefaultTemperature;

  Matrix centers;      ///< N_p × channels
  Matrix assignment;   ///< N_p × H·W, column-stochastic
  std::vector<std::size_t> labels;  ///< hard region id per pixel; empty until assigned

  std::size_t regions() const { return grid_rows * grid_cols; }
  std::size_t cell_of(std::size_t pixel) const;
  /// Region ids adjacent to the pixel's cell, ascending.
  std::span<const std::size_t> neighbors(std::size_t pixel) const;
  bool is_neighbor(std::size_t region, std::size_t pixel) const;

  std::vector<std::vector<std::size_t>> cell_neighbors;  ///< per grid cell
};

/// Seeds one region per r×r cell with the cell's mean feature and a one-hot
/// assignment. Throws ConfigError unless r divides both H and W.
ClusterState init_grid(const FeatureMap& fm, std::size_t stride,
                       double temperature = kDefaultTemperature);

/// D(i,j) = cos(Q_i, K_j)/τ for neighboring regions, −∞ elsewhere.
/// Norms get 1e-12 added so zero vectors never divide by zero.
Matrix compute_similarity(const ClusterState& state, const FeatureMap& fm);

/// Column softmax of the similarity matrix.
Matrix soft_assign(const Matrix& similarity);

/// Weighted mean of pixel features per region: (A·K)_i / max(Σ_j A_ij, 1e-12).
Matrix update_centers(const Matrix& assignment, const FeatureMap& fm);

/// Per-pixel argmax over the assignment, ties to the lowest region index.
std::vector<std::size_t> hard_labels(const Matrix& assignment);

/// Runs `iters` rounds of similarity → soft assignment → center update, then
/// derives hard labels. iters = 0 returns the regular grid partition.
ClusterState cluster(const FeatureMap& fm, std::size_t stride, double temperature,
                     std::size_t iters = kDefaultClusterIters);

/// Pixels of each region by hard label; regions with no pixels yield empty lists.
std::vector<std::vector<std::size_t>> region_pixel_lists(const ClusterState& state);

}  // namespace tmt
