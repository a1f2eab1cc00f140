#pragma once

#include <cstddef>
#include <span>

#include "tmt/matrix.hpp"

namespace tmt {

/// Per-pixel feature vectors on an H×W grid. Pixel j = y·W + x is row j of
/// `features` (H·W × channels).
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix features;

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t channels)
      : height(h), width(w), features(h * w, channels) {}
  FeatureMap(std::size_t h, std::size_t w, Matrix f);

  std::size_t channels() const { return features.cols(); }
  std::size_t pixels() const { return height * width; }
  std::span<const double> pixel(std::size_t j) const { return features.row(j); }
  std::span<double> pixel(std::size_t j) { return features.row(j); }
};

}  // namespace tmt
