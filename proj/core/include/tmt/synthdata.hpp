#pragma once

#include <cstdint>
#include <vector>

#include "tmt/feature_map.hpp"
#include "tmt/transferability.hpp"

namespace tmt {

enum class Layout { Rectangular, Irregular };

/// Two-domain synthetic segmentation benchmark.
///
/// Class c has prototype e_c (a standard basis vector, so prototypes are
/// orthonormal). Target-domain pixels of shifted classes get `shift` times a
/// fixed per-class unit direction added to the prototype.
struct SynthConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 16;
  std::size_t classes = 4;
  std::vector<std::size_t> shifted_classes{2, 3};
  double shift = 1.0;   ///< δ
  double noise = 0.2;   ///< σ
  std::size_t block = 4;  ///< rectangle edges snap to this grid
  Layout layout = Layout::Rectangular;
  std::uint64_t seed = 0;
};

struct LabeledImage {
  FeatureMap features;
  std::vector<int> labels;
  Domain domain = Domain::Source;
  std::vector<std::uint8_t> transferable;  ///< 1 where the pixel's class is not shifted
};

/// Validates the config; throws ConfigError.
void validate(const SynthConfig& config);

/// Unit direction added to the prototype of shifted class `cls` in the target domain.
std::vector<double> shift_direction(const SynthConfig& config, std::size_t cls);

/// `count` images for one domain. `stream` selects an independent split
/// (e.g. train vs. test) under the same seed.
std::vector<LabeledImage> generate(const SynthConfig& config, std::size_t count, Domain domain,
                                   std::uint64_t stream = 0);

bool is_shifted(const SynthConfig& config, std::size_t cls);

}  // namespace tmt
