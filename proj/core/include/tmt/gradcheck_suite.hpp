#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tmt {

struct GradcheckCase {
  std::string component;  ///< "discriminator", "attention" or "seg_loss"
  std::size_t instance = 0;
  double max_relative_error = 0.0;
};

/// Finite-difference checks of every trainable path on `instances` randomized
/// small problems per component.
std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed, std::size_t instances);

}  // namespace tmt
