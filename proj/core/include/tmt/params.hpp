#pragma once

#include <span>
#include <vector>

#include "tmt/matrix.hpp"

namespace tmt {

/// Non-owning views over a model's trainable tensors, in a fixed order.
using ParamRefs = std::vector<Matrix*>;
using ConstParamRefs = std::vector<const Matrix*>;

std::size_t parameter_count(const ConstParamRefs& params);
std::vector<double> flatten(const ConstParamRefs& params);
/// Writes `flat` back into `params`; throws ShapeError on a length mismatch.
void unflatten(std::span<const double> flat, const ParamRefs& params);

}  // namespace tmt
