#pragma once

#include <functional>
#include <span>
#include <vector>

namespace tmt {

using ScalarFn = std::function<double(std::span<const double>)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> numeric;
};

/// Central differences with step 1e-5.
///
/// Per-parameter error is |analytic − numeric| / max(1e-8, |analytic| + |numeric|);
/// the maximum over parameters is returned. Throws EvaluationError if `f`
/// returns a non-finite value.
GradcheckResult gradcheck(const ScalarFn& f, std::span<const double> params,
                          std::span<const double> analytic, double step = 1e-5);

}  // namespace tmt
