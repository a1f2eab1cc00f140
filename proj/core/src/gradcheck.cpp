#include "tmt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

double eval_checked(const ScalarFn& f, std::span<const double> x) {
  const double v = f(x);
  if (!std::isfinite(v)) throw EvaluationError("gradcheck: function returned a non-finite value");
  return v;
}

}  // namespace

GradcheckResult gradcheck(const ScalarFn& f, std::span<const double> params,
                          std::span<const double> analytic, double step) {
  if (params.size() != analytic.size()) {
    throw ShapeError("gradcheck: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(analytic.size()) + " gradient entries");
  }
  std::vector<double> x(params.begin(), params.end());
  eval_checked(f, x);

  GradcheckResult res;
  res.numeric.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = eval_checked(f, x);
    x[i] = orig - step;
    const double down = eval_checked(f, x);
    x[i] = orig;
    const double num = (up - down) / (2.0 * step);
    res.numeric[i] = num;
    const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(num));
    const double err = std::abs(analytic[i] - num) / denom;
    if (err > res.max_relative_error) {
      res.max_relative_error = err;
      res.worst_index = i;
    }
  }
  return res;
}

}  // namespace tmt
