#include "tmt/adamw.hpp"

#include <cmath>

#include "tmt/errors.hpp"

namespace tmt {

AdamWState::AdamWState(AdamWConfig cfg, const ConstParamRefs& params) : config(cfg) {
  for (const Matrix* p : params) {
    first_moment.emplace_back(p->rows(), p->cols());
    second_moment.emplace_back(p->rows(), p->cols());
  }
}

void adamw_step(AdamWState& state, const ParamRefs& params, const ConstParamRefs& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adamw: parameter, gradient and state counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(*grads[k]) || !params[k]->same_shape(state.first_moment[k])) {
      throw ShapeError("adamw: tensor " + std::to_string(k) + " shape mismatch");
    }
  }

  const AdamWConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->values();
    auto g = grads[k]->values();
    auto m = state.first_moment[k].values();
    auto v = state.second_moment[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= c.lr * c.weight_decay * p[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace tmt
