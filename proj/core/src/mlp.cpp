#include "tmt/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

constexpr double kProbClamp = 1e-7;

void check_input(const MlpParams& p, std::span<const double> x) {
  if (p.weights.empty()) throw InputError("mlp has no layers");
  if (x.size() != p.input_dim()) {
    throw InputError("mlp input width " + std::to_string(x.size()) + ", expected " +
                     std::to_string(p.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("mlp input contains a non-finite value");
  }
}

void check_label(int label) {
  if (label != 0 && label != 1) {
    throw InputError("domain label must be 0 or 1, got " + std::to_string(label));
  }
}

// Activations per layer; acts[0] is the input, acts[l+1] the post-activation
// output of layer l (the last entry holds the logit).
std::vector<std::vector<double>> forward_trace(const MlpParams& p, std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  acts.reserve(p.layer_count() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const Matrix& w = p.weights[l];
    const auto& in = acts.back();
    std::vector<double> out(p.biases[l].row(0).begin(), p.biases[l].row(0).end());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double xi = in[i];
      if (xi == 0.0) continue;
      auto wr = w.row(i);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += xi * wr[j];
    }
    if (l + 1 < p.layer_count()) {
      for (double& v : out) v = std::max(v, 0.0);
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

ParamRefs MlpParams::refs() {
  ParamRefs out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

ConstParamRefs MlpParams::refs() const {
  ConstParamRefs out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    z.weights.emplace_back(weights[l].rows(), weights[l].cols());
    z.biases.emplace_back(biases[l].rows(), biases[l].cols());
  }
  return z;
}

MlpParams make_mlp(std::span<const std::size_t> dims, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  if (dims.back() != 1) throw ConfigError("mlp output width must be 1");
  MlpParams p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) throw ConfigError("mlp layer width must be positive");
    Matrix w(dims[l], dims[l + 1]);
    const double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (double& v : w.values()) v = rng.normal(0.0, scale);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(1, dims[l + 1]);
  }
  return p;
}

double mlp_logit(const MlpParams& p, std::span<const double> x) {
  check_input(p, x);
  return forward_trace(p, x).back()[0];
}

double mlp_forward(const MlpParams& p, std::span<const double> x) {
  return sigmoid(mlp_logit(p, x));
}

double domain_loss(double prob, int label) {
  check_label(label);
  const double e = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(e) : -std::log(1.0 - e);
}

MlpGradient mlp_backward(const MlpParams& p, std::span<const double> x, int label) {
  check_input(p, x);
  check_label(label);
  const auto acts = forward_trace(p, x);
  const double prob = sigmoid(acts.back()[0]);

  MlpGradient out;
  out.loss = domain_loss(prob, label);
  out.grads = p.zeros_like();

  // dL/dlogit = E - d while the clamp is inactive; the clamped loss is flat outside.
  const bool clamped = prob < kProbClamp || prob > 1.0 - kProbClamp;
  std::vector<double> delta{clamped ? 0.0 : prob - static_cast<double>(label)};

  for (std::size_t l = p.layer_count(); l-- > 0;) {
    const auto& in = acts[l];
    Matrix& gw = out.grads.weights[l];
    Matrix& gb = out.grads.biases[l];
    for (std::size_t j = 0; j < delta.size(); ++j) gb(0, j) = delta[j];
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] == 0.0) continue;
      auto gr = gw.row(i);
      for (std::size_t j = 0; j < delta.size(); ++j) gr[j] = in[i] * delta[j];
    }
    if (l == 0) break;
    std::vector<double> prev(in.size(), 0.0);
    const Matrix& w = p.weights[l];
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] <= 0.0) continue;  // ReLU gate
      auto wr = w.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < delta.size(); ++j) s += wr[j] * delta[j];
      prev[i] = s;
    }
    delta = std::move(prev);
  }
  return out;
}

MlpGradient mlp_batch_gradient(const MlpParams& p, const Matrix& xs, std::span<const int> labels) {
  if (xs.rows() != labels.size()) throw ShapeError("batch rows and label count differ");
  if (xs.rows() == 0) throw InputError("empty batch");
  MlpGradient total;
  total.grads = p.zeros_like();
  auto dst = total.grads.refs();
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    MlpGradient g = mlp_backward(p, xs.row(i), labels[i]);
    total.loss += g.loss;
    auto src = g.grads.refs();
    for (std::size_t k = 0; k < dst.size(); ++k) add_inplace(*dst[k], *src[k]);
  }
  const double inv = 1.0 / static_cast<double>(xs.rows());
  total.loss *= inv;
  for (Matrix* m : dst) {
    for (double& v : m->values()) v *= inv;
  }
  return total;
}

}  // namespace tmt
