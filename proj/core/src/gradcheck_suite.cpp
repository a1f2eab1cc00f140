#include "tmt/gradcheck_suite.hpp"

#include <utility>

#include "tmt/gradcheck.hpp"
#include "tmt/mlp.hpp"
#include "tmt/params.hpp"
#include "tmt/rng.hpp"
#include "tmt/segmodel.hpp"
#include "tmt/tma.hpp"

namespace tmt {

namespace {

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

// Fresh models have zero biases; with every unit of a layer inactive the next
// pre-activation is exactly 0, a ReLU kink. Jitter moves instances off it.
void jitter(const ParamRefs& params, Rng& rng) {
  for (Matrix* m : params) {
    for (double& v : m->values()) v += rng.normal(0.0, 0.1);
  }
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

double check_discriminator(Rng& rng) {
  const std::vector<std::size_t> dims{between(rng, 2, 6), between(rng, 3, 8), between(rng, 3, 8), 1};
  MlpParams p = make_mlp(dims, rng);
  jitter(p.refs(), rng);
  std::vector<double> x(dims.front());
  for (double& v : x) v = rng.normal();
  const int label = static_cast<int>(rng.index(2));
  const MlpGradient g = mlp_backward(p, x, label);
  auto f = [&](std::span<const double> flat) {
    MlpParams q = p;
    unflatten(flat, q.refs());
    return domain_loss(mlp_forward(q, x), label);
  };
  return gradcheck(f, flatten(std::as_const(p).refs()), flatten(std::as_const(g.grads).refs())).max_relative_error;
}

double check_attention(Rng& rng) {
  const std::size_t c = between(rng, 2, 5), n = between(rng, 1, 4), keys = between(rng, 3, 10);
  AttentionInputs in{random_matrix(c, n, rng), random_matrix(c, keys, rng), random_matrix(keys, c, rng)};
  Matrix probs(n, keys);
  for (double& v : probs.values()) v = rng.uniform();
  std::vector<double> t(keys);
  for (double& v : t) v = rng.uniform();
  const AttentionMask mask = build_mask({probs, t, rng.uniform(), percentile_threshold(t, 50)});
  const Matrix up = random_matrix(n, c, rng);
  const AttentionGrads g = tma_attention_backward(in, mask, up);
  auto f = [&](std::span<const double> flat) {
    AttentionInputs probe = in;
    unflatten(flat, ParamRefs{&probe.queries, &probe.keys, &probe.values});
    const Matrix out = tma_attention(probe, mask).output;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * up.values()[i];
    return s;
  };
  return gradcheck(f, flatten(ConstParamRefs{&in.queries, &in.keys, &in.values}),
                   flatten(ConstParamRefs{&g.queries, &g.keys, &g.values}))
      .max_relative_error;
}

// The attention mask is a constant of the backward pass; instances whose mask
// probabilities sit within this distance of λ_M are redrawn so a finite
// difference step cannot flip an entry.
constexpr double kMinMaskMargin = 1e-4;

double check_seg_loss(Rng& rng) {
  for (;;) {
    SegModelConfig cfg;
    cfg.in_channels = between(rng, 2, 4);
    cfg.channels = between(rng, 3, 5);
    cfg.classes = between(rng, 2, 3);
    cfg.queries = cfg.classes + between(rng, 0, 2);
    cfg.layers = between(rng, 1, 2);
    cfg.ffn_hidden = between(rng, 3, 6);
    cfg.patch_radius = rng.index(2);
    SegModelParams p = make_seg_model(cfg, rng);
    jitter(p.refs(), rng);
    FeatureMap fm(8, 8, cfg.in_channels);
    for (double& v : fm.features.values()) v = rng.normal();
    std::vector<int> labels(fm.pixels());
    for (int& l : labels) l = static_cast<int>(rng.index(cfg.classes));
    std::vector<double> t(fm.pixels()), w(fm.pixels());
    for (double& v : t) v = rng.uniform();
    for (double& v : w) v = 1.0 + rng.uniform();
    const GateOptions gate{0.5, t, rng.uniform(30.0, 100.0)};
    const SegLossAndGrad lg = seg_loss_and_grad(p, fm, labels, gate, w);
    if (lg.prediction.mask_margin < kMinMaskMargin) continue;
    auto f = [&](std::span<const double> flat) {
      SegModelParams q = p;
      unflatten(flat, q.refs());
      return seg_loss(seg_forward(q, fm, gate), labels, w).value;
    };
    return gradcheck(f, flatten(std::as_const(p).refs()), flatten(std::as_const(lg.grads).refs()))
        .max_relative_error;
  }
}

}  // namespace

std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed, std::size_t instances) {
  std::vector<GradcheckCase> out;
  const std::pair<const char*, double (*)(Rng&)> checks[] = {
      {"discriminator", check_discriminator},
      {"attention", check_attention},
      {"seg_loss", check_seg_loss},
  };
  for (std::size_t k = 0; k < std::size(checks); ++k) {
    for (std::size_t i = 0; i < instances; ++i) {
      Rng rng(seed, {0x9c, k, i});
      out.push_back({checks[k].first, i, checks[k].second(rng)});
    }
  }
  return out;
}

}  // namespace tmt
