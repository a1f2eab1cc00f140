#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "tmt/adamw.hpp"
#include "tmt/errors.hpp"
#include "tmt/gradcheck.hpp"
#include "tmt/mlp.hpp"

namespace tmt {
namespace {

MlpParams random_mlp(std::vector<std::size_t> dims, std::uint64_t seed) {
  Rng rng(seed);
  MlpParams p = make_mlp(dims, rng);
  for (auto& b : p.biases) {
    for (double& v : b.values()) v = rng.normal(0.0, 0.3);
  }
  return p;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

TEST(MlpForwardTest, ZeroNetworkGivesOneHalf) {
  Rng rng(0);
  std::vector<std::size_t> dims{3, 4, 1};
  MlpParams p = make_mlp(dims, rng);
  for (Matrix* m : p.refs()) m->fill(0.0);
  EXPECT_DOUBLE_EQ(mlp_forward(p, std::vector<double>{1.0, -2.0, 0.5}), 0.5);
}

TEST(MlpForwardTest, OutputSaturatesMonotonicallyWithFinalBias) {
  MlpParams p = random_mlp({4, 3, 1}, 3);
  const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
  double prev = 0.0;
  for (double b : {-2.0, 0.0, 2.0, 5.0, 10.0}) {
    p.weights.back().fill(0.0);
    p.biases.back()(0, 0) = b;
    const double y = mlp_forward(p, x);
    EXPECT_GT(y, prev);
    prev = y;
  }
  EXPECT_GT(prev, 0.999);
}

TEST(MlpForwardTest, MatchesLayerByLayerOracle) {
  MlpParams p = random_mlp({4, 2, 1}, 5);
  Rng rng(9);
  const auto x = random_vec(4, rng);
  double h[2];
  for (int j = 0; j < 2; ++j) {
    double s = p.biases[0](0, j);
    for (int i = 0; i < 4; ++i) s += x[i] * p.weights[0](i, j);
    h[j] = s > 0.0 ? s : 0.0;
  }
  const double z = p.biases[1](0, 0) + h[0] * p.weights[1](0, 0) + h[1] * p.weights[1](1, 0);
  EXPECT_NEAR(mlp_forward(p, x), 1.0 / (1.0 + std::exp(-z)), 1e-12);
}

TEST(MlpForwardTest, RejectsNonFiniteAndMisSizedInput) {
  MlpParams p = random_mlp({2, 2, 1}, 1);
  EXPECT_THROW(mlp_forward(p, std::vector<double>{1.0, std::nan("")}), InputError);
  EXPECT_THROW(mlp_forward(p, std::vector<double>{1.0, 2.0, 3.0}), InputError);
}

TEST(MlpBackwardTest, GradcheckPerParameter) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MlpParams p = random_mlp({5, 6, 4, 1}, seed);
    Rng rng(seed + 100);
    const auto x = random_vec(5, rng);
    for (int label : {0, 1}) {
      const MlpGradient g = mlp_backward(p, x, label);
      auto f = [&](std::span<const double> flat) {
        MlpParams q = p;
        unflatten(flat, q.refs());
        return domain_loss(mlp_forward(q, x), label);
      };
      const auto res = gradcheck(f, flatten(std::as_const(p).refs()), flatten(std::as_const(g.grads).refs()));
      EXPECT_LE(res.max_relative_error, 1e-4) << "seed " << seed << " label " << label;
    }
  }
}

TEST(MlpBackwardTest, OutputBiasGradientIsPredictionMinusLabel) {
  MlpParams p = random_mlp({3, 4, 1}, 2);
  const std::vector<double> x{0.3, -0.1, 0.7};
  const double e = mlp_forward(p, x);
  for (int d : {0, 1}) {
    const MlpGradient g = mlp_backward(p, x, d);
    EXPECT_NEAR(g.grads.biases.back()(0, 0), -(d - e), 1e-12);
  }
}

TEST(MlpBackwardTest, LossVanishesWhenPredictionMatchesLabel) {
  MlpParams p = random_mlp({2, 2, 1}, 4);
  p.weights.back().fill(0.0);
  p.biases.back()(0, 0) = 40.0;  // E(x) == 1 to double precision
  const MlpGradient g = mlp_backward(p, std::vector<double>{0.5, 0.5}, 1);
  EXPECT_NEAR(g.loss, 1e-7, 1e-9);  // clamped log
  EXPECT_EQ(g.grads.biases.back()(0, 0), 0.0);
}

TEST(MlpBackwardTest, GradientsAreLinearInSamples) {
  MlpParams p = random_mlp({3, 5, 1}, 8);
  const std::vector<double> x{1.0, -0.5, 0.25};
  const MlpGradient one = mlp_backward(p, x, 1);
  // Sum reduction over a duplicated sample doubles every entry.
  MlpParams sum = p.zeros_like();
  for (int rep = 0; rep < 2; ++rep) {
    auto dst = sum.refs();
    auto src = std::as_const(one.grads).refs();
    for (std::size_t k = 0; k < dst.size(); ++k) add_inplace(*dst[k], *src[k]);
  }
  const auto a = flatten(std::as_const(sum).refs());
  const auto b = flatten(std::as_const(one.grads).refs());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], 2.0 * b[i]);

  // Mean reduction over the duplicated batch equals the single-sample gradient.
  Matrix xs(2, 3);
  std::copy(x.begin(), x.end(), xs.row(0).begin());
  std::copy(x.begin(), x.end(), xs.row(1).begin());
  const std::vector<int> labels{1, 1};
  const MlpGradient mean = mlp_batch_gradient(p, xs, labels);
  const auto c = flatten(std::as_const(mean.grads).refs());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], b[i], 1e-15);
}

TEST(MlpBackwardTest, RejectsNonBinaryLabel) {
  MlpParams p = random_mlp({2, 2, 1}, 0);
  EXPECT_THROW(mlp_backward(p, std::vector<double>{0.0, 0.0}, 2), InputError);
}

TEST(AdamWTest, ZeroGradientZeroDecayLeavesParamsUnchanged) {
  Matrix w{{1.0, -2.0}, {3.0, 0.5}};
  const Matrix before = w;
  Matrix g(2, 2);
  AdamWState s({.lr = 0.1, .weight_decay = 0.0}, {&w});
  for (int i = 0; i < 10; ++i) adamw_step(s, {&w}, {&g});
  EXPECT_EQ(w, before);
}

TEST(AdamWTest, ZeroLearningRateIsBitwiseNoOp) {
  Matrix w{{1.0, -2.0, 0.3}};
  const Matrix before = w;
  Matrix g{{0.5, -1.0, 2.0}};
  AdamWState s({.lr = 0.0, .weight_decay = 0.01}, {&w});
  for (int i = 0; i < 5; ++i) adamw_step(s, {&w}, {&g});
  EXPECT_EQ(w, before);
  EXPECT_EQ(s.step, 5u);
}

TEST(AdamWTest, ConstantGradientMovesAgainstItsSign) {
  Matrix w{{0.0, 0.0}};
  Matrix g{{2.5, -0.01}};
  AdamWState s({.lr = 1e-3, .weight_decay = 0.0}, {&w});
  Matrix prev = w;
  for (int i = 0; i < 200; ++i) {
    adamw_step(s, {&w}, {&g});
    const double d0 = w(0, 0) - prev(0, 0);
    const double d1 = w(0, 1) - prev(0, 1);
    EXPECT_NEAR(d0, -1e-3, 1e-6);  // |m̂/√v̂| → 1 for a constant gradient
    EXPECT_NEAR(d1, 1e-3, 1e-6);
    prev = w;
  }
}

TEST(AdamWTest, OneStepMatchesFormula) {
  Matrix w{{0.7, -1.3}};
  Matrix g{{0.2, 0.05}};
  const AdamWConfig c{.lr = 0.01, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8, .weight_decay = 0.1};
  AdamWState s(c, {&w});
  adamw_step(s, {&w}, {&g});
  for (int i = 0; i < 2; ++i) {
    const double p0 = i == 0 ? 0.7 : -1.3;
    const double gi = g(0, i);
    const double m = (1 - c.beta1) * gi / (1 - c.beta1);
    const double v = (1 - c.beta2) * gi * gi / (1 - c.beta2);
    const double expected = p0 - c.lr * c.weight_decay * p0 - c.lr * m / (std::sqrt(v) + c.eps);
    EXPECT_NEAR(w(0, i), expected, 1e-12);
  }
}

TEST(AdamWTest, ShapeMismatchThrows) {
  Matrix w(2, 2);
  Matrix g(2, 3);
  AdamWState s({}, {&w});
  EXPECT_THROW(adamw_step(s, {&w}, {&g}), ShapeError);
}

TEST(GradcheckTest, ExactQuadraticGradient) {
  auto f = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i + 1.0) * x[i] * x[i] + x[i];
    return s;
  };
  const std::vector<double> x{0.3, -1.2, 2.0};
  std::vector<double> g(3);
  for (std::size_t i = 0; i < 3; ++i) g[i] = 2.0 * (i + 1.0) * x[i] + 1.0;
  EXPECT_LE(gradcheck(f, x, g).max_relative_error, 1e-7);
}

TEST(GradcheckTest, FlagsGradientOffByFactorTwo) {
  auto f = [](std::span<const double> x) { return x[0] * x[0] * x[0] + 2.0 * x[1] * x[1]; };
  const std::vector<double> x{1.1, -0.7};
  const std::vector<double> wrong{2.0 * 3.0 * x[0] * x[0], 2.0 * 4.0 * x[1]};
  const auto res = gradcheck(f, x, wrong);
  EXPECT_NEAR(res.max_relative_error, 1.0 / 3.0, 1e-6);
  EXPECT_GT(res.max_relative_error, 1e-4);
}

TEST(GradcheckTest, NonFiniteFunctionThrows) {
  auto f = [](std::span<const double> x) { return std::log(x[0]); };
  const std::vector<double> x{0.0};
  const std::vector<double> g{1.0};
  EXPECT_THROW(gradcheck(f, x, g), EvaluationError);
}

}  // namespace
}  // namespace tmt
