#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "tmt/errors.hpp"
#include "tmt/metrics.hpp"
#include "tmt/rng.hpp"

namespace tmt {
namespace {

TEST(MetricsTest, HandComputedConfusionMatrix) {
  const ConfusionMatrix cm(2, {50, 10, 20, 20});
  const auto iou = per_class_iou(cm);
  EXPECT_DOUBLE_EQ(iou[0], 50.0 / 80.0);
  EXPECT_DOUBLE_EQ(iou[1], 20.0 / 50.0);
  EXPECT_NEAR(miou(cm), 0.5125, 1e-12);
  EXPECT_NEAR(macc(cm), (50.0 / 60.0 + 20.0 / 40.0) / 2.0, 1e-12);
  EXPECT_EQ(cm.total(), 100u);
}

TEST(MetricsTest, PerfectAndDisjoint) {
  const std::vector<int> truth{0, 1, 2, 2, 1};
  ConfusionMatrix perfect(3);
  perfect.add(truth, truth);
  EXPECT_DOUBLE_EQ(miou(perfect), 1.0);
  EXPECT_DOUBLE_EQ(macc(perfect), 1.0);
  const std::vector<int> wrong{1, 2, 0, 0, 2};
  ConfusionMatrix disjoint(3);
  disjoint.add(truth, wrong);
  EXPECT_DOUBLE_EQ(miou(disjoint), 0.0);
  EXPECT_DOUBLE_EQ(macc(disjoint), 0.0);
}

TEST(MetricsTest, AbsentClassesAreExcluded) {
  ConfusionMatrix cm(3);
  cm.add(0, 0, 4);
  cm.add(1, 1, 2);
  EXPECT_LT(per_class_iou(cm)[2], 0.0);
  EXPECT_DOUBLE_EQ(miou(cm), 1.0);
  // Class 2 predicted but never true: counts toward mIoU, not mACC.
  cm.add(1, 2, 2);
  EXPECT_DOUBLE_EQ(miou(cm), (1.0 + 0.5 + 0.0) / 3.0);
  EXPECT_DOUBLE_EQ(macc(cm), (1.0 + 0.5) / 2.0);
}

TEST(MetricsTest, EmptyMatrixIsInputError) {
  const ConfusionMatrix cm(2);
  EXPECT_THROW(miou(cm), InputError);
  EXPECT_THROW(macc(cm), InputError);
}

TEST(MetricsTest, MergeEqualsJointAdd) {
  const std::vector<int> a{0, 1, 1}, b{1, 1, 0}, c{0, 0, 1}, d{0, 1, 1};
  ConfusionMatrix joint(2), x(2), y(2);
  joint.add(a, b);
  joint.add(c, d);
  x.add(a, b);
  y.add(c, d);
  x.merge(y);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(x(i, j), joint(i, j));
  }
}

TEST(MetricsTest, PermutationEquivariance) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> truth(40), pred(40);
    for (std::size_t i = 0; i < 40; ++i) {
      truth[i] = static_cast<int>(rng.index(4));
      pred[i] = rng.uniform() < 0.6 ? truth[i] : static_cast<int>(rng.index(4));
    }
    std::vector<int> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<int> pt(40), pp(40);
    for (std::size_t i = 0; i < 40; ++i) {
      pt[i] = perm[static_cast<std::size_t>(truth[i])];
      pp[i] = perm[static_cast<std::size_t>(pred[i])];
    }
    ConfusionMatrix a(4), b(4);
    a.add(truth, pred);
    b.add(pt, pp);
    EXPECT_NEAR(miou(a), miou(b), 1e-12);
    EXPECT_NEAR(macc(a), macc(b), 1e-12);
  }
}

TEST(RocAucTest, KnownValues) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(s, y), 0.75);
  const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(roc_auc(sep, y), 1.0);
  const std::vector<double> tied{0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(roc_auc(tied, y), 0.5);
}

TEST(RocAucTest, MatchesPairCountingOracle) {
  Rng rng(2);
  std::vector<double> s(60);
  std::vector<std::uint8_t> y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // forces ties
    y[i] = i % 3 == 0 ? 1 : 0;
  }
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 60; ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  EXPECT_NEAR(roc_auc(s, y), wins / pairs, 1e-12);
}

TEST(RocAucTest, OneClassOnlyIsInputError) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<std::uint8_t> y{1, 1};
  EXPECT_THROW(roc_auc(s, y), InputError);
}

TEST(MedianTest, OddEvenAndEmpty) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), InputError);
}

}  // namespace
}  // namespace tmt
