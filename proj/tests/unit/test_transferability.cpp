#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "tmt/errors.hpp"
#include "tmt/metrics.hpp"
#include "tmt/rng.hpp"
#include "tmt/transferability.hpp"

namespace tmt {
namespace {

std::vector<std::vector<double>> gaussian_cloud(std::size_t n, std::size_t d, double mean, Rng& rng) {
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& v : out) {
    for (double& x : v) x = rng.normal(mean, 1.0);
  }
  return out;
}

DiscriminatorConfig small_config(std::uint64_t seed) {
  DiscriminatorConfig c;
  c.epochs = 8;
  c.lr = 1e-3;
  c.seed = seed;
  return c;
}

TEST(RegionTransferabilityTest, ConfusionMapping) {
  EXPECT_DOUBLE_EQ(transferability_from_probability(0.5), 1.0);
  EXPECT_DOUBLE_EQ(transferability_from_probability(1.0), 0.0);
  EXPECT_DOUBLE_EQ(transferability_from_probability(0.0), 0.0);
  EXPECT_NEAR(transferability_from_probability(0.8), 0.4, 1e-15);
  EXPECT_NEAR(transferability_from_probability(0.2), 0.4, 1e-15);
}

TEST(PadTest, FormulaEndpointsAndMonotonicity) {
  EXPECT_DOUBLE_EQ(pad_from_error(0.5).distance, 0.0);
  EXPECT_DOUBLE_EQ(pad_from_error(0.0).distance, 2.0);
  EXPECT_DOUBLE_EQ(pad_from_error(0.25).distance, 1.0);
  EXPECT_DOUBLE_EQ(pad_from_error(1.0).distance, -2.0);
  double prev = 3.0;
  for (double e = 0.0; e <= 1.0; e += 0.01) {
    const double d = pad_from_error(e).distance;
    EXPECT_LE(d, prev);
    EXPECT_GE(d, -2.0);
    EXPECT_LE(d, 2.0);
    prev = d;
  }
}

TEST(PadTest, SingleDomainHeldOutSetIsRejected) {
  Rng rng(0);
  std::vector<std::size_t> dims{2, 4, 1};
  const MlpParams p = make_mlp(dims, rng);
  const std::vector<DomainSample> only_source{{{0.0, 1.0}, 1}, {{1.0, 0.0}, 1}};
  EXPECT_THROW(compute_pad(p, only_source), InputError);
}

TEST(TrainDiscriminatorTest, EmptyDomainIsAnInputError) {
  Rng rng(1);
  const auto src = gaussian_cloud(10, 3, 0.0, rng);
  EXPECT_THROW(train_discriminator(src, {}, small_config(0)), InputError);
  EXPECT_THROW(train_discriminator({}, src, small_config(0)), InputError);
}

TEST(TrainDiscriminatorTest, IdenticalDomainsAreNotSeparable) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 10);
    const auto src = gaussian_cloud(500, 8, 0.0, rng);
    const auto tgt = gaussian_cloud(500, 8, 0.0, rng);
    const TrainedDiscriminator d = train_discriminator(src, tgt, small_config(seed));
    const double acc = d.log.back().held_out_accuracy;
    EXPECT_GE(acc, 0.40) << "seed " << seed;
    EXPECT_LE(acc, 0.60) << "seed " << seed;
  }
}

TEST(TrainDiscriminatorTest, SeparableDomainsAreLearned) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 20);
    const auto src = gaussian_cloud(400, 8, 1.5, rng);
    const auto tgt = gaussian_cloud(400, 8, -1.5, rng);
    const TrainedDiscriminator d = train_discriminator(src, tgt, small_config(seed));
    EXPECT_GE(d.log.back().held_out_accuracy, 0.95);
    EXPECT_GE(compute_pad(d.params, d.held_out).distance, 1.6);
    EXPECT_EQ(d.held_out.size(), 160u);
  }
}

TEST(TrainDiscriminatorTest, TrainingLossDecreases) {
  std::vector<double> first, last;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 30);
    const auto src = gaussian_cloud(300, 8, 0.4, rng);
    const auto tgt = gaussian_cloud(300, 8, -0.4, rng);
    const TrainedDiscriminator d = train_discriminator(src, tgt, small_config(seed));
    first.push_back(d.log.front().loss);
    last.push_back(d.log.back().loss);
  }
  EXPECT_LT(median(last), median(first));
}

TEST(TrainDiscriminatorTest, SeedDeterministic) {
  Rng rng(3);
  const auto src = gaussian_cloud(100, 4, 0.5, rng);
  const auto tgt = gaussian_cloud(100, 4, -0.5, rng);
  const auto a = train_discriminator(src, tgt, small_config(9));
  const auto b = train_discriminator(src, tgt, small_config(9));
  EXPECT_EQ(flatten(a.params.refs()), flatten(b.params.refs()));
}

// Swapping which domain is called "source" only flips the discriminator's
// orientation. The two nets are initialised independently, so pointwise
// scores differ near the boundary; the mean score must not shift.
TEST(TrainDiscriminatorTest, LabelFlipSymmetry) {
  std::vector<double> bias, spread;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 40);
    const auto a = gaussian_cloud(400, 8, 0.5, rng);
    const auto b = gaussian_cloud(400, 8, -0.5, rng);
    const auto probe = gaussian_cloud(200, 8, 0.0, rng);
    const TrainedDiscriminator e = train_discriminator(a, b, small_config(seed));
    const TrainedDiscriminator f = train_discriminator(b, a, small_config(seed));
    EXPECT_NEAR(e.log.back().held_out_accuracy, f.log.back().held_out_accuracy, 0.05);
    double signed_sum = 0.0, abs_sum = 0.0;
    for (const auto& q : probe) {
      const double d = region_transferability(e.params, q) - region_transferability(f.params, q);
      signed_sum += d;
      abs_sum += std::abs(d);
    }
    bias.push_back(std::abs(signed_sum) / probe.size());
    spread.push_back(abs_sum / probe.size());
  }
  EXPECT_LT(median(bias), 0.05);
  EXPECT_LT(median(spread), 0.25);
}

ClusterState two_region_state() {
  FeatureMap fm(4, 8, 2);
  for (std::size_t j = 0; j < fm.pixels(); ++j) {
    const bool left = (j % 8) < 4;
    fm.pixel(j)[0] = left ? 3.0 : 0.0;
    fm.pixel(j)[1] = left ? 0.0 : 0.0;
  }
  return init_grid(fm, 4);
}

TEST(TransferabilityMapTest, BroadcastIsPiecewiseConstant) {
  Rng rng(5);
  std::vector<std::size_t> dims{2, 8, 1};
  const MlpParams p = make_mlp(dims, rng);
  const ClusterState s = two_region_state();
  const TransferabilityMap m = build_transferability_map(p, s, "test");
  ASSERT_EQ(m.pixel_scores.size(), 32u);
  for (std::size_t j = 0; j < 32; ++j) {
    EXPECT_EQ(m.pixel_scores[j], m.region_scores[s.labels[j]]);
    EXPECT_GE(m.pixel_scores[j], 0.0);
    EXPECT_LE(m.pixel_scores[j], 1.0);
  }
  EXPECT_EQ(m.provenance, "test");
}

TEST(TransferabilityMapTest, IdenticalRegionsShareOneValue) {
  Rng rng(6);
  std::vector<std::size_t> dims{2, 8, 1};
  const MlpParams p = make_mlp(dims, rng);
  FeatureMap fm(8, 8, 2);
  for (std::size_t j = 0; j < fm.pixels(); ++j) fm.pixel(j)[0] = 1.0;
  const TransferabilityMap m = build_transferability_map(p, init_grid(fm, 4));
  for (double v : m.pixel_scores) EXPECT_EQ(v, m.pixel_scores.front());
}

TEST(TransferabilityMapTest, PlantedSourceIdentifiableRegionScoresZero) {
  // Left region feature (3, 0) is confidently source: logit = 20·x0 − 1.
  MlpParams p;
  p.weights.push_back(Matrix{{20.0}, {0.0}});
  p.biases.push_back(Matrix{{-1.0}});
  ASSERT_EQ(p.input_dim(), 2u);
  const ClusterState s = two_region_state();
  const TransferabilityMap m = build_transferability_map(p, s);
  const double right = transferability_from_probability(sigmoid(-1.0));
  for (std::size_t j = 0; j < 32; ++j) {
    if ((j % 8) < 4) EXPECT_NEAR(m.pixel_scores[j], 0.0, 1e-20);
    else EXPECT_DOUBLE_EQ(m.pixel_scores[j], right);
  }
}

TEST(TransferabilityMapTest, EmptyRegionsAreFlaggedAndNotBroadcast) {
  Rng rng(7);
  std::vector<std::size_t> dims{2, 4, 1};
  const MlpParams p = make_mlp(dims, rng);
  ClusterState s = two_region_state();
  std::fill(s.labels.begin(), s.labels.end(), 0);
  const TransferabilityMap m = build_transferability_map(p, s);
  EXPECT_FALSE(m.region_empty[0]);
  EXPECT_TRUE(m.region_empty[1]);
  for (double v : m.pixel_scores) EXPECT_EQ(v, m.region_scores[0]);
  EXPECT_EQ(region_features(s).size(), 1u);
}

}  // namespace
}  // namespace tmt
