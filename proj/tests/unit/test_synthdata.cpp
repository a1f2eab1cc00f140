#include <cmath>

#include <gtest/gtest.h>

#include "tmt/errors.hpp"
#include "tmt/synthdata.hpp"

namespace tmt {
namespace {

TEST(SynthDataTest, SameSeedIsBitwiseIdentical) {
  SynthConfig cfg;
  cfg.seed = 12;
  const auto a = generate(cfg, 3, Domain::Target);
  const auto b = generate(cfg, 3, Domain::Target);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].labels, b[i].labels);
    EXPECT_EQ(a[i].features.features, b[i].features.features);
  }
}

TEST(SynthDataTest, StreamsAndDomainsDiffer) {
  SynthConfig cfg;
  const auto train = generate(cfg, 1, Domain::Source, 0);
  const auto test = generate(cfg, 1, Domain::Source, 1);
  const auto target = generate(cfg, 1, Domain::Target, 0);
  EXPECT_NE(train[0].features.features, test[0].features.features);
  EXPECT_NE(train[0].labels, target[0].labels);
}

TEST(SynthDataTest, NoiseFreePixelsAreExactPrototypes) {
  SynthConfig cfg;
  cfg.noise = 0.0;
  cfg.shift = 2.0;
  const auto src = generate(cfg, 2, Domain::Source);
  const auto tgt = generate(cfg, 2, Domain::Target);
  for (const auto* set : {&src, &tgt}) {
    for (const auto& im : *set) {
      for (std::size_t j = 0; j < im.labels.size(); ++j) {
        const auto cls = static_cast<std::size_t>(im.labels[j]);
        const auto f = im.features.pixel(j);
        const bool shifted = im.domain == Domain::Target && is_shifted(cfg, cls);
        const auto dir = shift_direction(cfg, cls);
        for (std::size_t k = 0; k < cfg.channels; ++k) {
          const double expect = (k == cls ? 1.0 : 0.0) + (shifted ? 2.0 * dir[k] : 0.0);
          ASSERT_DOUBLE_EQ(f[k], expect);
        }
      }
    }
  }
}

TEST(SynthDataTest, ZeroShiftMakesDomainsShareDistribution) {
  SynthConfig cfg;
  cfg.noise = 0.0;
  cfg.shift = 0.0;
  const auto tgt = generate(cfg, 2, Domain::Target);
  for (const auto& im : tgt) {
    for (std::size_t j = 0; j < im.labels.size(); ++j) {
      const auto f = im.features.pixel(j);
      for (std::size_t k = 0; k < cfg.channels; ++k) {
        ASSERT_EQ(f[k], k == static_cast<std::size_t>(im.labels[j]) ? 1.0 : 0.0);
      }
    }
  }
}

TEST(SynthDataTest, ShiftDirectionsAreUnitAndOrthogonalToOwnPrototype) {
  SynthConfig cfg;
  for (std::size_t c : cfg.shifted_classes) {
    const auto d = shift_direction(cfg, c);
    double n = 0.0;
    for (double v : d) n += v * v;
    EXPECT_NEAR(n, 1.0, 1e-12);
    EXPECT_EQ(d[c], 0.0);
  }
}

TEST(SynthDataTest, TransferabilityBitFollowsClass) {
  SynthConfig cfg;
  for (Domain dom : {Domain::Source, Domain::Target}) {
    for (const auto& im : generate(cfg, 4, dom)) {
      for (std::size_t j = 0; j < im.labels.size(); ++j) {
        const bool shifted = is_shifted(cfg, static_cast<std::size_t>(im.labels[j]));
        EXPECT_EQ(im.transferable[j], shifted ? 0 : 1);
      }
    }
  }
}

TEST(SynthDataTest, EveryClassCoversFivePercent) {
  for (Layout layout : {Layout::Rectangular, Layout::Irregular}) {
    SynthConfig cfg;
    cfg.layout = layout;
    for (const auto& im : generate(cfg, 20, Domain::Source)) {
      std::vector<std::size_t> counts(cfg.classes, 0);
      for (int l : im.labels) {
        ASSERT_GE(l, 0);
        ASSERT_LT(l, 4);
        ++counts[static_cast<std::size_t>(l)];
      }
      for (std::size_t c : counts) EXPECT_GE(c, 52u);  // 5% of 1024, rounded up
    }
  }
}

TEST(SynthDataTest, RectangularLayoutsSnapToBlocks) {
  SynthConfig cfg;
  for (const auto& im : generate(cfg, 5, Domain::Source)) {
    for (std::size_t y = 0; y < cfg.height; ++y) {
      for (std::size_t x = 0; x < cfg.width; ++x) {
        const std::size_t anchor = (y / 4 * 4) * cfg.width + x / 4 * 4;
        ASSERT_EQ(im.labels[y * cfg.width + x], im.labels[anchor]);
      }
    }
  }
}

TEST(SynthDataTest, InvalidConfigs) {
  SynthConfig cfg;
  cfg.shifted_classes = {4};
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.shifted_classes = {0, 1, 2, 3};
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.noise = -0.1;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.shift = -1.0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.block = 5;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.channels = 3;
  EXPECT_THROW(validate(cfg), ConfigError);
}

}  // namespace
}  // namespace tmt
