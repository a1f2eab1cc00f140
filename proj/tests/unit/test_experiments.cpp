#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "tmt/errors.hpp"
#include "tmt/experiments.hpp"

namespace tmt {
namespace {

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.data.height = 16;
  c.data.width = 16;
  c.data.noise = 0.3;
  c.data.shift = 1.5;
  c.source_images = 6;
  c.target_images = 6;
  c.test_images = 3;
  c.discriminator.epochs = 2;
  c.model.layers = 1;
  c.source_steps = 6;
  c.finetune_steps = 4;
  c.batch_size = 2;
  c.preview_images = 1;
  return c;
}

TEST(VariantTest, NamesRoundTrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_FALSE(parse_variant("tmt2").has_value());
}

TEST(AblationTest, ReportContainsEveryVariantAndSeed) {
  const ExperimentReport r = run_ablation(tiny(), {1, 2, 3});
  EXPECT_EQ(r.rows.size(), 12u);
  for (Variant v : kAllVariants) {
    std::size_t n = 0;
    for (const auto& row : r.rows) {
      if (row.variant != v) continue;
      ++n;
      EXPECT_GE(row.miou, 0.0);
      EXPECT_LE(row.miou, 1.0);
      EXPECT_GE(row.macc, 0.0);
      EXPECT_LE(row.macc, 1.0);
    }
    EXPECT_EQ(n, 3u);
  }
  EXPECT_EQ(r.preview_maps.size(), 3u);
}

TEST(AblationTest, CsvSchema) {
  const ExperimentReport r = run_ablation(tiny(), {4}, {Variant::Vanilla, Variant::Tmt});
  const std::string csv = report_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "variant,seed,p_T,miou,macc,pad,fallback_rate");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
}

TEST(AblationTest, Deterministic) {
  const auto a = report_csv(run_ablation(tiny(), {5}));
  const auto b = report_csv(run_ablation(tiny(), {5}));
  EXPECT_EQ(a, b);
}

TEST(AblationTest, ThreadedMatchesSerial) {
  ExperimentConfig c = tiny();
  const auto serial = report_csv(run_ablation(c, {6, 7}));
  c.threads = 2;
  EXPECT_EQ(report_csv(run_ablation(c, {6, 7})), serial);
}

TEST(AblationTest, GatingOffMatchesVanilla) {
  const ExperimentConfig c = tiny();
  const SeedWorkspace ws = prepare_seed(c, 8);
  const VariantResult vanilla = run_variant(c, ws, Variant::Vanilla, 100.0, 1.0);
  const VariantResult gated = run_variant(c, ws, Variant::Tmt, 100.0, 1.0);
  EXPECT_NEAR(vanilla.miou, gated.miou, 1e-6);
  EXPECT_NEAR(vanilla.macc, gated.macc, 1e-6);
  EXPECT_EQ(flatten(vanilla.model.refs()), flatten(gated.model.refs()));
}

TEST(AblationTest, NoSeedsIsInputError) {
  EXPECT_THROW(run_ablation(tiny(), {}), InputError);
}

TEST(SweepTest, RowCountIsPercentilesTimesSeeds) {
  const ExperimentReport r = sweep_pt(tiny(), {10, 50, 100}, {1, 2});
  EXPECT_EQ(r.rows.size(), 6u);
  for (const auto& row : r.rows) EXPECT_EQ(row.variant, Variant::Tmt);
  EXPECT_DOUBLE_EQ(r.rows.front().percentile, 10.0);
  EXPECT_DOUBLE_EQ(r.rows.back().percentile, 100.0);
  EXPECT_THROW(sweep_pt(tiny(), {}, {1}), InputError);
}

TEST(TransferabilityAucTest, PlantedShiftRanksShiftedRegionsLower) {
  ExperimentConfig c = tiny();
  c.data.noise = 0.2;
  c.data.shift = 1.0;
  c.source_images = 30;
  c.target_images = 30;
  c.discriminator.epochs = 10;
  std::vector<ClusterState> src, tgt;
  SynthConfig d = c.data;
  const auto s_img = generate(d, c.source_images, Domain::Source);
  const auto t_img = generate(d, c.target_images, Domain::Target);
  for (const auto& im : s_img) src.push_back(cluster(im.features, 4, kDefaultTemperature, 6));
  for (const auto& im : t_img) tgt.push_back(cluster(im.features, 4, kDefaultTemperature, 6));
  const auto est = train_discriminator(collect_region_features(src), collect_region_features(tgt),
                                       c.discriminator);
  std::vector<TransferabilityMap> maps;
  for (const auto& s : tgt) maps.push_back(build_transferability_map(est.params, s));
  EXPECT_GE(transferability_auc(maps, tgt, t_img), 0.8);
}

}  // namespace
}  // namespace tmt
