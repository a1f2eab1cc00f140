#include <benchmark/benchmark.h>

#include "tmt/adaptive_cluster.hpp"
#include "tmt/mlp.hpp"
#include "tmt/rng.hpp"
#include "tmt/segmodel.hpp"
#include "tmt/synthdata.hpp"
#include "tmt/tma.hpp"

namespace {

using namespace tmt;

FeatureMap random_map(std::size_t side, std::size_t d, Rng& rng) {
  FeatureMap fm(side, side, d);
  for (double& v : fm.features.values()) v = rng.normal();
  return fm;
}

void BM_Cluster(benchmark::State& state) {
  Rng rng(1);
  const auto side = static_cast<std::size_t>(state.range(0));
  const FeatureMap fm = random_map(side, 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(cluster(fm, 4, kDefaultTemperature, kDefaultClusterIters));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_Cluster)->Arg(16)->Arg(32)->Arg(64);

void BM_Attention(benchmark::State& state) {
  Rng rng(2);
  const std::size_t c = 16, n = 8, p = static_cast<std::size_t>(state.range(0));
  AttentionInputs in{Matrix(c, n), Matrix(c, p), Matrix(p, c)};
  for (auto* m : {&in.queries, &in.keys, &in.values}) {
    for (double& v : m->values()) v = rng.normal();
  }
  Matrix probs(n, p);
  for (double& v : probs.values()) v = rng.uniform();
  std::vector<double> t(p);
  for (double& v : t) v = rng.uniform();
  const AttentionMask mask = build_mask({probs, t, 0.5, percentile_threshold(t, 30)});
  for (auto _ : state) benchmark::DoNotOptimize(tma_attention(in, mask));
}
BENCHMARK(BM_Attention)->Arg(256)->Arg(1024)->Arg(4096);

void BM_AttentionBackward(benchmark::State& state) {
  Rng rng(3);
  const std::size_t c = 16, n = 8, p = 1024;
  AttentionInputs in{Matrix(c, n), Matrix(c, p), Matrix(p, c)};
  for (auto* m : {&in.queries, &in.keys, &in.values}) {
    for (double& v : m->values()) v = rng.normal();
  }
  const AttentionMask mask = open_mask(n, p);
  Matrix up(n, c);
  for (double& v : up.values()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(tma_attention_backward(in, mask, up));
}
BENCHMARK(BM_AttentionBackward);

void BM_DiscriminatorForward(benchmark::State& state) {
  Rng rng(4);
  const std::vector<std::size_t> dims{16, 64, 64, 1};
  const MlpParams p = make_mlp(dims, rng);
  std::vector<double> x(16);
  for (double& v : x) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward(p, x));
}
BENCHMARK(BM_DiscriminatorForward);

void BM_SegForward(benchmark::State& state) {
  Rng rng(5);
  const SegModelParams p = make_seg_model(SegModelConfig{}, rng);
  const FeatureMap fm = random_map(32, 16, rng);
  std::vector<double> t(fm.pixels());
  for (double& v : t) v = rng.uniform();
  const GateOptions gate{0.5, t, 30};
  for (auto _ : state) benchmark::DoNotOptimize(seg_forward(p, fm, gate));
}
BENCHMARK(BM_SegForward);

void BM_SegTrainStep(benchmark::State& state) {
  Rng rng(6);
  const SegModelParams p = make_seg_model(SegModelConfig{}, rng);
  SynthConfig data;
  const auto images = generate(data, 1, Domain::Source);
  std::vector<double> t(images[0].labels.size(), 0.5);
  const GateOptions gate{0.5, t, 30};
  for (auto _ : state) benchmark::DoNotOptimize(seg_loss_and_grad(p, images[0].features, images[0].labels, gate));
}
BENCHMARK(BM_SegTrainStep);

}  // namespace

BENCHMARK_MAIN();
