#include "tmt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

constexpr std::uint64_t kModelStream = 0x40de1;
constexpr std::uint64_t kSourceTrainStream = 0x5a1;
constexpr std::uint64_t kFinetuneStream = 0xf17e;

struct Partitions {
  std::vector<ClusterState> adaptive;
  std::vector<ClusterState> grid;
};

// Clusters every image; assignment matrices are dropped once labels exist.
Partitions partition(const ExperimentConfig& cfg, const std::vector<LabeledImage>& images) {
  Partitions p;
  p.adaptive.reserve(images.size());
  p.grid.reserve(images.size());
  for (const auto& img : images) {
    ClusterState a = cluster(img.features, cfg.stride, cfg.temperature, cfg.cluster_iters);
    a.assignment = Matrix();
    p.adaptive.push_back(std::move(a));
    ClusterState g = cluster(img.features, cfg.stride, cfg.temperature, 0);
    g.assignment = Matrix();
    p.grid.push_back(std::move(g));
  }
  return p;
}

std::vector<TransferabilityMap> build_maps(const MlpParams& estimator,
                                           const std::vector<ClusterState>& states,
                                           const std::string& provenance) {
  std::vector<TransferabilityMap> maps;
  maps.reserve(states.size());
  for (const auto& s : states) maps.push_back(build_transferability_map(estimator, s, provenance));
  return maps;
}

std::vector<double> loss_weights(const TransferabilityMap& map) {
  std::vector<double> w(map.pixel_scores.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = 1.0 + (1.0 - map.pixel_scores[j]);
  return w;
}

template <typename Fn>
void for_each_seed(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double median_of(const ExperimentReport& r, Variant v, double VariantResult::*field) {
  std::vector<double> vals;
  for (const auto& row : r.rows) {
    if (row.variant == v) vals.push_back(row.*field);
  }
  return median(std::move(vals));
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Tmt: return "tmt";
    case Variant::NoActe: return "no_acte";
    case Variant::NoTma: return "no_tma";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(const std::string& name) {
  for (Variant v : kAllVariants) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

double ExperimentReport::median_miou(Variant v) const { return median_of(*this, v, &VariantResult::miou); }
double ExperimentReport::median_macc(Variant v) const { return median_of(*this, v, &VariantResult::macc); }

std::vector<std::vector<double>> collect_region_features(const std::vector<ClusterState>& states) {
  std::vector<std::vector<double>> out;
  for (const auto& s : states) {
    auto f = region_features(s);
    out.insert(out.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  return out;
}

double transferability_auc(const std::vector<TransferabilityMap>& maps,
                           const std::vector<ClusterState>& states,
                           const std::vector<LabeledImage>& images) {
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto lists = region_pixel_lists(states[i]);
    for (std::size_t r = 0; r < lists.size(); ++r) {
      if (lists[r].empty()) continue;
      std::size_t ones = 0;
      for (std::size_t px : lists[r]) ones += images[i].transferable[px];
      scores.push_back(maps[i].region_scores[r]);
      truth.push_back(2 * ones >= lists[r].size() ? 1 : 0);
    }
  }
  return roc_auc(scores, truth);
}

SegModelParams train_source_model(const ExperimentConfig& cfg,
                                  const std::vector<LabeledImage>& source, std::uint64_t seed) {
  if (source.empty()) throw InputError("source training set is empty");
  SegModelConfig mcfg = cfg.model;
  mcfg.in_channels = source.front().features.channels();
  mcfg.classes = cfg.data.classes;
  Rng init(seed, {kModelStream});
  SegModelParams model = make_seg_model(mcfg, init);

  std::vector<TrainSample> samples;
  for (const auto& img : source) samples.push_back({&img.features, img.labels, {}, {}});
  TrainConfig tcfg;
  tcfg.steps = cfg.source_steps;
  tcfg.batch_size = cfg.batch_size;
  tcfg.optimizer.lr = cfg.source_lr;
  tcfg.optimizer.weight_decay = cfg.weight_decay;
  tcfg.mask_threshold = cfg.mask_threshold;
  tcfg.percentile = cfg.percentile;
  tcfg.seed = seed ^ kSourceTrainStream;
  return train(std::move(model), samples, tcfg).params;
}

SeedWorkspace prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedWorkspace ws;
  ws.seed = seed;
  SynthConfig data = cfg.data;
  data.seed = seed;
  ws.source = generate(data, cfg.source_images, Domain::Source, 0);
  ws.target = generate(data, cfg.target_images, Domain::Target, 0);
  ws.test = generate(data, cfg.test_images, Domain::Target, 1);

  const Partitions src = partition(cfg, ws.source);
  const Partitions tgt = partition(cfg, ws.target);
  const Partitions tst = partition(cfg, ws.test);

  DiscriminatorConfig dcfg = cfg.discriminator;
  dcfg.seed = seed;
  ws.estimator = train_discriminator(collect_region_features(src.adaptive),
                                     collect_region_features(tgt.adaptive), dcfg);
  ws.pad = compute_pad(ws.estimator.params, ws.estimator.held_out);
  const TrainedDiscriminator grid_estimator = train_discriminator(
      collect_region_features(src.grid), collect_region_features(tgt.grid), dcfg);
  ws.grid_pad = compute_pad(grid_estimator.params, grid_estimator.held_out);

  ws.target_maps = build_maps(ws.estimator.params, tgt.adaptive, ws.estimator.provenance);
  ws.test_maps = build_maps(ws.estimator.params, tst.adaptive, ws.estimator.provenance);
  ws.target_grid_maps = build_maps(grid_estimator.params, tgt.grid, "grid-" + grid_estimator.provenance);
  ws.test_grid_maps = build_maps(grid_estimator.params, tst.grid, "grid-" + grid_estimator.provenance);
  for (std::size_t i = 0; i < std::min(cfg.preview_images, tst.adaptive.size()); ++i) {
    ws.test_region_labels.push_back(tst.adaptive[i].labels);
  }

  ws.source_model = train_source_model(cfg, ws.source, seed);
  return ws;
}

VariantResult evaluate(const ExperimentConfig& cfg, const SeedWorkspace& ws,
                       const SegModelParams& model, Variant variant, double percentile,
                       double mask_threshold) {
  VariantResult res;
  res.variant = variant;
  res.seed = ws.seed;
  res.percentile = percentile;
  res.mask_threshold = mask_threshold;
  res.pad = variant == Variant::NoActe ? ws.grid_pad.distance : ws.pad.distance;

  ConfusionMatrix cm(model.config.classes);
  std::size_t fallback = 0;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < ws.test.size(); ++i) {
    GateOptions gate{mask_threshold, {}, percentile};
    if (variant == Variant::Tmt) gate.transferability = ws.test_maps[i].pixel_scores;
    if (variant == Variant::NoActe) gate.transferability = ws.test_grid_maps[i].pixel_scores;
    const SegPrediction pred = seg_forward(model, ws.test[i].features, gate);
    cm.add(ws.test[i].labels, pred.labels);
    fallback += pred.fallback_rows;
    rows += pred.mask_rows;
    if (i < cfg.preview_images) res.preview_labels.push_back(pred.labels);
  }
  res.miou = miou(cm);
  res.macc = macc(cm);
  res.class_iou = per_class_iou(cm);
  res.fallback_rate = rows == 0 ? 0.0 : static_cast<double>(fallback) / static_cast<double>(rows);
  return res;
}

VariantResult run_variant(const ExperimentConfig& cfg, const SeedWorkspace& ws, Variant variant,
                          double percentile, double mask_threshold) {
  std::vector<std::vector<double>> weights;
  if (variant == Variant::NoTma) {
    for (const auto& m : ws.target_maps) weights.push_back(loss_weights(m));
  }
  std::vector<TrainSample> samples;
  for (std::size_t i = 0; i < ws.target.size(); ++i) {
    TrainSample s{&ws.target[i].features, ws.target[i].labels, {}, {}};
    if (variant == Variant::Tmt) s.transferability = ws.target_maps[i].pixel_scores;
    if (variant == Variant::NoActe) s.transferability = ws.target_grid_maps[i].pixel_scores;
    if (variant == Variant::NoTma) s.pixel_weights = weights[i];
    samples.push_back(s);
  }
  TrainConfig tcfg;
  tcfg.steps = cfg.finetune_steps;
  tcfg.batch_size = cfg.batch_size;
  tcfg.optimizer.lr = cfg.finetune_lr;
  tcfg.optimizer.weight_decay = cfg.weight_decay;
  tcfg.mask_threshold = mask_threshold;
  tcfg.percentile = percentile;
  tcfg.seed = ws.seed ^ kFinetuneStream;
  SegModelParams tuned = train(ws.source_model, samples, tcfg).params;
  VariantResult res = evaluate(cfg, ws, tuned, variant, percentile, mask_threshold);
  res.model = std::move(tuned);
  return res;
}

ExperimentReport run_ablation(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                              const std::vector<Variant>& variants) {
  if (seeds.empty()) throw InputError("ablation needs at least one seed");
  ExperimentReport report;
  report.seeds = seeds;
  std::vector<std::vector<VariantResult>> per_seed(seeds.size());
  report.preview_maps.resize(seeds.size());
  report.preview_regions.resize(seeds.size());
  for_each_seed(seeds.size(), cfg.threads, [&](std::size_t s) {
    const SeedWorkspace ws = prepare_seed(cfg, seeds[s]);
    for (Variant v : variants) {
      per_seed[s].push_back(run_variant(cfg, ws, v, cfg.percentile, cfg.mask_threshold));
    }
    for (std::size_t i = 0; i < ws.test_region_labels.size(); ++i) {
      report.preview_maps[s].push_back(ws.test_maps[i]);
    }
    report.preview_regions[s] = ws.test_region_labels;
  });
  for (Variant v : variants) {
    for (auto& rows : per_seed) {
      for (auto& r : rows) {
        if (r.variant == v) report.rows.push_back(std::move(r));
      }
    }
  }
  return report;
}

ExperimentReport sweep_pt(const ExperimentConfig& cfg, const std::vector<double>& percentiles,
                          const std::vector<std::uint64_t>& seeds) {
  if (percentiles.empty()) throw InputError("sweep needs at least one p_T value");
  if (seeds.empty()) throw InputError("sweep needs at least one seed");
  ExperimentReport report;
  report.seeds = seeds;
  std::vector<std::vector<VariantResult>> per_seed(seeds.size());
  report.preview_maps.resize(seeds.size());
  report.preview_regions.resize(seeds.size());
  for_each_seed(seeds.size(), cfg.threads, [&](std::size_t s) {
    const SeedWorkspace ws = prepare_seed(cfg, seeds[s]);
    for (double p : percentiles) {
      per_seed[s].push_back(run_variant(cfg, ws, Variant::Tmt, p, cfg.mask_threshold));
    }
    for (std::size_t i = 0; i < ws.test_region_labels.size(); ++i) {
      report.preview_maps[s].push_back(ws.test_maps[i]);
    }
    report.preview_regions[s] = ws.test_region_labels;
  });
  for (std::size_t pi = 0; pi < percentiles.size(); ++pi) {
    for (auto& rows : per_seed) report.rows.push_back(std::move(rows[pi]));
  }
  return report;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "variant,seed,p_T,miou,macc,pad,fallback_rate\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%g,%.6f,%.6f,%.6f,%.6f\n", variant_name(r.variant),
                  static_cast<unsigned long long>(r.seed), r.percentile, r.miou, r.macc, r.pad,
                  r.fallback_rate);
    out += buf;
  }
  return out;
}

}  // namespace tmt
