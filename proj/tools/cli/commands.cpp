#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "tmt/errors.hpp"
#include "tmt/gradcheck_suite.hpp"
#include "tmt/image_io.hpp"
#include "tmt/serialize.hpp"

namespace tmt::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const char* const kSplits[] = {"source", "target", "test"};

std::string image_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%04zu", i);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<LabeledImage>& split_of(Dataset& d, std::size_t s) {
  return s == 0 ? d.source : (s == 1 ? d.target : d.test);
}

const std::vector<LabeledImage>& split_of(const Dataset& d, std::size_t s) {
  return s == 0 ? d.source : (s == 1 ? d.target : d.test);
}

ExperimentConfig with_data(const RunConfig& run, const Dataset& d) {
  ExperimentConfig cfg = run.experiment;
  cfg.data = d.config.experiment.data;
  cfg.data.seed = d.config.seed;
  return cfg;
}

std::string regions_csv(const TransferabilityMap& map) {
  std::string out = "region_id,T\n";
  for (std::size_t r = 0; r < map.region_scores.size(); ++r) {
    if (map.region_empty[r]) continue;
    out += std::to_string(r) + "," + fmt6(map.region_scores[r]) + "\n";
  }
  return out;
}

void write_map(OutputSet& out, const fs::path& dir, std::size_t i, const TransferabilityMap& map,
               const ClusterState& state) {
  const std::string stem = image_stem(i);
  out.write(dir / (stem + "_T.pgm"), encode_pgm(score_image(map.width, map.height, map.pixel_scores)));
  out.write(dir / (stem + "_T.f64"), encode_f64le(map.pixel_scores));
  out.write(dir / (stem + "_regions.csv"), regions_csv(map));
  out.write(dir / (stem + "_regions.pgm"), encode_pgm(label_image(map.width, map.height, state.labels)));
}

std::vector<double> load_scores(const fs::path& path, std::size_t pixels) {
  if (!fs::exists(path)) {
    throw InputError("missing transferability map " + path.string() + "; run `tmt estimate` first");
  }
  std::vector<double> v = decode_f64le(read_file(path));
  if (v.size() != pixels) throw InputError("transferability map " + path.string() + " has the wrong size");
  return v;
}

PadEstimate load_pad(const fs::path& maps, const std::string& estimator) {
  const fs::path path = maps / "pad.csv";
  if (!fs::exists(path)) throw InputError("missing " + path.string() + "; run `tmt estimate` first");
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string name, eps, d;
    std::getline(row, name, ',');
    std::getline(row, eps, ',');
    std::getline(row, d, ',');
    if (name == estimator) return {std::stod(eps), std::stod(d)};
  }
  throw InputError(path.string() + " has no row for estimator " + estimator);
}

std::string report_summary(const ExperimentReport& r, const std::vector<Variant>& variants) {
  std::string out = "variant,median_miou,median_macc,median_fallback_rate,seeds\n";
  for (Variant v : variants) {
    std::vector<double> fb;
    for (const auto& row : r.rows) {
      if (row.variant == v) fb.push_back(row.fallback_rate);
    }
    out += std::string(variant_name(v)) + "," + fmt6(r.median_miou(v)) + "," + fmt6(r.median_macc(v)) +
           "," + fmt6(median(fb)) + "," + std::to_string(r.seeds.size()) + "\n";
  }
  return out;
}

void write_previews(OutputSet& out, const ExperimentReport& r, std::size_t height, std::size_t width) {
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    const fs::path dir = fs::path("previews") / ("seed_" + std::to_string(r.seeds[s]));
    for (std::size_t i = 0; i < r.preview_maps[s].size(); ++i) {
      const auto& map = r.preview_maps[s][i];
      out.write(dir / (image_stem(i) + "_T.pgm"), encode_pgm(score_image(width, height, map.pixel_scores)));
      out.write(dir / (image_stem(i) + "_regions.pgm"),
                encode_pgm(label_image(width, height, r.preview_regions[s][i])));
    }
    for (const auto& row : r.rows) {
      if (row.seed != r.seeds[s]) continue;
      char tag[64];
      std::snprintf(tag, sizeof tag, "_%s_p%g.ppm", variant_name(row.variant), row.percentile);
      for (std::size_t i = 0; i < row.preview_labels.size(); ++i) {
        out.write(dir / (image_stem(i) + tag), encode_label_ppm(width, height, row.preview_labels[i]));
      }
    }
  }
}

}  // namespace

void OutputSet::write(const fs::path& relative, const std::string& bytes) {
  write_file(root_ / relative, bytes);
  files_.push_back(relative.generic_string());
}

void OutputSet::record(const fs::path& absolute) {
  files_.push_back(fs::relative(absolute, root_).generic_string());
}

void OutputSet::finish(const std::string& command, const RunConfig& config, const json& extra) {
  std::vector<std::string> files = files_;
  std::sort(files.begin(), files.end());
  json doc;
  doc["command"] = command;
  doc["config"] = to_json(config);
  for (const auto& [k, v] : extra.items()) doc[k] = v;
  doc["outputs"] = files;
  doc["complete"] = true;
  write_file(root_ / "run_manifest.json", doc.dump(2) + "\n");
}

void cmd_gen(const RunConfig& config) {
  OutputSet out(config.output_dir);
  SynthConfig data = config.experiment.data;
  data.seed = config.seed;
  const std::size_t counts[] = {config.experiment.source_images, config.experiment.target_images,
                                config.experiment.test_images};
  const Domain domains[] = {Domain::Source, Domain::Target, Domain::Target};
  const std::uint64_t streams[] = {0, 0, 1};
  json manifest;
  manifest["format"] = "tmt-dataset";
  manifest["height"] = data.height;
  manifest["width"] = data.width;
  manifest["channels"] = data.channels;
  manifest["classes"] = data.classes;
  manifest["seed"] = config.seed;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto images = generate(data, counts[s], domains[s], streams[s]);
    manifest["counts"][kSplits[s]] = images.size();
    for (std::size_t i = 0; i < images.size(); ++i) {
      const fs::path dir = kSplits[s];
      out.write(dir / (image_stem(i) + ".f64"), encode_f64le(images[i].features.features.values()));
      out.write(dir / (image_stem(i) + "_labels.pgm"),
                encode_pgm(label_image(data.width, data.height, images[i].labels)));
    }
  }
  manifest["config"] = to_json(config);
  out.write("manifest.json", manifest.dump(2) + "\n");
  out.finish("gen", config);
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw InputError("no dataset at " + dir.string() + " (manifest.json missing)");
  json manifest;
  try {
    manifest = json::parse(read_file(mpath));
  } catch (const json::exception& e) {
    throw InputError("unreadable dataset manifest " + mpath.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "tmt-dataset") throw InputError(mpath.string() + " is not a dataset manifest");
  Dataset d;
  d.config = parse_run_config(manifest.at("config"));
  SynthConfig data = d.config.experiment.data;
  data.seed = d.config.seed;
  const Domain domains[] = {Domain::Source, Domain::Target, Domain::Target};
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t n = manifest.at("counts").at(kSplits[s]).get<std::size_t>();
    auto& images = split_of(d, s);
    for (std::size_t i = 0; i < n; ++i) {
      const fs::path base = dir / kSplits[s] / image_stem(i);
      LabeledImage img;
      img.domain = domains[s];
      img.features = load_feature_map(base.string() + ".f64", data.height, data.width, data.channels);
      const GrayImage labels = decode_pgm(read_file(base.string() + "_labels.pgm"));
      if (labels.width != data.width || labels.height != data.height) {
        throw InputError("label map " + base.string() + "_labels.pgm has the wrong size");
      }
      for (std::uint8_t l : labels.pixels) {
        if (l >= data.classes) throw InputError("label map " + base.string() + "_labels.pgm has an invalid class");
        img.labels.push_back(l);
        img.transferable.push_back(is_shifted(data, l) ? 0 : 1);
      }
      images.push_back(std::move(img));
    }
  }
  return d;
}

void cmd_estimate(const RunConfig& config, const fs::path& dataset) {
  const Dataset d = load_dataset(dataset);
  const ExperimentConfig cfg = with_data(config, d);
  OutputSet out(config.output_dir);

  const char* const kinds[] = {"adaptive", "grid"};
  std::string pad_csv = "estimator,epsilon,d_A\n";
  json extra;
  for (std::size_t kind = 0; kind < 2; ++kind) {
    const std::size_t iters = kind == 0 ? cfg.cluster_iters : 0;
    std::vector<ClusterState> states[3];
    for (std::size_t s = 0; s < 3; ++s) {
      for (const auto& img : split_of(d, s)) {
        ClusterState st = cluster(img.features, cfg.stride, cfg.temperature, iters);
        st.assignment = Matrix();
        states[s].push_back(std::move(st));
      }
    }
    DiscriminatorConfig dcfg = cfg.discriminator;
    dcfg.seed = config.seed;
    const TrainedDiscriminator est = train_discriminator(collect_region_features(states[0]),
                                                        collect_region_features(states[1]), dcfg);
    const PadEstimate pad = compute_pad(est.params, est.held_out);
    pad_csv += std::string(kinds[kind]) + "," + fmt6(pad.epsilon) + "," + fmt6(pad.distance) + "\n";
    for (const auto& p : save_mlp(out.root() / (std::string(kinds[kind]) + "_discriminator"), est.params)) {
      out.record(p);
    }
    json log = json::array();
    for (const auto& e : est.log) log.push_back({{"loss", e.loss}, {"held_out_accuracy", e.held_out_accuracy}});
    extra["estimators"][kinds[kind]] = {{"epochs", log}, {"d_A", pad.distance}};

    std::vector<TransferabilityMap> test_maps;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < states[s].size(); ++i) {
        const TransferabilityMap map = build_transferability_map(est.params, states[s][i], kinds[kind]);
        write_map(out, fs::path(kinds[kind]) / kSplits[s], i, map, states[s][i]);
        if (s == 2) test_maps.push_back(map);
      }
    }
    extra["estimators"][kinds[kind]]["test_auc"] = transferability_auc(test_maps, states[2], d.test);
  }
  out.write("pad.csv", pad_csv);
  out.finish("estimate", config, extra);
}

void cmd_finetune(const RunConfig& config, const fs::path& dataset, const fs::path& maps,
                  Variant variant) {
  const Dataset d = load_dataset(dataset);
  const ExperimentConfig cfg = with_data(config, d);
  const bool needs_maps = variant != Variant::Vanilla;
  if (needs_maps && maps.empty()) {
    throw ConfigError(std::string("variant ") + variant_name(variant) +
                      " needs --maps (the output directory of `tmt estimate`)");
  }

  SeedWorkspace ws;
  ws.seed = config.seed;
  ws.source = d.source;
  ws.target = d.target;
  ws.test = d.test;
  if (!maps.empty()) {
    const std::string kind = variant == Variant::NoActe ? "grid" : "adaptive";
    auto load = [&](const char* split, const std::vector<LabeledImage>& images) {
      std::vector<TransferabilityMap> out;
      for (std::size_t i = 0; i < images.size(); ++i) {
        TransferabilityMap m;
        m.height = images[i].features.height;
        m.width = images[i].features.width;
        m.pixel_scores = load_scores(maps / kind / split / (image_stem(i) + "_T.f64"), m.height * m.width);
        m.provenance = kind;
        out.push_back(std::move(m));
      }
      return out;
    };
    auto& target = variant == Variant::NoActe ? ws.target_grid_maps : ws.target_maps;
    auto& test = variant == Variant::NoActe ? ws.test_grid_maps : ws.test_maps;
    target = load("target", ws.target);
    test = load("test", ws.test);
    ws.pad = load_pad(maps, "adaptive");
    ws.grid_pad = load_pad(maps, "grid");
  } else {
    ws.pad.distance = ws.grid_pad.distance = std::nan("");
  }
  ws.source_model = train_source_model(cfg, ws.source, config.seed);

  OutputSet out(config.output_dir);
  const VariantResult res = run_variant(cfg, ws, variant, cfg.percentile, cfg.mask_threshold);
  for (const auto& p : save_seg_model(out.root() / "model", res.model)) out.record(p);
  ExperimentReport report;
  report.seeds = {config.seed};
  report.rows.push_back(res);
  out.write("metrics.csv", report_csv(report));
  std::string iou = "class,iou\n";
  for (std::size_t c = 0; c < res.class_iou.size(); ++c) iou += std::to_string(c) + "," + fmt6(res.class_iou[c]) + "\n";
  out.write("class_iou.csv", iou);
  const std::size_t h = d.config.experiment.data.height, w = d.config.experiment.data.width;
  for (std::size_t i = 0; i < res.preview_labels.size(); ++i) {
    out.write(fs::path("labels") / (image_stem(i) + "_pred.ppm"), encode_label_ppm(w, h, res.preview_labels[i]));
    out.write(fs::path("labels") / (image_stem(i) + "_truth.ppm"), encode_label_ppm(w, h, d.test[i].labels));
  }
  out.finish("finetune", config, {{"variant", variant_name(variant)}, {"miou", res.miou}, {"macc", res.macc}});
}

void cmd_ablate(const RunConfig& config) {
  const std::vector<Variant> variants(std::begin(kAllVariants), std::end(kAllVariants));
  const ExperimentReport r = run_ablation(config.experiment, config.seeds(), variants);
  OutputSet out(config.output_dir);
  out.write("ablation.csv", report_csv(r));
  out.write("summary.csv", report_summary(r, variants));
  write_previews(out, r, config.experiment.data.height, config.experiment.data.width);
  out.finish("ablate", config);
}

void cmd_sweep(const RunConfig& config) {
  const ExperimentReport r = sweep_pt(config.experiment, config.sweep_percentiles, config.seeds());
  OutputSet out(config.output_dir);
  out.write("sweep.csv", report_csv(r));
  std::string summary = "p_T,median_miou,median_macc,median_fallback_rate\n";
  for (double p : config.sweep_percentiles) {
    std::vector<double> mi, ma, fb;
    for (const auto& row : r.rows) {
      if (row.percentile != p) continue;
      mi.push_back(row.miou);
      ma.push_back(row.macc);
      fb.push_back(row.fallback_rate);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%g,%.6f,%.6f,%.6f\n", p, median(mi), median(ma), median(fb));
    summary += buf;
  }
  summary += "# default p_T = 30\n";
  out.write("sweep_summary.csv", summary);
  write_previews(out, r, config.experiment.data.height, config.experiment.data.width);
  out.finish("sweep", config);
}

bool cmd_gradcheck(const RunConfig& config, std::size_t instances, double tolerance) {
  const auto cases = run_gradcheck_suite(config.seed, instances);
  OutputSet out(config.output_dir);
  std::string csv = "component,instance,max_relative_error\n";
  bool ok = true;
  json worst = json::object();
  for (const auto& c : cases) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.3e\n", c.component.c_str(), c.instance, c.max_relative_error);
    csv += buf;
    ok = ok && c.max_relative_error <= tolerance;
    const double prev = worst.value(c.component, 0.0);
    worst[c.component] = std::max(prev, c.max_relative_error);
  }
  for (const auto& [name, v] : worst.items()) {
    std::cout << name << ": max relative error " << v.get<double>()
              << (v.get<double>() <= tolerance ? " ok" : " FAILED") << "\n";
  }
  out.write("gradcheck.csv", csv);
  out.finish("gradcheck", config, {{"tolerance", tolerance}, {"passed", ok}});
  return ok;
}

}  // namespace tmt::cli
