#include "cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "tmt/errors.hpp"

namespace tmt::cli {

namespace {

using json = nlohmann::ordered_json;

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::size_t as_positive(const json& v, const std::string& key) {
  const std::size_t n = as_count(v, key);
  if (n == 0) throw ConfigError("config key '" + key + "' must be positive");
  return n;
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw ConfigError("config key '" + key + "' must be a finite number");
  }
  return v.get<double>();
}

double in_range(const json& v, const std::string& key, double lo, double hi) {
  const double x = as_number(v, key);
  if (x < lo || x > hi) {
    throw ConfigError("config key '" + key + "' must lie in [" + json(lo).dump() + ", " +
                      json(hi).dump() + "]");
  }
  return x;
}

template <typename T>
std::vector<T> as_list(const json& v, const std::string& key,
                       const std::function<T(const json&, const std::string&)>& item) {
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(item(e, key));
  return out;
}

struct Field {
  std::function<void(RunConfig&, const json&, const std::string&)> set;
  std::function<json(const RunConfig&)> get;
};

// Schema order is the order of this list.
const std::vector<std::pair<std::string, Field>>& schema() {
  static const std::vector<std::pair<std::string, Field>> fields = [] {
    std::vector<std::pair<std::string, Field>> f;
    auto add = [&](std::string key, Field field) { f.emplace_back(std::move(key), std::move(field)); };
    add("height", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.height = as_positive(v, k); },
                   [](const RunConfig& c) { return json(c.experiment.data.height); }});
    add("width", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.width = as_positive(v, k); },
                  [](const RunConfig& c) { return json(c.experiment.data.width); }});
    add("channels", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.channels = as_positive(v, k); },
                     [](const RunConfig& c) { return json(c.experiment.data.channels); }});
    add("classes", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.classes = as_positive(v, k); },
                    [](const RunConfig& c) { return json(c.experiment.data.classes); }});
    add("shifted_classes", {[](RunConfig& c, const json& v, const std::string& k) {
                              c.experiment.data.shifted_classes = as_list<std::size_t>(v, k, as_count);
                            },
                            [](const RunConfig& c) { return json(c.experiment.data.shifted_classes); }});
    add("delta", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.shift = in_range(v, k, 0.0, 1e6); },
                  [](const RunConfig& c) { return json(c.experiment.data.shift); }});
    add("sigma", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.noise = in_range(v, k, 0.0, 1e6); },
                  [](const RunConfig& c) { return json(c.experiment.data.noise); }});
    add("layout_block", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.data.block = as_positive(v, k); },
                         [](const RunConfig& c) { return json(c.experiment.data.block); }});
    add("layout", {[](RunConfig& c, const json& v, const std::string& k) {
                     if (v == "rectangular") c.experiment.data.layout = Layout::Rectangular;
                     else if (v == "irregular") c.experiment.data.layout = Layout::Irregular;
                     else throw ConfigError("config key '" + k + "' must be \"rectangular\" or \"irregular\"");
                   },
                   [](const RunConfig& c) {
                     return json(c.experiment.data.layout == Layout::Rectangular ? "rectangular" : "irregular");
                   }});
    add("source_images", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.source_images = as_positive(v, k); },
                          [](const RunConfig& c) { return json(c.experiment.source_images); }});
    add("target_images", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.target_images = as_positive(v, k); },
                          [](const RunConfig& c) { return json(c.experiment.target_images); }});
    add("test_images", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.test_images = as_positive(v, k); },
                        [](const RunConfig& c) { return json(c.experiment.test_images); }});
    add("r", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.stride = as_positive(v, k); },
              [](const RunConfig& c) { return json(c.experiment.stride); }});
    add("tau", {[](RunConfig& c, const json& v, const std::string& k) {
                  c.experiment.temperature = as_number(v, k);
                  if (c.experiment.temperature <= 0.0) throw ConfigError("config key 'tau' must be positive");
                },
                [](const RunConfig& c) { return json(c.experiment.temperature); }});
    add("cluster_iters", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.cluster_iters = as_count(v, k); },
                          [](const RunConfig& c) { return json(c.experiment.cluster_iters); }});
    add("disc_hidden", {[](RunConfig& c, const json& v, const std::string& k) {
                          c.experiment.discriminator.hidden = as_list<std::size_t>(v, k, as_positive);
                        },
                        [](const RunConfig& c) { return json(c.experiment.discriminator.hidden); }});
    add("disc_epochs", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.discriminator.epochs = as_positive(v, k); },
                        [](const RunConfig& c) { return json(c.experiment.discriminator.epochs); }});
    add("disc_batch", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.discriminator.batch_size = as_positive(v, k); },
                       [](const RunConfig& c) { return json(c.experiment.discriminator.batch_size); }});
    add("disc_lr", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.discriminator.lr = in_range(v, k, 0.0, 10.0); },
                    [](const RunConfig& c) { return json(c.experiment.discriminator.lr); }});
    add("queries", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.model.queries = as_positive(v, k); },
                    [](const RunConfig& c) { return json(c.experiment.model.queries); }});
    add("model_channels", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.model.channels = as_positive(v, k); },
                           [](const RunConfig& c) { return json(c.experiment.model.channels); }});
    add("layers", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.model.layers = as_positive(v, k); },
                   [](const RunConfig& c) { return json(c.experiment.model.layers); }});
    add("ffn_hidden", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.model.ffn_hidden = as_positive(v, k); },
                       [](const RunConfig& c) { return json(c.experiment.model.ffn_hidden); }});
    add("patch_radius", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.model.patch_radius = as_count(v, k); },
                         [](const RunConfig& c) { return json(c.experiment.model.patch_radius); }});
    add("source_steps", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.source_steps = as_count(v, k); },
                         [](const RunConfig& c) { return json(c.experiment.source_steps); }});
    add("finetune_steps", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.finetune_steps = as_count(v, k); },
                           [](const RunConfig& c) { return json(c.experiment.finetune_steps); }});
    add("batch_size", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.batch_size = as_positive(v, k); },
                       [](const RunConfig& c) { return json(c.experiment.batch_size); }});
    add("source_lr", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.source_lr = in_range(v, k, 0.0, 10.0); },
                      [](const RunConfig& c) { return json(c.experiment.source_lr); }});
    add("finetune_lr", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.finetune_lr = in_range(v, k, 0.0, 10.0); },
                        [](const RunConfig& c) { return json(c.experiment.finetune_lr); }});
    add("weight_decay", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.weight_decay = in_range(v, k, 0.0, 1.0); },
                         [](const RunConfig& c) { return json(c.experiment.weight_decay); }});
    add("lambda_M", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.mask_threshold = in_range(v, k, 0.0, 1.0); },
                     [](const RunConfig& c) { return json(c.experiment.mask_threshold); }});
    add("p_T", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.percentile = in_range(v, k, 0.0, 100.0); },
                [](const RunConfig& c) { return json(c.experiment.percentile); }});
    add("sweep_p_T", {[](RunConfig& c, const json& v, const std::string& k) {
                        c.sweep_percentiles = as_list<double>(v, k, [](const json& e, const std::string& key) {
                          return in_range(e, key, 0.0, 100.0);
                        });
                        if (c.sweep_percentiles.empty()) throw ConfigError("config key 'sweep_p_T' must not be empty");
                      },
                      [](const RunConfig& c) { return json(c.sweep_percentiles); }});
    add("preview_images", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.preview_images = as_count(v, k); },
                           [](const RunConfig& c) { return json(c.experiment.preview_images); }});
    add("threads", {[](RunConfig& c, const json& v, const std::string& k) { c.experiment.threads = as_positive(v, k); },
                    [](const RunConfig& c) { return json(c.experiment.threads); }});
    add("seed", {[](RunConfig& c, const json& v, const std::string& k) {
                   if (!v.is_number_unsigned()) throw ConfigError("config key '" + k + "' must be a non-negative integer");
                   c.seed = v.get<std::uint64_t>();
                 },
                 [](const RunConfig& c) { return json(c.seed); }});
    add("num_seeds", {[](RunConfig& c, const json& v, const std::string& k) { c.num_seeds = as_positive(v, k); },
                      [](const RunConfig& c) { return json(c.num_seeds); }});
    add("output_dir", {[](RunConfig& c, const json& v, const std::string& k) {
                         if (!v.is_string() || v.get<std::string>().empty()) {
                           throw ConfigError("config key '" + k + "' must be a non-empty string");
                         }
                         c.output_dir = v.get<std::string>();
                       },
                       [](const RunConfig& c) { return json(c.output_dir); }});
    return f;
  }();
  return fields;
}

}  // namespace

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) out[i] = seed + i;
  return out;
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  std::map<std::string, const Field*> lookup;
  for (const auto& [key, field] : schema()) lookup[key] = &field;
  for (const auto& [key, value] : doc.items()) {
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second->set(cfg, value, key);
  }
  validate(cfg.experiment.data);
  if (cfg.experiment.model.queries < cfg.experiment.data.classes) {
    throw ConfigError("queries must be at least the class count");
  }
  if (cfg.experiment.data.height % cfg.experiment.stride != 0 ||
      cfg.experiment.data.width % cfg.experiment.stride != 0) {
    throw ConfigError("r must divide the image height and width");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& [key, field] : schema()) {
    if (key != "output_dir") out[key] = field.get(cfg);
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, field] : schema()) keys.push_back(key);
  return keys;
}

}  // namespace tmt::cli
