#include "tmt/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <utility>

#include <json.hpp>

#include "tmt/errors.hpp"
#include "tmt/image_io.hpp"

namespace tmt {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "f64le-flat";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

std::vector<std::string> seg_tensor_names(const SegModelParams& p) {
  std::vector<std::string> names{"embed_w", "embed_b", "query_init", "key_proj", "value_proj"};
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string pre = "layers." + std::to_string(l) + ".";
    for (const char* n : {"query_proj", "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2"}) {
      names.push_back(pre + n);
    }
  }
  names.insert(names.end(), {"class_w", "class_b", "mask_w", "mask_b"});
  return names;
}

json tensor_manifest(const ConstParamRefs& refs, const std::vector<std::string>& names) {
  json tensors = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    tensors.push_back({{"name", names[i]},
                       {"rows", refs[i]->rows()},
                       {"cols", refs[i]->cols()},
                       {"offset", offset}});
    offset += refs[i]->size();
  }
  return tensors;
}

void check_manifest(const json& manifest, const ConstParamRefs& refs) {
  if (manifest.value("format", "") != kFormat) throw InputError("unknown parameter file format");
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != refs.size()) throw ShapeError("parameter manifest tensor count mismatch");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (tensors[i].at("rows").get<std::size_t>() != refs[i]->rows() ||
        tensors[i].at("cols").get<std::size_t>() != refs[i]->cols()) {
      throw ShapeError("parameter manifest shape mismatch for " +
                       tensors[i].at("name").get<std::string>());
    }
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  return stem.string() + ext;
}

}  // namespace

std::string encode_f64le(std::span<const double> values) {
  std::string out(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(out.data() + 8 * i, &bits, 8);
  }
  return out;
}

std::vector<double> decode_f64le(const std::string& bytes) {
  if (bytes.size() % 8 != 0) throw InputError("binary64 stream length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes.data() + 8 * i, 8);
    out[i] = std::bit_cast<double>(to_le(bits));
  }
  return out;
}

std::vector<std::filesystem::path> save_seg_model(const std::filesystem::path& stem,
                                                  const SegModelParams& params) {
  const auto refs = params.refs();
  const SegModelConfig& c = params.config;
  json manifest{{"format", kFormat},
                {"kind", "segmentation_head"},
                {"config",
                 {{"in_channels", c.in_channels},
                  {"channels", c.channels},
                  {"queries", c.queries},
                  {"layers", c.layers},
                  {"classes", c.classes},
                  {"ffn_hidden", c.ffn_hidden},
                  {"patch_radius", c.patch_radius}}},
                {"tensors", tensor_manifest(refs, seg_tensor_names(params))}};
  const auto bin = with_suffix(stem, ".bin");
  const auto meta = with_suffix(stem, ".json");
  write_file(bin, encode_f64le(flatten(refs)));
  write_file(meta, manifest.dump(2) + "\n");
  return {bin, meta};
}

SegModelParams load_seg_model(const std::filesystem::path& stem) {
  const json manifest = json::parse(read_file(with_suffix(stem, ".json")));
  const json& jc = manifest.at("config");
  SegModelConfig c;
  c.in_channels = jc.at("in_channels");
  c.channels = jc.at("channels");
  c.queries = jc.at("queries");
  c.layers = jc.at("layers");
  c.classes = jc.at("classes");
  c.ffn_hidden = jc.at("ffn_hidden");
  c.patch_radius = jc.at("patch_radius");
  Rng rng(0);
  SegModelParams p = make_seg_model(c, rng);
  check_manifest(manifest, std::as_const(p).refs());
  unflatten(decode_f64le(read_file(with_suffix(stem, ".bin"))), p.refs());
  return p;
}

std::vector<std::filesystem::path> save_mlp(const std::filesystem::path& stem,
                                            const MlpParams& params) {
  const auto refs = params.refs();
  std::vector<std::string> names;
  std::vector<std::size_t> dims{params.input_dim()};
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    names.push_back("weights." + std::to_string(l));
    names.push_back("biases." + std::to_string(l));
    dims.push_back(params.weights[l].cols());
  }
  json manifest{{"format", kFormat},
                {"kind", "domain_discriminator"},
                {"dims", dims},
                {"tensors", tensor_manifest(refs, names)}};
  const auto bin = with_suffix(stem, ".bin");
  const auto meta = with_suffix(stem, ".json");
  write_file(bin, encode_f64le(flatten(refs)));
  write_file(meta, manifest.dump(2) + "\n");
  return {bin, meta};
}

MlpParams load_mlp(const std::filesystem::path& stem) {
  const json manifest = json::parse(read_file(with_suffix(stem, ".json")));
  const auto dims = manifest.at("dims").get<std::vector<std::size_t>>();
  Rng rng(0);
  MlpParams p = make_mlp(dims, rng);
  check_manifest(manifest, std::as_const(p).refs());
  unflatten(decode_f64le(read_file(with_suffix(stem, ".bin"))), p.refs());
  return p;
}

void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm) {
  write_file(path, encode_f64le(fm.features.values()));
}

FeatureMap load_feature_map(const std::filesystem::path& path, std::size_t height,
                            std::size_t width, std::size_t channels) {
  auto values = decode_f64le(read_file(path));
  if (values.size() != height * width * channels) {
    throw ShapeError("feature file " + path.string() + " has the wrong length");
  }
  return FeatureMap(height, width, Matrix(height * width, channels, std::move(values)));
}

}  // namespace tmt
