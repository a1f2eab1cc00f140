#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tmt/feature_map.hpp"
#include "tmt/mlp.hpp"
#include "tmt/segmodel.hpp"

namespace tmt {

/// Little-endian IEEE-754 binary64, no header.
std::string encode_f64le(std::span<const double> values);
std::vector<double> decode_f64le(const std::string& bytes);

/// Writes `<stem>.bin` (all tensors, flat, in parameter order) and
/// `<stem>.json` (tensor names, shapes, offsets, model config). Returns the
/// written paths.
std::vector<std::filesystem::path> save_seg_model(const std::filesystem::path& stem,
                                                  const SegModelParams& params);
SegModelParams load_seg_model(const std::filesystem::path& stem);

std::vector<std::filesystem::path> save_mlp(const std::filesystem::path& stem,
                                            const MlpParams& params);
MlpParams load_mlp(const std::filesystem::path& stem);

void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm);
FeatureMap load_feature_map(const std::filesystem::path& path, std::size_t height,
                            std::size_t width, std::size_t channels);

}  // namespace tmt
