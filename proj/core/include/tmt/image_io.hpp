#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tmt/tma.hpp"

namespace tmt {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Binary PGM (P5, maxval 255).
std::string encode_pgm(const GrayImage& img);
/// Binary PPM (P6, maxval 255); `rgb` holds 3 bytes per pixel.
std::string encode_ppm(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgb);

/// Parses P5 or P2 with maxval ≤ 255. Throws InputError on malformed data.
GrayImage decode_pgm(const std::string& bytes);

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Region or class ids as gray levels (id mod 256).
GrayImage label_image(std::size_t width, std::size_t height, std::span<const std::size_t> ids);
GrayImage label_image(std::size_t width, std::size_t height, std::span<const int> ids);
/// Scores in [0, 1] as round(T·255).
GrayImage score_image(std::size_t width, std::size_t height, std::span<const double> scores);
/// Additive mask row-per-query stacked vertically: 0 → white, −∞ → black.
GrayImage mask_image(const AttentionMask& mask);

std::array<std::uint8_t, 3> class_color(int cls);
/// Class labels rendered with the fixed palette.
std::string encode_label_ppm(std::size_t width, std::size_t height, std::span<const int> labels);

}  // namespace tmt
