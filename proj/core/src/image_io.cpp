#include "tmt/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{
    {230, 25, 75},
    {60, 180, 75},
    {0, 130, 200},
    {255, 225, 25},
    {245, 130, 48},
    {145, 30, 180},
    {70, 240, 240},
    {128, 128, 128},
}};

std::string header(const char* magic, std::size_t w, std::size_t h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

std::string encode_pgm(const GrayImage& img) {
  if (img.pixels.size() != img.width * img.height) throw ShapeError("pgm pixel count mismatch");
  std::string out = header("P5", img.width, img.height);
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

std::string encode_ppm(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != 3 * width * height) throw ShapeError("ppm pixel count mismatch");
  std::string out = header("P6", width, height);
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

GrayImage decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw InputError("not a PGM file");
  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    long v = -1;
    if (!(in >> v) || v < 0) throw InputError("malformed PGM header");
    return static_cast<std::size_t>(v);
  };
  GrayImage img;
  img.width = next_int();
  img.height = next_int();
  const std::size_t maxval = next_int();
  if (maxval == 0 || maxval > 255) throw InputError("unsupported PGM maxval");
  img.pixels.resize(img.width * img.height);
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
      throw InputError("truncated PGM raster");
    }
  } else {
    for (auto& p : img.pixels) {
      int v = -1;
      if (!(in >> v) || v < 0 || static_cast<std::size_t>(v) > maxval) {
        throw InputError("malformed PGM raster");
      }
      p = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GrayImage label_image(std::size_t width, std::size_t height, std::span<const std::size_t> ids) {
  if (ids.size() != width * height) throw ShapeError("label map size mismatch");
  GrayImage img{width, height, std::vector<std::uint8_t>(ids.size())};
  for (std::size_t i = 0; i < ids.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(ids[i] % 256);
  return img;
}

GrayImage label_image(std::size_t width, std::size_t height, std::span<const int> ids) {
  if (ids.size() != width * height) throw ShapeError("label map size mismatch");
  GrayImage img{width, height, std::vector<std::uint8_t>(ids.size())};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(static_cast<unsigned>(ids[i]) % 256);
  }
  return img;
}

GrayImage score_image(std::size_t width, std::size_t height, std::span<const double> scores) {
  if (scores.size() != width * height) throw ShapeError("score map size mismatch");
  GrayImage img{width, height, std::vector<std::uint8_t>(scores.size())};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double v = std::clamp(scores[i], 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return img;
}

GrayImage mask_image(const AttentionMask& mask) {
  const Matrix& m = mask.additive;
  GrayImage img{m.cols(), m.rows(), std::vector<std::uint8_t>(m.size())};
  auto v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) img.pixels[i] = v[i] == 0.0 ? 255 : 0;
  return img;
}

std::array<std::uint8_t, 3> class_color(int cls) {
  return kPalette[static_cast<std::size_t>(cls) % kPalette.size()];
}

std::string encode_label_ppm(std::size_t width, std::size_t height, std::span<const int> labels) {
  if (labels.size() != width * height) throw ShapeError("label map size mismatch");
  std::vector<std::uint8_t> rgb;
  rgb.reserve(3 * labels.size());
  for (int l : labels) {
    const auto c = class_color(l);
    rgb.insert(rgb.end(), c.begin(), c.end());
  }
  return encode_ppm(width, height, rgb);
}

}  // namespace tmt
