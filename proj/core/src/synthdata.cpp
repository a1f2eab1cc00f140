#include "tmt/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmt/errors.hpp"
#include "tmt/rng.hpp"

namespace tmt {

namespace {

constexpr double kMinClassFraction = 0.05;
constexpr int kMaxLayoutAttempts = 1000;

struct Rect {
  std::size_t y0, x0, y1, x1;  // half-open, in block units
};

// Guillotine partition of the block grid into rectangles.
void split(const Rect& r, std::size_t depth, Rng& rng, std::vector<Rect>& out) {
  const std::size_t h = r.y1 - r.y0;
  const std::size_t w = r.x1 - r.x0;
  const bool can_split = (h > 1 || w > 1) && depth < 3;
  if (!can_split || (depth > 0 && rng.uniform() < 0.25)) {
    out.push_back(r);
    return;
  }
  const bool horizontal = h > 1 && (w <= 1 || rng.uniform() < static_cast<double>(h) / (h + w));
  if (horizontal) {
    const std::size_t cut = r.y0 + 1 + rng.index(h - 1);
    split({r.y0, r.x0, cut, r.x1}, depth + 1, rng, out);
    split({cut, r.x0, r.y1, r.x1}, depth + 1, rng, out);
  } else {
    const std::size_t cut = r.x0 + 1 + rng.index(w - 1);
    split({r.y0, r.x0, r.y1, cut}, depth + 1, rng, out);
    split({r.y0, cut, r.y1, r.x1}, depth + 1, rng, out);
  }
}

std::vector<int> rectangular_layout(const SynthConfig& cfg, Rng& rng) {
  const std::size_t by = cfg.height / cfg.block;
  const std::size_t bx = cfg.width / cfg.block;
  std::vector<Rect> rects;
  split({0, 0, by, bx}, 0, rng, rects);
  std::vector<int> labels(cfg.height * cfg.width, 0);
  for (const Rect& r : rects) {
    const int cls = static_cast<int>(rng.index(cfg.classes));
    for (std::size_t y = r.y0 * cfg.block; y < r.y1 * cfg.block; ++y) {
      for (std::size_t x = r.x0 * cfg.block; x < r.x1 * cfg.block; ++x) {
        labels[y * cfg.width + x] = cls;
      }
    }
  }
  return labels;
}

// Voronoi cells around random sites.
std::vector<int> irregular_layout(const SynthConfig& cfg, Rng& rng) {
  const std::size_t sites = 2 * cfg.classes + 2;
  std::vector<double> sy(sites), sx(sites);
  std::vector<int> cls(sites);
  for (std::size_t s = 0; s < sites; ++s) {
    sy[s] = rng.uniform(0.0, static_cast<double>(cfg.height));
    sx[s] = rng.uniform(0.0, static_cast<double>(cfg.width));
    cls[s] = static_cast<int>(rng.index(cfg.classes));
  }
  std::vector<int> labels(cfg.height * cfg.width, 0);
  for (std::size_t y = 0; y < cfg.height; ++y) {
    for (std::size_t x = 0; x < cfg.width; ++x) {
      double best = 1e300;
      for (std::size_t s = 0; s < sites; ++s) {
        const double dy = static_cast<double>(y) + 0.5 - sy[s];
        const double dx = static_cast<double>(x) + 0.5 - sx[s];
        const double d = dy * dy + dx * dx;
        if (d < best) {
          best = d;
          labels[y * cfg.width + x] = cls[s];
        }
      }
    }
  }
  return labels;
}

bool balanced(const std::vector<int>& labels, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  const double min_count = kMinClassFraction * static_cast<double>(labels.size());
  return std::all_of(counts.begin(), counts.end(),
                     [&](std::size_t c) { return static_cast<double>(c) >= min_count; });
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.height == 0 || cfg.width == 0) throw ConfigError("image size must be positive");
  if (cfg.classes == 0) throw ConfigError("need at least one class");
  if (cfg.channels < cfg.classes) {
    throw ConfigError("channels must be at least the class count for orthogonal prototypes");
  }
  if (cfg.block == 0 || cfg.height % cfg.block != 0 || cfg.width % cfg.block != 0) {
    throw ConfigError("layout block must divide the image size");
  }
  if (!(cfg.shift >= 0.0)) throw ConfigError("shift must be non-negative");
  if (!(cfg.noise >= 0.0)) throw ConfigError("noise must be non-negative");
  for (std::size_t c : cfg.shifted_classes) {
    if (c >= cfg.classes) throw ConfigError("shifted class " + std::to_string(c) + " out of range");
  }
  if (cfg.shifted_classes.size() >= cfg.classes) {
    throw ConfigError("shifted classes must be a proper subset of the classes");
  }
}

bool is_shifted(const SynthConfig& cfg, std::size_t cls) {
  return std::find(cfg.shifted_classes.begin(), cfg.shifted_classes.end(), cls) !=
         cfg.shifted_classes.end();
}

std::vector<double> shift_direction(const SynthConfig& cfg, std::size_t cls) {
  // Half toward the next class prototype, half along a seeded direction in
  // the channels no prototype uses.
  std::vector<double> dir(cfg.channels, 0.0);
  dir[(cls + 1) % cfg.classes] = 1.0;
  Rng rng(cfg.seed, {0x5417, cls});
  std::vector<double> extra(cfg.channels, 0.0);
  double extra_norm = 0.0;
  for (std::size_t c = cfg.classes; c < cfg.channels; ++c) {
    extra[c] = rng.normal();
    extra_norm += extra[c] * extra[c];
  }
  extra_norm = std::sqrt(extra_norm);
  if (extra_norm > 0.0) {
    for (std::size_t c = 0; c < cfg.channels; ++c) dir[c] += extra[c] / extra_norm;
  }
  double n = 0.0;
  for (double v : dir) n += v * v;
  n = std::sqrt(n);
  for (double& v : dir) v /= n;
  return dir;
}

std::vector<LabeledImage> generate(const SynthConfig& cfg, std::size_t count, Domain domain,
                                   std::uint64_t stream) {
  validate(cfg);
  std::vector<std::vector<double>> offsets(cfg.classes, std::vector<double>(cfg.channels, 0.0));
  if (domain == Domain::Target) {
    for (std::size_t c : cfg.shifted_classes) {
      const auto dir = shift_direction(cfg, c);
      for (std::size_t k = 0; k < cfg.channels; ++k) offsets[c][k] = cfg.shift * dir[k];
    }
  }

  std::vector<LabeledImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(cfg.seed, {static_cast<std::uint64_t>(domain), stream, i});
    std::vector<int> labels;
    for (int attempt = 0;; ++attempt) {
      labels = cfg.layout == Layout::Rectangular ? rectangular_layout(cfg, rng)
                                                 : irregular_layout(cfg, rng);
      if (balanced(labels, cfg.classes)) break;
      if (attempt >= kMaxLayoutAttempts) {
        throw ConfigError("could not draw a class-balanced layout; image too small for the class count");
      }
    }

    LabeledImage img;
    img.domain = domain;
    img.features = FeatureMap(cfg.height, cfg.width, cfg.channels);
    img.transferable.resize(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto cls = static_cast<std::size_t>(labels[j]);
      auto f = img.features.pixel(j);
      for (std::size_t k = 0; k < cfg.channels; ++k) {
        f[k] = (k == cls ? 1.0 : 0.0) + offsets[cls][k] +
               (cfg.noise > 0.0 ? rng.normal(0.0, cfg.noise) : 0.0);
      }
      img.transferable[j] = is_shifted(cfg, cls) ? 0 : 1;
    }
    img.labels = std::move(labels);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace tmt
