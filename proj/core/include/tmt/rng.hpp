#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tmt {

/// Seeded random source. Identical seeds give bitwise-identical streams on
/// one platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, {}) {}

  /// Independent stream keyed by (seed, tags...).
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                     static_cast<std::uint32_t>(seed >> 32)};
    for (auto t : tags) {
      words.push_back(static_cast<std::uint32_t>(t));
      words.push_back(static_cast<std::uint32_t>(t >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tmt
