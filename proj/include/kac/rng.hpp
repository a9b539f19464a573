#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace kac {

using Rng = std::mt19937_64;

/// Seed of replica substream `index` derived from `master`:
///   z = master + (index + 1) * 0x9E3779B97F4A7C15, followed by the splitmix64
///   finalizer. Distinct indices give decorrelated mt19937_64 seeds.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_substream(std::uint64_t master, std::uint64_t index) {
  return Rng{substream_seed(master, index)};
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline void fill_standard_normal(std::span<double> out, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& x : out) x = dist(rng);
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// Beta(a, b) via the ratio of two gamma variates.
inline double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace kac
