#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lanesim/math.hpp"

namespace lanesim {

/// SplitMix64 step; also used as a stable per-index hash for deterministic
/// subsampling decisions that must not depend on iteration order.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream. The mt19937_64 engine sequence is pinned by
/// the standard and all mappings to doubles are explicit here, so a seed
/// reproduces bit-identical samples on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cosine branch only; no hidden state).
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  /// N(0, sigma^2) truncated to [-clip, clip] by rejection.
  /// clip == 0 degenerates to exactly 0.
  double truncated_gaussian(double sigma, double clip) {
    if (clip <= 0.0) return 0.0;
    for (;;) {
      double z = gaussian() * sigma;
      if (std::abs(z) <= clip) return z;
    }
  }

  /// Independent child stream; children with distinct keys never collide.
  Rng split(uint64_t key) const {
    return Rng(splitmix64(seed_ ^ splitmix64(key + 0x632be59bd9b4e019ULL)));
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace lanesim
