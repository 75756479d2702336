// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>

namespace ifcn {

// Deterministic RNG with explicit state. std::mt19937 distributions are
// implementation-defined, so all sampling goes through these routines to keep
// generated datasets and initializations bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) { return n ? next_u64() % n : 0; }

  // Standard normal via Box-Muller; no cached state so draws stay
  // position-independent.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Normal truncated to [-2 sigma, 2 sigma], resampled on rejection.
  double truncated_normal(double stddev) {
    for (;;) {
      double z = normal();
      if (std::fabs(z) <= 2.0) return z * stddev;
    }
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Stateless seed derivation for per-item randomness, e.g. hash(seed, index).
inline uint64_t hash_seed(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash_seed(uint64_t a, uint64_t b, uint64_t c) {
  return hash_seed(hash_seed(a, b), c);
}

}  // namespace ifcn
