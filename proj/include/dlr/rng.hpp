#pragma once

#include <cmath>
#include <cstdint>

namespace dlr {

// SplitMix64 generator. Sampling is hand-rolled (Box-Muller for normals) so
// that generated data does not depend on the standard library's
// distribution implementations and stays reproducible across toolchains.
struct Rng {
  uint64_t s;

  explicit Rng(uint64_t seed) : s(seed) {}

  uint64_t next_u64() {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // standard normal; two uniforms per draw, no cached spare
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // uniform integer in [0, n), n > 0
  uint64_t below(uint64_t n) {
    uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = next_u64();
    while (x >= lim) x = next_u64();
    return x % n;
  }
};

// Derives independent seed streams, e.g. mix_seed(run_seed, step, purpose).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (0x9e3779b97f4a7c15ULL + (b << 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

}  // namespace dlr
