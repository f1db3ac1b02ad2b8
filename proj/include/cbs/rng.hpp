#pragma once

#include <cstdint>
#include <random>

namespace cbs {

// Deterministic RNG. Distributions are hand-rolled on top of the raw 64-bit
// stream so results are pinned to the seed, not to libstdc++'s
// implementation-defined std::uniform_* internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // [0, 1)
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  uint64_t index(uint64_t n) { return n ? eng_() % n : 0; }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    // Marsaglia polar; cached second value kept out for determinism clarity.
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

 private:
  std::mt19937_64 eng_;
};

// Stable per-cell hash for jittered lattices: same (seed, cell) -> same value.
inline uint64_t hash_cell(uint64_t seed, int64_t ix, int64_t iy, int64_t iz) {
  uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  auto mix = [&h](uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
  };
  mix(uint64_t(ix));
  mix(uint64_t(iy));
  mix(uint64_t(iz));
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

inline double hash_unit(uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

}  // namespace cbs
