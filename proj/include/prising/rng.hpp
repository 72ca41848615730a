#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace prising {

// splitmix64 finalizer. Used to whiten seeds and to derive independent
// substreams from (seed, key...) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

// Hash-chains keys onto a master seed. Replicates, chains and worker tasks
// each get their stream from the same master seed plus a row key, so results
// do not depend on scheduling order.
template <class... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key, Rest... rest) {
  return derive_seed(mix64(seed ^ mix64(key ^ 0xd1b54a32d192ed03ULL)), rest...);
}

// Deterministic RNG stream. The engine (std::mt19937_64) and every
// distribution below are fully specified, so a seed reproduces the same
// draws on any platform; std::*_distribution is avoided on purpose.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // fair coin on {-1, +1}
  int next_spin() { return (engine_() & 1u) ? 1 : -1; }

  // uniform on {0, ..., bound-1}, rejection sampled (no modulo bias)
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  // standard normal via Box-Muller
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // centered Laplace with unit scale
  double next_laplace() {
    double u = next_double();
    if (u < 0x1.0p-53) u = 0x1.0p-53;
    return (u < 0.5) ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
};

}  // namespace prising
