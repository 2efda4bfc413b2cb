#ifndef STARALLOC_RNG_HPP
#define STARALLOC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "staralloc/types.hpp"

namespace staralloc {

// Deterministic random stream. Gaussian variates are produced by an explicit
// Box-Muller transform on top of mt19937_64 so that sequences are bit-identical
// across standard library implementations (std::normal_distribution is not).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return engine_(); }

  // Standard real Gaussian N(0, 1).
  double gaussian() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Circularly-symmetric complex Gaussian CN(0, 1): E[|z|^2] = 1.
  Cplx complex_gaussian() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
  }

  std::uint64_t seed() const { return seed_; }

  // Independent child stream; index-stable so parallel workers derive their
  // own streams without sharing generator state.
  RngStream substream(std::uint64_t index) const {
    return RngStream(mix(seed_, index));
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined word
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace staralloc

#endif
