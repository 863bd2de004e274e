#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gridcausal {

// Seeded random source with hand-rolled transforms so that generated
// artifacts are byte-identical across standard library implementations
// (std::*_distribution is not portable, the mt19937_64 stream is).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Zero-mean Laplace with the given scale parameter b (variance 2 b^2).
  double laplace(double scale) {
    double p = uniform();
    if (p < 0x1.0p-53) p = 0x1.0p-53;
    return p < 0.5 ? scale * std::log(2.0 * p) : -scale * std::log(2.0 * (1.0 - p));
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Independent child stream, stable in (seed, stream).
  Rng fork(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gridcausal
