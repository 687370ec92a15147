#pragma once

#include <cstdint>

namespace stab {

// ============================================================================
// Deterministic counter-based RNG.
//
// SplitMix64 (Steele, Lea, Flood 2014): the t-th output is a bijective mix of
// seed + t * GAMMA, so the stream is a pure function of (seed, counter) and is
// stable across platforms and releases.  All stochastic components of the
// library draw from this generator; nothing uses std::random_device or
// unseeded state.
// ============================================================================

class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Mixing function applied to each advanced state word.
  [[nodiscard]] static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(state_ += kGamma); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Unbiased uniform integer in [0, n) via rejection sampling.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

// Derives an independent child seed for experiment cell `cell` from a root
// seed.  Pure function, stable across releases; used so that parallel cells
// get reproducible streams regardless of scheduling.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root, std::uint64_t cell);

}  // namespace stab
