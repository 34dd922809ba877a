#pragma once

#include <cstdint>
#include <limits>

namespace subsearch {

/// Seeded generator: a 64-bit linear congruential state (Knuth's MMIX
/// multiplier and increment) with an xorshift-multiply output permutation,
/// as in PCG's RXS-M-XS variant. Normals come from Box-Muller.
///
/// Bit-reproducible across platforms for a given seed, unlike the standard
/// library's distributions. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + kIncrement) {
    (*this)();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t old = state_;
    state_ = old * kMultiplier + kIncrement;
    std::uint64_t word = ((old >> ((old >> 59U) + 5U)) ^ old) * 12605985483714917081ULL;
    return (word >> 43U) ^ word;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

  /// Standard normal via the Box-Muller transform; caches the second draw.
  double normal();

 private:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace subsearch
