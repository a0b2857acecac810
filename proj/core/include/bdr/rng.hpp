#pragma once

#include <cstdint>

namespace bdr {

// Counter-based 64-bit generator: the SplitMix64 output function applied to
// seed + counter * 0x9E3779B97F4A7C15 (the golden gamma).  Every draw is a
// pure function of (seed, counter), so streams can be replayed, split, and
// reproduced from any language that implements the same mix.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
    return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ull);
  }

  // Derives an independent sub-seed for a named stream (trial index,
  // replication index, ...).  derive(derive(s, a), b) != derive(s, b).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed ^ 0xA0761D6478BD642Full) + stream * 0xE7037ED1A0B428DBull);
  }

  std::uint64_t next() { return at(seed_, counter_++); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) by the multiply-high reduction (fixed-point
  // scaling of a 64-bit draw; bias < n / 2^64).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace bdr
