#pragma once

#include <cstdint>

namespace cedr {

/// SplitMix64 (Steele, Lea, Flood 2014). Used to expand seeds.
///   z += 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman, Vigna). State seeded by four SplitMix64
/// outputs. Every derived quantity (uniform doubles, integers, normals) is
/// computed here rather than through <random> distributions, whose outputs
/// differ between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Independent stream for (seed, stream, index), e.g. one per sample.
  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box–Muller (one draw per call, no caching).
  double normal();

 private:
  std::uint64_t s_[4];
};

}  // namespace cedr
