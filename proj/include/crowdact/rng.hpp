#pragma once

#include <cstdint>

namespace crowdact {

/// Stateless counter-based generator: draw `index` of stream `seed` is a pure
/// function of both, so chunked or parallel generation reproduces the serial
/// sequence exactly.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

  constexpr std::uint64_t bits(std::uint64_t index) const {
    return mix(mix(seed_) ^ (index * 0xD2B74407B1CE6E93ULL + 0x9E3779B97F4A7C15ULL));
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  constexpr double uniform(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  /// Uniform in [-1, 1).
  constexpr double symmetric(std::uint64_t index) const { return 2.0 * uniform(index) - 1.0; }

  std::uint64_t seed() const { return seed_; }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

}  // namespace crowdact
