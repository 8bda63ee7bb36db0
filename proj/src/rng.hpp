#pragma once

#include <cstdint>

namespace dfsim {

// splitmix64 (Steele, Lea, Flood 2014). Chosen for the input generator
// because it is trivially portable: 64 bits of state, exact same stream on
// every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double uniform_signed() { return 2.0 * uniform() - 1.0; }

 private:
  std::uint64_t state_;
};

}  // namespace dfsim
