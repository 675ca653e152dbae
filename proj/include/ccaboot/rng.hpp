#pragma once

#include <cstdint>
#include <initializer_list>

namespace ccaboot {

// splitmix64 finalizer; full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic random stream addressed by (seed, path). Streams with
// distinct paths are independent, so parallel work items can each own a
// stream and results do not depend on scheduling order.
//
// The generator is splitmix64: a Weyl sequence pushed through mix64.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed,
                     std::initializer_list<std::uint64_t> path = {}) {
    state_ = mix64(seed + kGolden);
    for (std::uint64_t id : path) state_ = mix64(state_ ^ (id + kGolden));
  }

  std::uint64_t next_u64() { return mix64(state_ += kGolden); }

  // Uniform on [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, n), unbiased.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal draw (Box-Muller, pairs cached).
  double next_gaussian();

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  std::uint64_t state_ = 0;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace ccaboot
