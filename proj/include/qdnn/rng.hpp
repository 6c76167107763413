#pragma once

#include <cstdint>

namespace qdnn {

/// SplitMix64 mixing of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent seed for sub-stream `stream` of `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(base ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based generator: the i-th draw is a pure function of (seed, i),
/// so any element can be regenerated without replaying the stream.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  static constexpr double unit_at(std::uint64_t seed, std::uint64_t index) noexcept {
    return static_cast<double>(at(seed, index) >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() noexcept { return at(seed_, counter_++); }
  double uniform() noexcept { return unit_at(seed_, counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace qdnn
