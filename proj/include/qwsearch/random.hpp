#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace qws {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key of the substream `index` of the stream keyed by `seed`.
///
/// Substreams are a pure function of (seed, index), so any worker can
/// regenerate trajectory k or link j without touching its neighbours.
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based generator: draw k is mix64(key + k * golden_gamma).
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Exponential variate with the given rate (> 0).
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  /// +1 or -1 with probability 1/2 each.
  int sign() noexcept { return ((*this)() >> 63) != 0 ? -1 : 1; }

 private:
  std::uint64_t state_;
};

}  // namespace qws
