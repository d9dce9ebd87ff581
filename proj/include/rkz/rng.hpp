#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rkz {

// SplitMix64 finalizer (Steele, Lea & Flood 2014). Full-avalanche bijection
// on 64-bit words; the core of the counter-based generator below.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// Deterministic sub-stream keying. Every seeded entity in the library
// (trial, generated row, noise vector, sampler) owns a stream derived from
// its parent seed; the derivation is fixed, so changing it invalidates all
// recorded experiment outputs.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(mix64(master + kGolden) + mix64(stream + 1) + kGolden);
}

// Counter-based 64-bit generator: the i-th output is mix64(key + i*golden),
// a pure function of (key, i). State is just the counter, so streams are
// trivially reproducible and splittable via derive_seed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static CounterRng keyed(std::uint64_t master, std::uint64_t stream) noexcept {
    return CounterRng(derive_seed(master, stream));
  }

  std::uint64_t next_u64() noexcept { return mix64(key_ + kGolden * ++counter_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; never zero, safe under log().
  double next_unit_pos() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double next_normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit_pos();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rkz
