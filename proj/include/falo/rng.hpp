#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace falo {

// SplitMix64. Every synthetic scene and random weight tensor is drawn from this
// generator so outputs are identical on any IEEE-754 platform.
//   state += 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z ^= z >> 31
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Top 53 bits scaled to [0, 1).
  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Uses the multiply-shift reduction; n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                             std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
  for (std::byte b : bytes) {
    hash ^= static_cast<std::uint64_t>(b);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

inline std::uint64_t fnv1a64(std::string_view text) noexcept {
  return fnv1a64(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

}  // namespace falo
