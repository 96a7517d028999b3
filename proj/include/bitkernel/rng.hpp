#pragma once

#include <cstdint>

namespace bitkernel {

// splitmix64 finalizer applied to seed ^ golden-ratio-spaced salt. Used to
// derive independent generator seeds, e.g. per (seed, width) sweep cell.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed ^ (salt * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Salts for the derived streams.
inline constexpr std::uint64_t kSaltTestSet = 0x7465737400000001ULL;
inline constexpr std::uint64_t kSaltHoldout = 0x686F6C6400000002ULL;
inline constexpr std::uint64_t kSaltNetwork = 0x6E65740000000003ULL;

}  // namespace bitkernel
