#pragma once

#include <cstdint>
#include <random>

namespace lnnbench {

// SplitMix64 finalizer. Cheap, full-avalanche mixing for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a base seed and a sequence of tag words.
/// Every consumer of randomness gets its own derived stream, so adding
/// or reordering one consumer never perturbs the draws of another.
template <typename... Words>
constexpr std::uint64_t derive_seed(std::uint64_t base, Words... words) {
  std::uint64_t state = mix64(base);
  ((state = mix64(state ^ static_cast<std::uint64_t>(words))), ...);
  return state;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64{seed};
}

// Stream tags. Arbitrary distinct constants; never reuse one for a new
// purpose or previously generated data changes under the same seed.
inline constexpr std::uint64_t kStreamInputs = 0x10;
inline constexpr std::uint64_t kStreamNoise = 0x11;
inline constexpr std::uint64_t kStreamTrueParams = 0x12;
inline constexpr std::uint64_t kStreamTrainData = 0x13;
inline constexpr std::uint64_t kStreamTestData = 0x14;
inline constexpr std::uint64_t kStreamInit = 0x15;
inline constexpr std::uint64_t kStreamRunData = 0x16;

}  // namespace lnnbench
