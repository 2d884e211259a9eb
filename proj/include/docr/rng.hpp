#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace docr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives a substream seed from a master seed and a path of labels, e.g.
/// derive_seed(master, {epoch, stream::kContexts}). Each path element is
/// folded in with one SplitMix64 round, so distinct paths give unrelated
/// seeds and the same path always gives the same seed.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return s;
}

// Substream labels.
namespace stream {
inline constexpr std::uint64_t kGroundTruth = 1;
inline constexpr std::uint64_t kContexts = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kDecisions = 4;
inline constexpr std::uint64_t kOracle = 5;
}  // namespace stream

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace docr
