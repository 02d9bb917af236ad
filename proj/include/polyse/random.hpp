#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace polyse {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for a named sub-stream of a run seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream,
                    std::uint64_t substream = 0) {
  return Rng(splitmix64(splitmix64(seed ^ splitmix64(stream)) + substream));
}

// Uniform integer in [0, n). Implemented here rather than with
// std::uniform_int_distribution so that sampled splits are bit-identical
// across standard library implementations.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x > limit);
  return x % n;
}

// Uniform double in [lo, hi) from the top 53 bits.
inline double uniform_real(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

// Stream identifiers.
namespace streams {
inline constexpr std::uint64_t kNegatives = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kCorruption = 5;
inline constexpr std::uint64_t kSynthetic = 6;
}  // namespace streams

}  // namespace polyse
