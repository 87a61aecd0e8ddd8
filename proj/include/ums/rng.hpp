#pragma once

#include <cstdint>
#include <random>

namespace ums {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent, reproducible stream `stream` derived from a master seed.
/// Streams are keyed by a counter so adding a consumer never shifts the
/// others.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream) {
  const std::uint64_t k = splitmix64(master_seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Well-known stream ids so every command splits the master seed the same way.
namespace streams {
inline constexpr std::uint64_t kSimulate = 1;
inline constexpr std::uint64_t kChain = 2;
inline constexpr std::uint64_t kBaseline = 3;
inline constexpr std::uint64_t kCheck = 4;
}  // namespace streams

}  // namespace ums
