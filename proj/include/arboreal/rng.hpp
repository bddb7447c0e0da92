#pragma once

#include <cstdint>
#include <random>

namespace arboreal {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed for run `index` of stream `stream` under a master seed.  Every random draw in the
/// library and CLI goes through this rule, so runs are independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

/// Uniform double in (0, 1], using the top 53 bits; portable across standard libraries.
inline double uniform_open_closed(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

/// Named streams so stages never share random numbers.
enum Stream : std::uint64_t {
  kStreamRecords = 1,
  kStreamOccupation = 2,
  kStreamMixed = 3,
  kStreamDichotomy = 4,
  kStreamWalk = 5,
  kStreamWalkAlpha = 6,
  kStreamBuilder = 7,
  kStreamHitting = 8,
};

}  // namespace arboreal
