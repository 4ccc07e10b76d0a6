#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace seqcd {

// Substream derivation. Every random draw in the library comes from an engine
// seeded by derive_seed(master, {phase, stage, replicate, ...}), so results do
// not depend on which worker ran which replicate.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return h;
}

/// Phase tags keep streams of different pipeline steps disjoint.
enum class Phase : std::uint64_t {
  Generate = 1,
  NullSample = 2,
  Bootstrap = 3,
  Observed = 4,
  Simulate = 5,
  Calibrate = 6,
};

inline std::uint64_t derive_seed(std::uint64_t master, Phase phase,
                                 std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = derive_seed(master, {static_cast<std::uint64_t>(phase)});
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return h;
}

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits. Unlike
/// std::uniform_real_distribution this is identical on every standard library.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace seqcd
