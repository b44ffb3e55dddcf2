#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emif {

using Rng = std::mt19937_64;

/// Named sub-seed of a run seed ("split", "init", "shuffle", ...). Stable
/// across platforms: FNV-1a of the name mixed through splitmix64.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform index in [0, n) that does not depend on the standard library's
/// distribution implementation.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

/// Fisher-Yates with uniform_index, for the same reason.
template <class It>
void shuffle_range(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

/// Uniform double in [lo, hi) built from the top 53 bits.
inline double uniform_real(Rng& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

}  // namespace emif
