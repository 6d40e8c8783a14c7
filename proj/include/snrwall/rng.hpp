#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace snrwall {

// splitmix64 finalizer. Cheap, well mixed, and stable across platforms,
// which is all we need to turn structured indices into engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child seed from a parent seed and a list of integer tags by
// folding every tag through the mixer. Each stochastic task hashes its own
// coordinates (hypothesis, block length, grid index, instance index, ...)
// so the resulting stream is independent of scheduling order: the same
// coordinates always yield the same seed, no matter which thread runs them.
inline std::uint64_t derive_seed(std::uint64_t parent,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(parent);
  for (std::uint64_t t : tags) {
    s = splitmix64(s ^ t);
  }
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace snrwall
