#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dysflm {

// FNV-1a, used to derive named substreams from one root seed so that
// data shuffling, dropout and sampling each get an independent stream.
inline std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root_seed, std::string_view stream) {
  return Rng(mix_seed(root_seed, hash_name(stream)));
}

inline Rng make_rng(std::uint64_t root_seed, std::string_view stream,
                    std::uint64_t index) {
  return Rng(mix_seed(mix_seed(root_seed, hash_name(stream)), index));
}

}  // namespace dysflm
