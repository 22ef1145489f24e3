#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace gofkit {

/// Engine used for every randomized path. Streams are never shared: each
/// replicate gets its own engine seeded through `derive_seed`.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream key for (master seed, k1, k2, ...): splitmix64 folded over the
/// keys. Distinct key tuples give statistically independent streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// FNV-1a, for folding labels (test names, family tags) into seeds.
constexpr std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(master, keys));
}

}  // namespace gofkit
