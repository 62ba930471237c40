#pragma once

#include <cstdint>
#include <random>

namespace ndp {

using Rng = std::mt19937_64;

// splitmix64; used to derive independent stream seeds from (master, salt...)
// so parallel workers stay deterministic regardless of scheduling.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix_seed(master);
  s = mix_seed(s ^ a);
  s = mix_seed(s ^ b);
  return mix_seed(s ^ c);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

}  // namespace ndp
