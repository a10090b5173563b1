#pragma once

#include <cstdint>
#include <random>

namespace prognos {

// splitmix64 finalizer, used to derive independent substream seeds so that
// adding a system or sensor never perturbs draws made for earlier ones.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(root);
  s = mix64(s ^ mix64(a + 0x1000000000000001ULL));
  s = mix64(s ^ mix64(b + 0x2000000000000003ULL));
  s = mix64(s ^ mix64(c + 0x3000000000000005ULL));
  return s;
}

inline std::mt19937_64 substream(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  return std::mt19937_64(derive_seed(root, a, b, c));
}

}  // namespace prognos
