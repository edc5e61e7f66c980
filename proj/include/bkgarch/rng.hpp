#pragma once

#include <cstdint>
#include <random>

namespace bkgarch {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and two coordinates.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0xd6e8feb86659fd93ULL));
  return h;
}

/// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
/// Only uses the raw engine output, so streams are identical across platforms.
inline double uniform_open(Engine& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace bkgarch
