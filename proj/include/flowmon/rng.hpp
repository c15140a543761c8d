#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flowmon {

using Rng = std::mt19937_64;

// splitmix64 step; good enough to whiten seed material.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed. Used so that
/// e.g. topology generation and flow generation never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
  splitmix64(s);
  s ^= stream * 0x9e3779b97f4a7c15ULL;
  std::uint64_t out = splitmix64(s);
  return out ? out : 0x6a09e667f3bcc909ULL;  // mt19937_64 dislikes seed 0 less than we dislike surprises
}

/// Unbiased integer in [0, n). Hand-rolled (Lemire's method) because the
/// output of std::uniform_int_distribution is implementation-defined and
/// would break reproducibility across standard libraries.
inline std::uint64_t rng_below(Rng& rng, std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double rng_unit(Rng& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

/// Exponential variate with the given mean (inverse CDF; stable across platforms).
inline double rng_exponential(Rng& rng, double mean) {
  return -mean * std::log1p(-rng_unit(rng));
}

}  // namespace flowmon
