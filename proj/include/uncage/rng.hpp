#pragma once

#include <cstdint>
#include <random>

namespace uncage {

// Stream tags for deriving independent generators from one run seed.
// Keeping token sampling, ordering noise, scene generation and model noise
// on separate streams means toggling one feature cannot shift the draws
// consumed by another.
inline constexpr std::uint64_t kStreamTokens = 0x746f6b656e73ULL;
inline constexpr std::uint64_t kStreamGumbel = 0x67756d62656cULL;
inline constexpr std::uint64_t kStreamScene = 0x7363656e65ULL;
inline constexpr std::uint64_t kStreamModel = 0x6d6f64656cULL;
inline constexpr std::uint64_t kStreamBootstrap = 0x626f6f74ULL;

// splitmix64 finalizer; decorrelates seed/tag combinations.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ b); }

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream_tag) {
  return std::mt19937_64(mix64(seed, stream_tag));
}

// Uniform on the open interval (0,1). The half-offset keeps both endpoints
// out of range, so log(-log(u)) stays finite.
inline double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace uncage
