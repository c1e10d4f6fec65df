#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hmill {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over bytes; stable across processes and platforms.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of a named sub-stream. All randomness in the library flows from one
/// user seed through these names, e.g. stream_seed(seed, "init").
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
  return mix64(seed ^ mix64(fnv1a64(name)));
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view a,
                                 std::string_view b) {
  return mix64(stream_seed(seed, a) ^ mix64(fnv1a64(b) + 0x51ed270b27aULL));
}

inline Rng make_rng(std::uint64_t seed, std::string_view name) {
  return Rng(stream_seed(seed, name));
}

/// Uniform integer in [0, n) drawn with plain modulo-free rejection; unlike
/// std::uniform_int_distribution the result is identical on every stdlib.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

/// Fisher-Yates shuffle based on uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace hmill
