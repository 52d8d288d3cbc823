// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace topicfb {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the named sub-stream `index` under a top-level seed. Streams for
/// different (name, index) pairs are decorrelated, so work can be split
/// across threads without changing results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                 std::uint64_t index) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) + index);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view stream,
                                   std::uint64_t index) {
  return std::mt19937_64(derive_seed(seed, stream, index));
}

}  // namespace topicfb
