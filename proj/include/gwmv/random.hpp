#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gwmv {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for a named component, e.g. derive_seed(root, "mds").
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(root ^ mix_seed(h));
}

/// Child seed for the i-th instance of something (restart, view, ...).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return mix_seed(root + mix_seed(index + 1));
}

}  // namespace gwmv
