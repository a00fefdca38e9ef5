#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace isoprice {

using Engine = std::mt19937_64;

// Domain tags keep substreams of different consumers disjoint.
enum class StreamTag : std::uint64_t {
  proposal = 0x70726f70,
  predictive = 0x70726564,
  oracle = 0x6f72636c,
  coverage = 0x636f7672,
  loading = 0x6c6f6164,
  grid = 0x67726964,
  link = 0x6c696e6b,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// A random stream whose state is a pure function of its key tuple, so results
// do not depend on which thread evaluates which slot.
struct Stream {
  std::uint64_t tag;
  Engine engine;

  explicit Stream(std::uint64_t t) : tag(t), engine(t) {}
  Stream(std::uint64_t master, StreamTag domain, std::uint64_t a = 0,
         std::uint64_t b = 0, std::uint64_t c = 0)
      : Stream(derive_seed(
            {master, static_cast<std::uint64_t>(domain), a, b, c})) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
};

}  // namespace isoprice
