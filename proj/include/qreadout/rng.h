#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qreadout {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a list of keys.
// Used so that every shot / epoch owns its generator regardless of the order
// in which work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : keys) {
    h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  }
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(base, keys));
}

// Uniform double in [0, 1) using the top 53 bits; libstdc++'s
// generate_canonical is avoided so draws are stable across library versions.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller standard normal. Stateless so that a draw never depends on a
// cached value from a previous call.
double standard_normal(Rng& rng);

}  // namespace qreadout
