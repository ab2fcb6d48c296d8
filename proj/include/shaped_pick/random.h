#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace shaped_pick {

using Rng = std::mt19937_64;

// Independent stream keyed by (seed, tags...). Same key, same stream.
inline Rng derive_rng(std::uint64_t seed,
                      std::initializer_list<std::uint64_t> tags = {}) {
  std::seed_seq::result_type words[16];
  int n = 0;
  words[n++] = static_cast<std::uint32_t>(seed);
  words[n++] = static_cast<std::uint32_t>(seed >> 32);
  for (std::uint64_t tag : tags) {
    if (n + 2 > 16) break;
    words[n++] = static_cast<std::uint32_t>(tag);
    words[n++] = static_cast<std::uint32_t>(tag >> 32);
  }
  std::seed_seq seq(words, words + n);
  return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace shaped_pick
