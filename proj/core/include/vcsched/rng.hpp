#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace vcsched {

using Rng = std::mt19937_64;

/// Independent generator for a (seed, stream...) key. Streams with distinct
/// keys never share state, so adding draws to one stream leaves the others
/// untouched.
inline Rng make_rng(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(key.size() * 2);
  for (auto k : key) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq s(words.begin(), words.end());
  return Rng(s);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace vcsched
