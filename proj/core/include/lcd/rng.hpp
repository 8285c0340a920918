#pragma once

#include <cstdint>
#include <random>

namespace lcd {

// Every source of randomness in a run is a named stream derived from the one
// user-visible seed, so any stage can be reproduced in isolation.
enum class RngStream : std::uint32_t {
  split = 1,
  permutations = 2,
  init = 3,
  dropout = 4,
  sampling = 5,
  coverage = 6,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed & 0xffffffffu),
      static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream),
  };
  return std::mt19937_64(seq);
}

}  // namespace lcd
