#pragma once

#include <cstdint>
#include <random>

namespace bcle {

using Rng = std::mt19937_64;

// Stream for (master seed, replica, tag). seed_seq mixes all words, so
// neighbouring replicas get unrelated states. Thread count plays no role.
inline Rng make_stream(std::uint64_t seed, std::uint64_t replica, std::uint64_t tag = 0) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(replica),
                    std::uint32_t(replica >> 32), std::uint32_t(tag), std::uint32_t(tag >> 32)};
  return Rng(seq);
}

}  // namespace bcle
