#pragma once

#include <cstdint>
#include <random>

namespace mfmarl {

using Rng = std::mt19937_64;

// Independent stream for (seed, a, b). std::seed_seq is fully specified by
// the standard, so streams are identical across platforms.
Rng make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

// Uniform on [0, 1) with 53 random bits. Avoids the implementation-defined
// std::uniform_real_distribution so draws are portable.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace mfmarl
