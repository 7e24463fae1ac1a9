#include "mfmarl/rng.hpp"

#include <array>
#include <limits>

namespace mfmarl {

Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::array<std::uint32_t, 6> words = {
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

}  // namespace mfmarl
