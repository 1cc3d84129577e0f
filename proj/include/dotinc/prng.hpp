#ifndef DOTINC_PRNG_HPP
#define DOTINC_PRNG_HPP

// SplitMix64 (Steele, Lea, Flood 2014): a 64-bit counter passed through a
// fixed mixing function. Output depends only on the seed, so sampled subsets
// are identical on every platform and compiler.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dotinc {

class SplitMix64 {
 public:
  static constexpr std::string_view kName = "splitmix64";
  static constexpr int kVersion = 1;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream seeded from this one.
  constexpr SplitMix64 split() noexcept { return SplitMix64(next()); }

  /// Uniform in [0, bound) by rejection; bound must be nonzero.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

/// Uniform sample of `size` distinct indices from [0, universe), sorted.
/// Partial Fisher-Yates over the identity permutation.
inline std::vector<std::size_t> sample_subsets(std::size_t universe, std::size_t size, SplitMix64& rng) {
  if (size > universe)
    throw std::invalid_argument("sample size " + std::to_string(size) + " exceeds universe " +
                                std::to_string(universe));
  std::vector<std::size_t> perm(universe);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(universe - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(size);
  std::sort(perm.begin(), perm.end());
  return perm;
}

inline std::vector<std::size_t> sample_subsets(std::size_t universe, std::size_t size, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return sample_subsets(universe, size, rng);
}

}  // namespace dotinc

#endif  // DOTINC_PRNG_HPP
