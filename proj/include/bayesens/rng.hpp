#pragma once

// Reproducible randomness for splits, orderings, pool construction and the
// Monte Carlo checks.
//
// Generator: SplitMix64 (Steele, Lea & Flood 2014). The state is a plain
// 64-bit counter advanced by the golden-ratio increment 0x9E3779B97F4A7C15;
// each output is the counter passed through the mixing function
//
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
//
// Independent streams are keyed by (seed, purpose, index) through
// derive_seed(), so the same trial reproduces regardless of how many other
// trials ran before it or on which thread.

#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace bayesens {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream purposes. Values are part of the reproducibility contract.
enum class Stream : std::uint64_t {
  split = 1,
  ordering = 2,
  pool = 3,
  synthetic = 4,
  posterior_draws = 5,
};

/// seed' = mix64(mix64(seed ^ mix64(purpose)) + golden * (index + 1))
constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream purpose, std::uint64_t index) noexcept {
  const std::uint64_t keyed = mix64(seed ^ mix64(static_cast<std::uint64_t>(purpose)));
  return mix64(keyed + kGoldenGamma * (index + 1));
}

/// SplitMix64; models std::uniform_random_bit_generator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}
  constexpr SplitMix64(std::uint64_t seed, Stream purpose, std::uint64_t index) noexcept
      : state_(derive_seed(seed, purpose, index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform integer in [0, bound) by rejection: draws below
  /// (2^64 - bound) mod bound are discarded so every residue is equally likely.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates from the back: for i = n-1 .. 1, swap(v[i], v[below(i+1)]).
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

inline std::vector<std::size_t> random_permutation(std::size_t n, SplitMix64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  return perm;
}

}  // namespace bayesens
