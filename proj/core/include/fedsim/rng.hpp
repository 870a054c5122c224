#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fedsim {

/// Seedable 64-bit stream generator (splitmix64, Vigna 2015).
///
/// Everything in the simulator that consumes randomness draws from this
/// generator, so schedules, partitions and training runs are reproducible
/// across platforms and languages. The standard library's distributions and
/// std::shuffle are implementation-defined and never used on a seeded path.
///
/// Derived draws (documented in docs/formats.md):
///   - next_below(n): rejection sampling on the top multiple of n, no modulo bias
///   - next_double(): top 53 bits scaled to [0, 1)
///   - next_gaussian(): Box-Muller, two uniforms per call, cosine branch only
///   - next_gamma(a): Marsaglia-Tsang squeeze; boosted by u^(1/a) when a < 1
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound); bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal deviate.
  double next_gaussian();

  /// Gamma(alpha, 1) deviate, alpha > 0.
  double next_gamma(double alpha);

  /// Symmetric Dirichlet(alpha) draw of dimension k; sums to 1.
  std::vector<double> next_dirichlet(double alpha, std::size_t k);

  /// Index draw from a probability vector (CDF inversion).
  std::size_t next_categorical(std::span<const double> probs);

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle, high index down to 1, one bounded draw per step.
template <typename T>
void fisher_yates_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Derives an independent stream seed from a base seed, a purpose tag and up
/// to two indices. Hash-based, so derived streams never depend on how many
/// draws other streams have consumed (checkpoint/resume stays exact).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace fedsim
