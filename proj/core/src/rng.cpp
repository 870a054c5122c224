#include "fedsim/rng.hpp"

#include <cmath>
#include <numbers>

#include "fedsim/errors.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
  if (bound == 0) {
    throw Error("next_below: bound must be >= 1");
  }
  // Reject draws above the largest multiple of bound to avoid modulo bias.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double SplitMix64::next_gaussian() {
  // Box-Muller; draw until u1 is nonzero so the log is finite.
  double u1;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double SplitMix64::next_gamma(double alpha) {
  if (!(alpha > 0.0)) {
    throw Error("next_gamma: alpha must be > 0");
  }
  if (alpha < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^(1/a)
    double u;
    do {
      u = next_double();
    } while (u <= 0.0);
    return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  // Marsaglia-Tsang (2000).
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u;
    do {
      u = next_double();
    } while (u <= 0.0);
    if (u < 1.0 - 0.0331 * x * x * x * x) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

std::vector<double> SplitMix64::next_dirichlet(double alpha, std::size_t k) {
  if (k == 0) {
    throw Error("next_dirichlet: dimension must be >= 1");
  }
  std::vector<double> g(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    g[i] = next_gamma(alpha);
    sum += g[i];
  }
  if (sum <= 0.0) {
    // All gammas underflowed (only possible for extreme alpha); fall back to
    // uniform rather than returning NaNs.
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = 1.0 / static_cast<double>(k);
    }
    return g;
  }
  for (std::size_t i = 0; i < k; ++i) {
    g[i] /= sum;
  }
  return g;
}

std::size_t SplitMix64::next_categorical(std::span<const double> probs) {
  if (probs.empty()) {
    throw Error("next_categorical: empty probability vector");
  }
  double u = next_double();
  double cdf = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cdf += probs[i];
    if (u < cdf) {
      return i;
    }
  }
  return probs.size() - 1;  // u landed in trailing rounding slack
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = fnv1a64(tag);
  unsigned char buf[24];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<unsigned char>(base >> (8 * i));
    buf[8 + i] = static_cast<unsigned char>(a >> (8 * i));
    buf[16 + i] = static_cast<unsigned char>(b >> (8 * i));
  }
  h = fnv1a64(std::span<const unsigned char>(buf, sizeof(buf)), h);
  // One splitmix scramble so adjacent indices land far apart.
  SplitMix64 s(h);
  return s.next_u64();
}

}  // namespace fedsim
