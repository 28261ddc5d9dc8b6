#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "regimecast/types.hpp"

namespace regimecast {

/// FNV-1a 64-bit hash over a byte range; used for substream derivation and
/// data fingerprints.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t state = 0xcbf29ce484222325ull) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    state ^= bytes[i];
    state *= 0x100000001b3ull;
  }
  return state;
}

inline std::uint64_t fnv1a64(std::string_view text,
                             std::uint64_t state = 0xcbf29ce484222325ull) {
  return fnv1a64(text.data(), text.size(), state);
}

/// Seeded random source with named substream derivation.
///
/// Every stochastic component draws from a substream derived from the run
/// seed and a stable name, so the stream consumed by one component does not
/// depend on how much randomness other components used.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Derive an independent source keyed by (this seed, name).
  [[nodiscard]] RandomSource substream(std::string_view name) const {
    std::uint64_t h = fnv1a64(&seed_, sizeof(seed_));
    h = fnv1a64(name, h);
    return RandomSource(h);
  }

  /// Derive an independent source keyed by (this seed, name, index).
  [[nodiscard]] RandomSource substream(std::string_view name,
                                       std::uint64_t index) const {
    std::uint64_t h = fnv1a64(&seed_, sizeof(seed_));
    h = fnv1a64(name, h);
    h = fnv1a64(&index, sizeof(index), h);
    return RandomSource(h);
  }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  /// Uniform draw in [0, 1).
  Scalar uniform() {
    return std::uniform_real_distribution<Scalar>(0.0, 1.0)(engine_);
  }

  /// Uniform draw in [lo, hi).
  Scalar uniform(Scalar lo, Scalar hi) {
    return std::uniform_real_distribution<Scalar>(lo, hi)(engine_);
  }

  /// Standard normal draw.
  Scalar normal() { return std::normal_distribution<Scalar>(0.0, 1.0)(engine_); }

  Scalar normal(Scalar mean, Scalar stddev) {
    return std::normal_distribution<Scalar>(mean, stddev)(engine_);
  }

  /// Gamma draw with shape/rate parameterization.
  Scalar gamma(Scalar shape, Scalar rate) {
    if (shape <= 0.0 || rate <= 0.0)
      throw std::invalid_argument("gamma: shape and rate must be positive");
    return std::gamma_distribution<Scalar>(shape, 1.0 / rate)(engine_);
  }

  /// Beta draw via two gammas.
  Scalar beta(Scalar a, Scalar b) {
    if (a <= 0.0 || b <= 0.0)
      throw std::invalid_argument("beta: parameters must be positive");
    for (;;) {
      const Scalar x = std::gamma_distribution<Scalar>(a, 1.0)(engine_);
      const Scalar y = std::gamma_distribution<Scalar>(b, 1.0)(engine_);
      if (x + y > 0.0) return x / (x + y);
    }
  }

  /// Bernoulli draw with success probability p.
  bool bernoulli(Scalar p) {
    return std::bernoulli_distribution(std::clamp(p, 0.0, 1.0))(engine_);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t integer(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("integer: bound must be > 0");
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  /// Dirichlet draw from a positive concentration vector.
  Vector dirichlet(const Vector& concentration) {
    Vector draw(concentration.size());
    for (;;) {
      for (Index i = 0; i < concentration.size(); ++i) {
        if (concentration[i] <= 0.0)
          throw std::invalid_argument("dirichlet: concentrations must be positive");
        draw[i] = std::gamma_distribution<Scalar>(concentration[i], 1.0)(engine_);
      }
      const Scalar total = draw.sum();
      if (total > 0.0) return draw / total;
    }
  }

  /// Categorical draw from unnormalized nonnegative weights.
  Index categorical(const Vector& weights) {
    const Scalar total = weights.sum();
    if (!(total > 0.0))
      throw std::invalid_argument("categorical: weights must have positive sum");
    Scalar u = uniform() * total;
    for (Index i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  /// Fisher-Yates shuffle of [0, n) indices.
  std::vector<Index> permutation(Index n) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(integer(static_cast<std::uint64_t>(i) + 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace regimecast
