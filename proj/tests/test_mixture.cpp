#include "regimecast/mixture.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "regimecast/rng.hpp"
#include "regimecast/stats.hpp"
#include "regimecast/types.hpp"

namespace rc = regimecast;

namespace {

rc::GaussianForecast gaussian(std::initializer_list<rc::Scalar> means,
                              std::initializer_list<rc::Scalar> vars) {
  rc::GaussianForecast f;
  f.mean.resize(static_cast<rc::Index>(means.size()));
  f.variance.resize(static_cast<rc::Index>(vars.size()));
  rc::Index i = 0;
  for (rc::Scalar m : means) f.mean[i++] = m;
  i = 0;
  for (rc::Scalar v : vars) f.variance[i++] = v;
  return f;
}

rc::Vector vec(std::initializer_list<rc::Scalar> entries) {
  rc::Vector v(static_cast<rc::Index>(entries.size()));
  rc::Index i = 0;
  for (rc::Scalar e : entries) v[i++] = e;
  return v;
}

/// Draws one sample from the mixture at a given hour.
rc::Scalar sample_mixture(const rc::MixtureForecast& mix, rc::Index hour,
                          rc::RandomSource& rng) {
  const rc::Index k = rng.categorical(mix.weights);
  return mix.means(k, hour) +
         std::sqrt(mix.variances(k, hour)) * rng.normal();
}

}  // namespace

TEST_SUITE("mixture") {

TEST_CASE("single component aggregation is the identity") {
  const auto f = gaussian({1.0, -2.0, 3.5}, {0.25, 4.0, 1.0});
  const auto mix = rc::aggregate(vec({1.0}), {f});
  CHECK(mix.weights.size() == 1);
  CHECK(mix.means.rows() == 1);
  CHECK(mix.means.cols() == 3);
  for (rc::Index h = 0; h < 3; ++h) {
    CHECK(mix.agg_mean[h] == f.mean[h]);
    CHECK(mix.agg_var[h] == f.variance[h]);
  }
}

TEST_CASE("half-and-half mixture matches the closed form and Monte Carlo") {
  // w = (1/2, 1/2), means 1 and 3, unit variances:
  // agg mean = 2, agg var = 1 + (1-2)^2/2 + (3-2)^2/2 = 2.
  const auto mix = rc::aggregate(
      vec({0.5, 0.5}), {gaussian({1.0}, {1.0}), gaussian({3.0}, {1.0})});
  CHECK(mix.agg_mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mix.agg_var[0] == doctest::Approx(2.0).epsilon(1e-15));

  rc::RandomSource rng(20240501);
  auto stream = rng.substream("mixture-mc");
  const int draws = 1000000;
  rc::Scalar sum = 0.0;
  rc::Scalar sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const rc::Scalar x = sample_mixture(mix, 0, stream);
    sum += x;
    sum_sq += x * x;
  }
  const rc::Scalar mc_mean = sum / draws;
  const rc::Scalar mc_var = sum_sq / draws - mc_mean * mc_mean;
  // SE of the mean is sqrt(2/n) ~ 0.0014; allow three of them.
  CHECK(std::abs(mc_mean - mix.agg_mean[0]) < 3.0 * std::sqrt(2.0 / draws));
  // Var of the sample variance of a mixture is ~ (E[x^4]-var^2)/n; a 0.01
  // absolute band is > 5 SE here.
  CHECK(std::abs(mc_var - mix.agg_var[0]) < 0.01);
}

TEST_CASE("identical components collapse to the component for any weights") {
  const auto f = gaussian({4.0, -1.0}, {0.5, 2.0});
  for (const auto& w : {vec({0.2, 0.3, 0.5}), vec({1.0, 0.0, 0.0}),
                        vec({1.0 / 3, 1.0 / 3, 1.0 / 3})}) {
    const auto mix = rc::aggregate(w, {f, f, f});
    for (rc::Index h = 0; h < 2; ++h) {
      CHECK(mix.agg_mean[h] == doctest::Approx(f.mean[h]).epsilon(1e-14));
      CHECK(mix.agg_var[h] == doctest::Approx(f.variance[h]).epsilon(1e-14));
    }
    const auto band = rc::interval(mix, 0.8);
    const rc::Scalar z = rc::stats::norm_quantile(0.9);
    for (rc::Index h = 0; h < 2; ++h) {
      const rc::Scalar sigma = std::sqrt(f.variance[h]);
      CHECK(band.lower[h] ==
            doctest::Approx(f.mean[h] - z * sigma).epsilon(1e-6));
      CHECK(band.upper[h] ==
            doctest::Approx(f.mean[h] + z * sigma).epsilon(1e-6));
    }
  }
}

TEST_CASE("aggregate mean is linear in the component means") {
  rc::RandomSource rng(7);
  auto stream = rng.substream("linear");
  const rc::Index hours = 5;
  std::vector<rc::GaussianForecast> base(3);
  for (auto& f : base) {
    f.mean.resize(hours);
    f.variance.resize(hours);
    for (rc::Index h = 0; h < hours; ++h) {
      f.mean[h] = stream.normal() * 10.0;
      f.variance[h] = 0.1 + stream.uniform();
    }
  }
  const rc::Vector w = vec({0.2, 0.5, 0.3});
  const auto mix = rc::aggregate(w, base);
  const rc::Scalar c = 3.75;
  auto scaled = base;
  for (auto& f : scaled) f.mean *= c;
  const auto mix_scaled = rc::aggregate(w, scaled);
  for (rc::Index h = 0; h < hours; ++h) {
    CHECK(mix_scaled.agg_mean[h] ==
          doctest::Approx(c * mix.agg_mean[h]).epsilon(1e-12));
  }
}

TEST_CASE("aggregation validates its inputs") {
  const auto f = gaussian({1.0}, {1.0});
  SUBCASE("weight and forecast counts must match") {
    CHECK_THROWS_AS(rc::aggregate(vec({0.5, 0.5}), {f}),
                    std::invalid_argument);
  }
  SUBCASE("weights must be a simplex") {
    CHECK_THROWS_AS(rc::aggregate(vec({0.6, 0.6}), {f, f}),
                    std::invalid_argument);
    CHECK_THROWS_AS(rc::aggregate(vec({1.2, -0.2}), {f, f}),
                    std::invalid_argument);
  }
  SUBCASE("empty mixture is rejected") {
    CHECK_THROWS_AS(rc::aggregate(rc::Vector(), {}), std::invalid_argument);
  }
  SUBCASE("hour counts must agree") {
    CHECK_THROWS_AS(
        rc::aggregate(vec({0.5, 0.5}), {f, gaussian({1.0, 2.0}, {1.0, 1.0})}),
        std::invalid_argument);
  }
  SUBCASE("variances must be positive") {
    CHECK_THROWS_AS(rc::aggregate(vec({1.0}), {gaussian({0.0}, {0.0})}),
                    std::invalid_argument);
    CHECK_THROWS_AS(rc::aggregate(vec({1.0}), {gaussian({0.0}, {-1.0})}),
                    std::invalid_argument);
  }
}

TEST_CASE("standard normal 80 percent interval matches the z table") {
  const auto mix = rc::aggregate(vec({1.0}), {gaussian({0.0}, {1.0})});
  const auto band = rc::interval(mix, 0.8);
  // Phi^{-1}(0.9) = 1.2815515655446004.
  CHECK(band.lower[0] == doctest::Approx(-1.2815515655446004).epsilon(1e-6));
  CHECK(band.upper[0] == doctest::Approx(1.2815515655446004).epsilon(1e-6));
  const auto approx = rc::interval(mix, 0.8, rc::IntervalMethod::GaussianApprox);
  CHECK(approx.lower[0] == doctest::Approx(band.lower[0]).epsilon(1e-6));
  CHECK(approx.upper[0] == doctest::Approx(band.upper[0]).epsilon(1e-6));
}

TEST_CASE("symmetric mixtures give intervals symmetric about the center") {
  const auto mix = rc::aggregate(
      vec({0.5, 0.5}), {gaussian({-3.0}, {0.7}), gaussian({3.0}, {0.7})});
  for (rc::Scalar coverage : {0.5, 0.8, 0.9, 0.99}) {
    const auto band = rc::interval(mix, coverage);
    CHECK(std::abs(band.lower[0] + band.upper[0]) < 1e-7);
    CHECK(band.lower[0] < band.upper[0]);
  }
}

TEST_CASE("wider coverage strictly nests narrower coverage") {
  const auto mix = rc::aggregate(
      vec({0.3, 0.7}), {gaussian({10.0}, {4.0}), gaussian({-2.0}, {1.0})});
  const auto narrow = rc::interval(mix, 0.5);
  const auto wide = rc::interval(mix, 0.9);
  CHECK(wide.lower[0] < narrow.lower[0]);
  CHECK(wide.upper[0] > narrow.upper[0]);
}

TEST_CASE("interval endpoints carry the requested probability mass") {
  const auto mix = rc::aggregate(
      vec({0.25, 0.35, 0.4}), {gaussian({-1.0}, {0.5}), gaussian({2.0}, {3.0}),
                               gaussian({0.5}, {1.5})});
  for (rc::Scalar coverage : {0.5, 0.8, 0.95}) {
    const auto band = rc::interval(mix, coverage);
    const rc::Scalar mass = rc::mixture_cdf(mix, 0, band.upper[0]) -
                            rc::mixture_cdf(mix, 0, band.lower[0]);
    CHECK(mass == doctest::Approx(coverage).epsilon(1e-6));
    CHECK(rc::mixture_cdf(mix, 0, band.lower[0]) ==
          doctest::Approx(0.5 * (1.0 - coverage)).epsilon(1e-6));
  }
}

TEST_CASE("interval coverage holds empirically") {
  const auto mix = rc::aggregate(
      vec({0.6, 0.4}), {gaussian({0.0}, {1.0}), gaussian({5.0}, {2.0})});
  const auto band = rc::interval(mix, 0.8);
  rc::RandomSource rng(99);
  auto stream = rng.substream("picp");
  const int draws = 2000;
  int inside = 0;
  for (int i = 0; i < draws; ++i) {
    const rc::Scalar x = sample_mixture(mix, 0, stream);
    if (x >= band.lower[0] && x <= band.upper[0]) ++inside;
  }
  const rc::Scalar picp = static_cast<rc::Scalar>(inside) / draws;
  // Binomial SE at n=2000, p=0.8 is ~0.0089; allow three of them.
  CHECK(std::abs(picp - 0.8) < 3.0 * std::sqrt(0.8 * 0.2 / draws));
}

TEST_CASE("extreme parameters stay finite and ordered") {
  const auto mix = rc::aggregate(
      vec({1e-6, 1.0 - 1e-6}),
      {gaussian({1e4}, {1e-8}), gaussian({-1e4}, {1e6})});
  const auto band = rc::interval(mix, 0.9);
  CHECK(std::isfinite(band.lower[0]));
  CHECK(std::isfinite(band.upper[0]));
  CHECK(band.lower[0] < band.upper[0]);
  const rc::Scalar mass = rc::mixture_cdf(mix, 0, band.upper[0]) -
                          rc::mixture_cdf(mix, 0, band.lower[0]);
  CHECK(mass == doctest::Approx(0.9).epsilon(1e-5));
}

TEST_CASE("interval validates coverage and hour index") {
  const auto mix = rc::aggregate(vec({1.0}), {gaussian({0.0}, {1.0})});
  CHECK_THROWS_AS(rc::interval(mix, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rc::interval(mix, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rc::interval(mix, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(rc::mixture_cdf(mix, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rc::mixture_cdf(mix, -1, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian approximation widens tails for bimodal mixtures") {
  // For well-separated equal-weight components the single-Gaussian
  // approximation inflates the central interval relative to the exact one
  // at moderate coverage.
  const auto mix = rc::aggregate(
      vec({0.5, 0.5}), {gaussian({-6.0}, {1.0}), gaussian({6.0}, {1.0})});
  const auto exact = rc::interval(mix, 0.8);
  const auto approx = rc::interval(mix, 0.8, rc::IntervalMethod::GaussianApprox);
  CHECK(approx.upper[0] > exact.upper[0]);
  CHECK(approx.lower[0] < exact.lower[0]);
}

}  // TEST_SUITE
