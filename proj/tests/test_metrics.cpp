#include "regimecast/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "regimecast/rng.hpp"
#include "regimecast/stats.hpp"
#include "regimecast/types.hpp"

namespace rc = regimecast;

namespace {

// Numerical CRPS oracle: integrate (F(x) - H(x - y))^2 with composite Simpson
// on each side of the step at y.
rc::Scalar crps_by_integration(rc::Scalar mu, rc::Scalar sigma, rc::Scalar y) {
  auto cdf = [&](rc::Scalar x) { return rc::stats::norm_cdf((x - mu) / sigma); };
  auto simpson = [&](rc::Scalar lo, rc::Scalar hi, bool above) {
    const int n = 4000;  // even
    const rc::Scalar hstep = (hi - lo) / n;
    rc::Scalar acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const rc::Scalar x = lo + hstep * i;
      const rc::Scalar f = cdf(x) - (above ? 1.0 : 0.0);
      const rc::Scalar w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * f * f;
    }
    return acc * hstep / 3.0;
  };
  const rc::Scalar lo = std::min(mu - 12.0 * sigma, y - 1.0);
  const rc::Scalar hi = std::max(mu + 12.0 * sigma, y + 1.0);
  return simpson(lo, y, false) + simpson(y, hi, true);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfect forecasts score zero") {
  rc::Vector y(3);
  y << 10.0, -5.0, 42.0;
  rc::ErrorReport r = rc::point_errors(y, y);
  CHECK(r.mae == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.mape == 0.0);
  CHECK(r.smape == 0.0);
}

TEST_CASE("hand-computed point errors") {
  rc::Vector y(2), y_hat(2);
  y << 100.0, 200.0;
  y_hat << 110.0, 180.0;
  rc::ErrorReport r = rc::point_errors(y, y_hat);
  CHECK(r.mae == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(r.rmse == doctest::Approx(std::sqrt(250.0)).epsilon(1e-12));
  CHECK(r.mape == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("smape applies the scale guard") {
  rc::Vector y(1), y_hat(1);
  y << 100.0;
  y_hat << 300.0;
  rc::ErrorReport r = rc::point_errors(y, y_hat);
  // 2 * 200 / (100 + 300 + 1); the guard keeps zero-price hours defined and
  // nudges this textbook-1.0 case slightly below one.
  CHECK(r.smape == doctest::Approx(400.0 / 401.0).epsilon(1e-12));
  CHECK(r.smape <= 2.0);
}

TEST_CASE("rmse dominates mae") {
  rc::RandomSource rs(811);
  for (int trial = 0; trial < 50; ++trial) {
    rc::Vector y(40), y_hat(40);
    for (rc::Index i = 0; i < 40; ++i) {
      y[i] = 60.0 * rs.normal();
      y_hat[i] = y[i] + 25.0 * rs.normal();
    }
    rc::ErrorReport r = rc::point_errors(y, y_hat);
    CHECK(r.rmse >= r.mae - 1e-12);
    CHECK(r.smape >= 0.0);
    CHECK(r.smape <= 2.0);
  }
}

TEST_CASE("point error validation") {
  rc::Vector y(2), y_hat(3);
  y << 1.0, 2.0;
  y_hat << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(rc::point_errors(y, y_hat), std::invalid_argument);
  CHECK_THROWS_AS(rc::point_errors(rc::Vector(), rc::Vector()),
                  std::invalid_argument);
}

TEST_CASE("interval coverage and width") {
  rc::Vector y(2), lower(2), upper(2);
  y << 0.0, 10.0;
  lower << -1.0, 0.0;
  upper << 1.0, 5.0;
  rc::IntervalReport r = rc::interval_scores(y, lower, upper);
  CHECK(r.picp == doctest::Approx(0.5));
  CHECK(r.mpiw == doctest::Approx(3.5));

  rc::IntervalReport exact = rc::interval_scores(y, y, y);
  CHECK(exact.picp == doctest::Approx(1.0));
  CHECK(exact.mpiw == doctest::Approx(0.0));

  rc::Vector crossed = upper;
  CHECK_THROWS_AS(rc::interval_scores(y, upper, lower), std::invalid_argument);
  (void)crossed;
}

TEST_CASE("gaussian crps closed form") {
  CHECK(rc::crps_gaussian(0.0, 1.0, 0.0) ==
        doctest::Approx(0.23369497725510924).epsilon(1e-12));
  // Vanishing spread at the truth leaves no score.
  CHECK(rc::crps_gaussian(3.0, 1e-12, 3.0) < 1e-9);
  CHECK_THROWS_AS(rc::crps_gaussian(0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("gaussian crps matches numerical integration") {
  rc::RandomSource rs(812);
  for (int trial = 0; trial < 100; ++trial) {
    const rc::Scalar mu = rs.uniform(-50.0, 50.0);
    const rc::Scalar sigma = rs.uniform(0.1, 30.0);
    const rc::Scalar y = mu + 4.0 * sigma * rs.uniform(-1.0, 1.0);
    const rc::Scalar closed = rc::crps_gaussian(mu, sigma, y);
    const rc::Scalar numeric = crps_by_integration(mu, sigma, y);
    CHECK(std::abs(closed - numeric) < 1e-6);
  }
}

TEST_CASE("gaussian crps location-scale identity") {
  rc::RandomSource rs(813);
  for (int trial = 0; trial < 20; ++trial) {
    const rc::Scalar mu = rs.uniform(-30.0, 30.0);
    const rc::Scalar sigma = rs.uniform(0.2, 9.0);
    const rc::Scalar y = rs.uniform(-60.0, 60.0);
    const rc::Scalar z = (y - mu) / sigma;
    CHECK(rc::crps_gaussian(mu, sigma, y) ==
          doctest::Approx(sigma * rc::crps_gaussian(0.0, 1.0, z)).epsilon(1e-12));
  }
}

TEST_CASE("mixture crps agrees with the closed form on one component") {
  rc::RandomSource rs(814);
  rc::RandomSource stream = rs.substream("crps-single");
  rc::Vector w(1), m(1), v(1);
  w << 1.0;
  m << 1.7;
  v << 2.25;
  const rc::Scalar estimate = rc::crps_mixture(w, m, v, 0.4, 100000, stream);
  const rc::Scalar exact = rc::crps_gaussian(1.7, 1.5, 0.4);
  // Three standard errors of the pair estimator at 1e5 draws for sd 1.5.
  CHECK(std::abs(estimate - exact) < 0.013);
}

TEST_CASE("mixture crps agrees with numerical integration") {
  rc::RandomSource rs(815);
  rc::RandomSource stream = rs.substream("crps-mixture");
  rc::Vector w(2), m(2), v(2);
  w << 0.3, 0.7;
  m << -2.0, 3.0;
  v << 0.64, 2.25;
  const rc::Scalar estimate = rc::crps_mixture(w, m, v, 1.2, 100000, stream);
  CHECK(std::abs(estimate - 0.83218072550551) < 0.022);
}

TEST_CASE("mixture crps is deterministic under a fixed stream") {
  rc::Vector w(2), m(2), v(2);
  w << 0.5, 0.5;
  m << 0.0, 4.0;
  v << 1.0, 1.0;
  rc::RandomSource a(99);
  rc::RandomSource b(99);
  rc::RandomSource sa = a.substream("crps");
  rc::RandomSource sb = b.substream("crps");
  CHECK(rc::crps_mixture(w, m, v, 1.0, 2000, sa) ==
        rc::crps_mixture(w, m, v, 1.0, 2000, sb));

  rc::RandomSource sc = a.substream("crps-other");
  rc::Vector bad_w(2);
  bad_w << 0.8, 0.8;
  CHECK_THROWS_AS(rc::crps_mixture(bad_w, m, v, 1.0, 10, sc),
                  std::invalid_argument);
}

TEST_CASE("identical errors give a degenerate equal-accuracy result") {
  rc::Vector e(50);
  for (rc::Index i = 0; i < 50; ++i) e[i] = std::sin(0.3 * rc::Scalar(i));
  rc::TestResult r = rc::dm_test(e, e, 24);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.degenerate);
}

TEST_CASE("dominated forecast is rejected decisively") {
  rc::RandomSource rs(816);
  rc::Vector e1(500), e2(500);
  for (rc::Index i = 0; i < 500; ++i) {
    e1[i] = std::abs(rs.normal());
    e2[i] = e1[i] + 0.5;
  }
  rc::TestResult r = rc::dm_test(e1, e2, 24);
  CHECK(!r.degenerate);
  CHECK(r.statistic < -2.58);
  CHECK(r.p_value < 0.01);

  rc::TestResult flipped = rc::dm_test(e2, e1, 24);
  CHECK(flipped.statistic == doctest::Approx(-r.statistic).epsilon(1e-12));
}

TEST_CASE("equal-accuracy statistic matches a hand-rolled oracle") {
  const rc::Index n = 40;
  rc::Vector e1(n), e2(n);
  for (rc::Index i = 0; i < n; ++i) {
    const rc::Scalar t = rc::Scalar(i);
    e1[i] = std::sin(0.7 * t) + 0.1 * t / rc::Scalar(n);
    e2[i] = e1[i] + 0.3 + 0.2 * std::cos(0.3 * t);
  }
  rc::TestResult h24 = rc::dm_test(e1, e2, 24);
  CHECK(h24.statistic == doctest::Approx(-3.39484050936147).epsilon(1e-9));
  CHECK(h24.p_value == doctest::Approx(0.0006866859028698171).epsilon(1e-6));

  rc::TestResult h1 = rc::dm_test(e1, e2, 1);
  CHECK(h1.statistic == doctest::Approx(-2.5460145440486737).epsilon(1e-9));
  CHECK(h1.p_value == doctest::Approx(0.010896064847731703).epsilon(1e-6));

  rc::TestResult habs = rc::dm_test(e1, e2, 5, rc::DmLoss::AbsoluteError);
  CHECK(habs.statistic == doctest::Approx(-1.322753737065615).epsilon(1e-9));
  CHECK(habs.p_value == doctest::Approx(0.18591728666530827).epsilon(1e-6));
}

TEST_CASE("equal-accuracy test validation") {
  rc::Vector shorty = rc::Vector::Ones(10);
  CHECK_THROWS_AS(rc::dm_test(shorty, shorty, 24), std::invalid_argument);
  rc::Vector a = rc::Vector::Ones(20);
  rc::Vector b = rc::Vector::Ones(21);
  CHECK_THROWS_AS(rc::dm_test(a, b, 24), std::invalid_argument);
  CHECK_THROWS_AS(rc::dm_test(a, a, 0), std::invalid_argument);
}

TEST_CASE("p-values stay calibrated under the null") {
  rc::RandomSource rs(817);
  const int sims = 500;
  const rc::Index n = 500;
  int rejections = 0;
  for (int s = 0; s < sims; ++s) {
    rc::Vector e1(n), e2(n);
    for (rc::Index i = 0; i < n; ++i) {
      e1[i] = rs.normal();
      e2[i] = rs.normal();
    }
    if (rc::dm_test(e1, e2, 24).p_value < 0.05) ++rejections;
  }
  const double rate = double(rejections) / sims;
  CHECK(rate >= 0.02);
  CHECK(rate <= 0.09);
}

TEST_CASE("identical treatments produce no effect") {
  rc::Matrix values(6, 3);
  for (rc::Index i = 0; i < 6; ++i) {
    values.row(i).setConstant(rc::Scalar(i) + 0.5);
  }
  rc::FriedmanNemenyi r = rc::friedman_nemenyi(values);
  CHECK(r.friedman.statistic == doctest::Approx(0.0));
  CHECK(r.friedman.p_value == doctest::Approx(1.0));
  for (rc::Index i = 0; i < 3; ++i) {
    CHECK(r.mean_ranks[i] == doctest::Approx(2.0));
    for (rc::Index j = 0; j < 3; ++j) {
      CHECK(r.nemenyi_p(i, j) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("uniform dominance is detected") {
  rc::RandomSource rs(818);
  rc::Matrix values(20, 3);
  for (rc::Index i = 0; i < 20; ++i) {
    const rc::Scalar base = rs.uniform(0.0, 1.0);
    values(i, 0) = base;
    values(i, 1) = base + 1.0;
    values(i, 2) = base + 2.0;
  }
  rc::FriedmanNemenyi r = rc::friedman_nemenyi(values);
  CHECK(r.mean_ranks[0] == doctest::Approx(1.0));
  CHECK(r.mean_ranks[1] == doctest::Approx(2.0));
  CHECK(r.mean_ranks[2] == doctest::Approx(3.0));
  CHECK(r.friedman.statistic == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(r.friedman.p_value ==
        doctest::Approx(2.0611536224385566e-09).epsilon(1e-6));
  CHECK(r.nemenyi_p(0, 1) == doctest::Approx(0.004463515591762057).epsilon(1e-4));
  CHECK(r.nemenyi_p(0, 2) < 1e-6);
  CHECK(r.nemenyi_p(0, 1) < 0.01);
  CHECK(r.nemenyi_p(1, 2) < 0.01);

  // Ranking direction flips the ranks but not the test decisions.
  rc::FriedmanNemenyi flipped = rc::friedman_nemenyi(values, false);
  CHECK(flipped.mean_ranks[0] == doctest::Approx(3.0));
  CHECK(flipped.friedman.statistic == doctest::Approx(40.0));
  CHECK(flipped.nemenyi_p(0, 1) == doctest::Approx(r.nemenyi_p(0, 1)));
}

TEST_CASE("ties receive average ranks") {
  rc::Matrix values(2, 3);
  values << 1.0, 1.0, 2.0,
            3.0, 2.0, 1.0;
  rc::FriedmanNemenyi r = rc::friedman_nemenyi(values);
  CHECK(r.mean_ranks[0] == doctest::Approx(2.25));
  CHECK(r.mean_ranks[1] == doctest::Approx(1.75));
  CHECK(r.mean_ranks[2] == doctest::Approx(2.0));
  CHECK(r.friedman.statistic == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.friedman.p_value == doctest::Approx(0.8824969025845955).epsilon(1e-10));
  CHECK(r.nemenyi_p(0, 1) == doctest::Approx(0.8713081045015412).epsilon(1e-6));
  CHECK(r.nemenyi_p(0, 2) == doctest::Approx(0.9661332559609382).epsilon(1e-6));
  CHECK(r.nemenyi_p(1, 2) == doctest::Approx(0.9661332559609382).epsilon(1e-6));
}

TEST_CASE("block order does not matter") {
  rc::RandomSource rs(819);
  rc::Matrix values(8, 4);
  for (rc::Index i = 0; i < 8; ++i) {
    for (rc::Index j = 0; j < 4; ++j) values(i, j) = rs.normal();
  }
  rc::FriedmanNemenyi a = rc::friedman_nemenyi(values);

  rc::Matrix shuffled(8, 4);
  const int order[8] = {5, 2, 7, 0, 3, 6, 1, 4};
  for (rc::Index i = 0; i < 8; ++i) shuffled.row(i) = values.row(order[i]);
  rc::FriedmanNemenyi b = rc::friedman_nemenyi(shuffled);

  CHECK((a.mean_ranks - b.mean_ranks).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.friedman.statistic == doctest::Approx(b.friedman.statistic));
  CHECK((a.nemenyi_p - b.nemenyi_p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rank test validation") {
  rc::Matrix one_block(1, 3);
  one_block << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(rc::friedman_nemenyi(one_block), std::invalid_argument);
  rc::Matrix one_treatment(3, 1);
  one_treatment << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(rc::friedman_nemenyi(one_treatment), std::invalid_argument);
}

}  // TEST_SUITE
