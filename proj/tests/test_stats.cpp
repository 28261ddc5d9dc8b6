#include <cmath>

#include "doctest.h"
#include "regimecast/stats.hpp"

using namespace regimecast;
namespace st = regimecast::stats;

TEST_SUITE_BEGIN("stats");

TEST_CASE("normal cdf matches reference values") {
  CHECK(st::norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(st::norm_cdf(0.5) == doctest::Approx(0.6914624612740131).epsilon(1e-12));
  CHECK(st::norm_cdf(-2.3) == doctest::Approx(0.010724110021675809).epsilon(1e-12));
  CHECK(st::norm_cdf(8.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("normal quantile inverts the cdf") {
  CHECK(st::norm_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-10));
  CHECK(st::norm_quantile(0.025) == doctest::Approx(-1.9599639845400545).epsilon(1e-10));
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999}) {
    CHECK(st::norm_cdf(st::norm_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK_THROWS(st::norm_quantile(0.0));
  CHECK_THROWS(st::norm_quantile(1.0));
}

TEST_CASE("incomplete beta matches reference values") {
  CHECK(st::reg_inc_beta(2.5, 3.5, 0.4) ==
        doctest::Approx(0.4869041915261176).epsilon(1e-12));
  CHECK(st::reg_inc_beta(0.5, 0.5, 0.9) ==
        doctest::Approx(0.7951672353008665).epsilon(1e-12));
  CHECK(st::reg_inc_beta(3.0, 4.0, 0.0) == 0.0);
  CHECK(st::reg_inc_beta(3.0, 4.0, 1.0) == 1.0);
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  CHECK(st::reg_inc_beta(1.7, 2.9, 0.33) ==
        doctest::Approx(1.0 - st::reg_inc_beta(2.9, 1.7, 0.67)).epsilon(1e-12));
}

TEST_CASE("incomplete gamma matches reference values") {
  CHECK(st::reg_lower_gamma(3.0, 2.5) ==
        doctest::Approx(0.45618688411667035).epsilon(1e-12));
  CHECK(st::reg_upper_gamma(0.7, 1.9) ==
        doctest::Approx(0.08522873929837742).epsilon(1e-12));
  for (double a : {0.3, 1.0, 4.2}) {
    for (double x : {0.1, 1.0, 7.5}) {
      CHECK(st::reg_lower_gamma(a, x) + st::reg_upper_gamma(a, x) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("chi-square and F survival functions") {
  CHECK(st::chi_square_sf(5.99, 2) == doctest::Approx(0.05003662708658629).epsilon(1e-11));
  CHECK(st::chi_square_sf(12.3, 5) == doctest::Approx(0.03090046463546092).epsilon(1e-11));
  CHECK(st::f_sf(3.2, 4, 17) == doctest::Approx(0.039402570364665476).epsilon(1e-11));
  CHECK(st::f_sf(1.0, 1, 1) == doctest::Approx(0.5).epsilon(1e-11));
  CHECK(st::f_sf(0.0, 3, 9) == 1.0);
}

TEST_CASE("studentized range cdf: k=2 collapses to a normal identity") {
  // Range of two iid normals is |N(0,2)|: P(R <= q) = 2 Phi(q/sqrt(2)) - 1.
  for (double q : {0.5, 1.0, 2.0, 3.5}) {
    const double expected = 2.0 * st::norm_cdf(q / std::sqrt(2.0)) - 1.0;
    CHECK(st::studentized_range_cdf(q, 2) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("studentized range cdf matches reference values") {
  CHECK(st::studentized_range_cdf(3.314493, 3) ==
        doctest::Approx(0.949999986096062).epsilon(1e-7));
  CHECK(st::studentized_range_cdf(2.0, 4) ==
        doctest::Approx(0.5096305900194505).epsilon(1e-7));
  CHECK(1.0 - st::studentized_range_cdf(3.0, 3) ==
        doctest::Approx(0.08554257165495793).epsilon(1e-6));
  CHECK(st::studentized_range_cdf(0.0, 5) == 0.0);
  // Monotone in q.
  CHECK(st::studentized_range_cdf(1.0, 3) < st::studentized_range_cdf(2.0, 3));
}

TEST_CASE("log densities match direct formulas") {
  CHECK(st::log_normal_pdf(1.0, 0.0, 1.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * 3.14159265358979323846) - 0.5)
            .epsilon(1e-14));
  CHECK(st::log_beta_pdf(0.5, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(st::log_gamma_pdf(2.0, 1.0, 1.0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(st::log_student_t_pdf(2.5, 4.0, 1.0, 4.0) ==
        doctest::Approx(-2.00291732804347).epsilon(1e-10));
}

TEST_SUITE_END();
