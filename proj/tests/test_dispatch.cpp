#include "regimecast/dispatch.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "regimecast/lp.hpp"
#include "regimecast/rng.hpp"
#include "regimecast/types.hpp"

namespace rc = regimecast;

namespace {

rc::BatteryParams default_battery() { return rc::BatteryParams{}; }

rc::BatteryParams unit_battery() {
  rc::BatteryParams bat;
  bat.c_max = 1.0;
  bat.eta_c = 1.0;
  bat.eta_d = 1.0;
  bat.p_charge_max = 1.0;
  bat.p_discharge_max = 1.0;
  bat.x_min = -1.0;
  bat.x_max = 1.0;
  bat.s_init = 0.0;
  bat.s_final = 0.0;
  return bat;
}

struct RandomDay {
  rc::Vector p_hat, sigma, r_hat, g_hat, demand;
  rc::RealizedInputs real;
};

RandomDay random_day(rc::RandomSource& rs, rc::Index t_horizon = 24) {
  RandomDay day;
  day.p_hat.resize(t_horizon);
  day.sigma.resize(t_horizon);
  day.r_hat.resize(t_horizon);
  day.g_hat.resize(t_horizon);
  day.demand.resize(t_horizon);
  day.real.price.resize(t_horizon);
  day.real.residual_load.resize(t_horizon);
  day.real.solar.resize(t_horizon);
  for (rc::Index t = 0; t < t_horizon; ++t) {
    day.p_hat[t] = 50.0 + 30.0 * rs.normal();
    day.sigma[t] = std::abs(10.0 * rs.normal());
    day.r_hat[t] = std::abs(40.0 * rs.normal());
    day.g_hat[t] = std::abs(30.0 * rs.normal());
    day.demand[t] = rs.uniform(0.0, 3.0);
    day.real.price[t] = day.p_hat[t] + 15.0 * rs.normal();
    day.real.residual_load[t] = std::abs(day.r_hat[t] + 10.0 * rs.normal());
    day.real.solar[t] = std::abs(day.g_hat[t] + 8.0 * rs.normal());
  }
  day.real.demand = day.demand;
  return day;
}

}  // namespace

TEST_SUITE("dispatch") {

TEST_CASE("battery parameter validation") {
  rc::BatteryParams bat = default_battery();
  CHECK_NOTHROW(bat.validate());

  rc::BatteryParams bad = bat;
  bad.eta_c = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = bat;
  bad.eta_d = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = bat;
  bad.s_init = bat.c_max + 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = bat;
  bad.x_min = 2.0;
  bad.x_max = -2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = bat;
  bad.c_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("constant price admits no profitable cycle") {
  // Lossy round trips make arbitrage impossible at a flat price, so the best
  // plan is to do nothing.
  const rc::Vector price = rc::Vector::Constant(24, 42.0);
  rc::Schedule plan = rc::plan_case1(price, default_battery());
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(std::abs(plan.objective) < 1e-9);
  CHECK(plan.charge.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(plan.discharge.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(rc::check_schedule(plan, default_battery()) == "");
}

TEST_CASE("two-hour toy buys low and sells high") {
  rc::Vector price(2);
  price << 10.0, 100.0;
  rc::Schedule plan = rc::plan_case1(price, unit_battery());
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(plan.objective == doctest::Approx(90.0).epsilon(1e-9));
  CHECK(plan.charge[0] == doctest::Approx(1.0));
  CHECK(plan.charge[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(plan.discharge[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(plan.discharge[1] == doctest::Approx(1.0));
  REQUIRE(plan.soc.size() == 3);
  CHECK(plan.soc[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(plan.soc[1] == doctest::Approx(1.0));
  CHECK(plan.soc[2] == doctest::Approx(0.0).scale(1.0));
  CHECK(rc::check_schedule(plan, unit_battery()) == "");
}

TEST_CASE("default battery plan respects every bound") {
  rc::Vector price(24);
  for (rc::Index t = 0; t < 24; ++t) {
    price[t] = 45.0 + 25.0 * std::sin(2.0 * M_PI * double(t) / 24.0);
  }
  price[18] = 140.0;  // evening spike
  price[3] = -5.0;    // negative night price
  const rc::BatteryParams bat = default_battery();
  rc::Schedule plan = rc::plan_case1(price, bat);
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(rc::check_schedule(plan, bat) == "");
  CHECK(plan.objective >= -1e-9);  // idle plan is always feasible here
  for (rc::Index t = 0; t < 24; ++t) {
    // At nonnegative prices a lossy round trip never pays, so the plan never
    // charges and discharges in the same hour; negative-price hours may churn.
    if (price[t] >= 0.0) CHECK(plan.charge[t] * plan.discharge[t] < 1e-6);
  }
}

TEST_CASE("risk-neutral case II reduces to case I") {
  rc::RandomSource rs(91);
  RandomDay day = random_day(rs);
  const rc::BatteryParams bat = default_battery();
  rc::Schedule base = rc::plan_case1(day.p_hat, bat);
  rc::Schedule risky = rc::plan_case2(day.p_hat, rc::Vector::Zero(24), 0.7, 0.3, bat);
  REQUIRE(base.status == rc::LpStatus::Optimal);
  REQUIRE(risky.status == rc::LpStatus::Optimal);
  CHECK(risky.objective == doctest::Approx(base.objective).epsilon(1e-9));
}

TEST_CASE("overwhelming risk penalty stops all trading") {
  rc::RandomSource rs(92);
  RandomDay day = random_day(rs);
  const rc::Scalar huge = 1e6 * day.p_hat.cwiseAbs().maxCoeff();
  rc::Schedule plan = rc::plan_case2(day.p_hat, rc::Vector::Ones(24), huge, huge,
                                     default_battery());
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(std::abs(plan.objective) < 1e-9);
  CHECK(plan.charge.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(plan.discharge.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("selling penalty shrinks the toy profit to its margin") {
  rc::Vector price(2), sigma(2);
  price << 10.0, 100.0;
  sigma << 0.0, 45.0;
  rc::Schedule plan = rc::plan_case2(price, sigma, 1.0, 0.0, unit_battery());
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  // Selling still clears 100 - 45 - 10 = 45 per unit, so the trade persists.
  CHECK(plan.objective == doctest::Approx(45.0).epsilon(1e-9));
  CHECK(plan.charge[0] == doctest::Approx(1.0));
  CHECK(plan.discharge[1] == doctest::Approx(1.0));
}

TEST_CASE("weightless case III reduces to case I") {
  rc::RandomSource rs(93);
  RandomDay day = random_day(rs);
  const rc::BatteryParams bat = default_battery();
  rc::Schedule base = rc::plan_case1(day.p_hat, bat);
  rc::Schedule grid = rc::plan_case3(day.p_hat, day.sigma, day.r_hat, day.g_hat,
                                     0.0, 0.0, 0.0, bat);
  REQUIRE(grid.status == rc::LpStatus::Optimal);
  CHECK(grid.objective == doctest::Approx(base.objective).epsilon(1e-9));
}

TEST_CASE("solar incentive concentrates charging on the sunny hour") {
  const rc::BatteryParams bat = default_battery();
  const rc::Vector price = rc::Vector::Constant(24, 10.0);
  rc::Vector solar = rc::Vector::Zero(24);
  solar[12] = 1000.0;
  rc::Schedule plan = rc::plan_case3(price, rc::Vector::Zero(24),
                                     rc::Vector::Zero(24), solar,
                                     0.0, 0.0, 1.0, bat);
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(plan.charge[12] == doctest::Approx(bat.p_charge_max).epsilon(1e-9));
  rc::Scalar off_sun = 0.0;
  for (rc::Index t = 0; t < 24; ++t) {
    if (t != 12) off_sun += plan.charge[t];
  }
  CHECK(off_sun < 1e-7);
  CHECK(rc::check_schedule(plan, bat) == "");
}

TEST_CASE("residual-load penalty forces only the minimal required charge") {
  rc::BatteryParams bat = default_battery();
  bat.s_init = 2.0;
  bat.s_final = 4.0;  // reachable only by charging
  const rc::Vector price = rc::Vector::Constant(24, 10.0);
  rc::Schedule plan = rc::plan_case3(price, rc::Vector::Zero(24),
                                     rc::Vector::Ones(24), rc::Vector::Zero(24),
                                     0.0, 1e6, 0.0, bat);
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(plan.discharge.sum() < 1e-7);
  CHECK(plan.charge.sum() ==
        doctest::Approx((bat.s_final - bat.s_init) / bat.eta_c).epsilon(1e-6));
  CHECK(rc::check_schedule(plan, bat) == "");
}

TEST_CASE("flat price leaves the battery idle in case IV") {
  const rc::BatteryParams bat = default_battery();
  const rc::Vector price = rc::Vector::Constant(24, 25.0);
  rc::Vector demand(24);
  for (rc::Index t = 0; t < 24; ++t) demand[t] = 1.0 + 0.1 * double(t % 5);
  rc::Schedule plan = rc::plan_case4(price, rc::Vector::Zero(24), demand, 0.0, bat);
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(plan.objective == doctest::Approx(25.0 * demand.sum()).epsilon(1e-9));
  CHECK(plan.grid_to_batt.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(plan.batt_to_load.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(rc::check_schedule(plan, bat, &demand) == "");
}

TEST_CASE("case IV stores cheap energy for the expensive hour") {
  rc::BatteryParams bat = unit_battery();
  bat.c_max = 2.0;
  bat.p_charge_max = 5.0;
  bat.p_discharge_max = 5.0;
  bat.x_min = -5.0;
  bat.x_max = 5.0;
  rc::Vector price = rc::Vector::Constant(24, 10.0);
  price[17] = 100.0;
  rc::Vector demand = rc::Vector::Zero(24);
  demand[17] = 1.0;
  rc::Schedule plan = rc::plan_case4(price, rc::Vector::Zero(24), demand, 0.0, bat);
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(plan.objective == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(plan.grid_buy[17] < 1e-9);
  CHECK(plan.batt_to_load[17] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(plan.grid_to_batt.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(plan.grid_to_batt[17] < 1e-9);
  CHECK(rc::check_schedule(plan, bat, &demand) == "");
}

TEST_CASE("zero demand costs nothing") {
  const rc::BatteryParams bat = default_battery();
  const rc::Vector price = rc::Vector::Constant(24, 60.0);
  rc::Schedule plan = rc::plan_case4(price, rc::Vector::Zero(24),
                                     rc::Vector::Zero(24), 0.0, bat);
  REQUIRE(plan.status == rc::LpStatus::Optimal);
  CHECK(std::abs(plan.objective) < 1e-9);
}

TEST_CASE("perfect foresight for case II equals case I") {
  rc::RandomSource rs(94);
  RandomDay day = random_day(rs);
  const rc::BatteryParams bat = default_battery();
  const rc::StrategyParams strat;
  rc::Schedule pf1 = rc::perfect_foresight(rc::DispatchCase::CaseI, day.real, strat, bat);
  rc::Schedule pf2 = rc::perfect_foresight(rc::DispatchCase::CaseII, day.real, strat, bat);
  REQUIRE(pf1.status == rc::LpStatus::Optimal);
  REQUIRE(pf2.status == rc::LpStatus::Optimal);
  CHECK(pf1.objective == doctest::Approx(pf2.objective).epsilon(1e-12));
  CHECK(pf2.case_id == rc::DispatchCase::CaseII);
}

TEST_CASE("exact prediction realizes the perfect-foresight value") {
  rc::RandomSource rs(95);
  RandomDay day = random_day(rs);
  day.real.price = day.p_hat;  // prediction equals truth
  const rc::BatteryParams bat = default_battery();
  const rc::StrategyParams strat;

  rc::Schedule plan1 = rc::plan_case1(day.p_hat, bat);
  rc::Schedule pf1 = rc::perfect_foresight(rc::DispatchCase::CaseI, day.real, strat, bat);
  CHECK(rc::realized_value(rc::DispatchCase::CaseI, plan1, day.real, strat, bat) ==
        doctest::Approx(pf1.objective).epsilon(1e-9));

  rc::Schedule plan4 = rc::plan_case4(day.p_hat, rc::Vector::Zero(24), day.demand,
                                      0.0, bat);
  rc::Schedule pf4 = rc::perfect_foresight(rc::DispatchCase::CaseIV, day.real, strat, bat);
  CHECK(rc::realized_value(rc::DispatchCase::CaseIV, plan4, day.real, strat, bat) ==
        doctest::Approx(pf4.objective).epsilon(1e-9));
}

TEST_CASE("perfect foresight on the two-hour toy") {
  rc::RealizedInputs real;
  real.price.resize(2);
  real.price << 10.0, 100.0;
  rc::Schedule pf = rc::perfect_foresight(rc::DispatchCase::CaseI, real,
                                          rc::StrategyParams{}, unit_battery());
  REQUIRE(pf.status == rc::LpStatus::Optimal);
  CHECK(pf.objective == doctest::Approx(90.0).epsilon(1e-9));
}

TEST_CASE("realized value is bounded by perfect foresight") {
  rc::RandomSource rs(96);
  const rc::BatteryParams bat = default_battery();
  const rc::StrategyParams strat;
  const int kTrials = 200;

  for (int trial = 0; trial < kTrials; ++trial) {
    RandomDay day = random_day(rs);

    rc::Schedule plan1 = rc::plan_case1(day.p_hat, bat);
    REQUIRE(plan1.status == rc::LpStatus::Optimal);
    REQUIRE(rc::check_schedule(plan1, bat) == "");
    const rc::Scalar realized1 =
        rc::realized_value(rc::DispatchCase::CaseI, plan1, day.real, strat, bat);
    const rc::Schedule pf1 =
        rc::perfect_foresight(rc::DispatchCase::CaseI, day.real, strat, bat);
    REQUIRE(realized1 <= pf1.objective + 1e-7);

    rc::Schedule plan2 = rc::plan_case2(day.p_hat, day.sigma, strat.lambda1,
                                        strat.lambda2, bat);
    REQUIRE(plan2.status == rc::LpStatus::Optimal);
    REQUIRE(rc::check_schedule(plan2, bat) == "");
    const rc::Scalar realized2 =
        rc::realized_value(rc::DispatchCase::CaseII, plan2, day.real, strat, bat);
    const rc::Schedule pf2 =
        rc::perfect_foresight(rc::DispatchCase::CaseII, day.real, strat, bat);
    REQUIRE(realized2 <= pf2.objective + 1e-7);

    rc::Schedule plan3 = rc::plan_case3(day.p_hat, day.sigma, day.r_hat, day.g_hat,
                                        strat.lambda, strat.mu, strat.gamma, bat);
    REQUIRE(plan3.status == rc::LpStatus::Optimal);
    REQUIRE(rc::check_schedule(plan3, bat) == "");
    const rc::Scalar realized3 =
        rc::realized_value(rc::DispatchCase::CaseIII, plan3, day.real, strat, bat);
    const rc::Schedule pf3 =
        rc::perfect_foresight(rc::DispatchCase::CaseIII, day.real, strat, bat);
    REQUIRE(realized3 <= pf3.objective + 1e-7);

    rc::Schedule plan4 = rc::plan_case4(day.p_hat, day.sigma, day.demand,
                                        strat.lambda, bat);
    REQUIRE(plan4.status == rc::LpStatus::Optimal);
    REQUIRE(rc::check_schedule(plan4, bat, &day.demand) == "");
    const rc::Scalar realized4 =
        rc::realized_value(rc::DispatchCase::CaseIV, plan4, day.real, strat, bat);
    const rc::Schedule pf4 =
        rc::perfect_foresight(rc::DispatchCase::CaseIV, day.real, strat, bat);
    REQUIRE(realized4 >= pf4.objective - 1e-7);
  }
}

TEST_CASE("three-hour programs agree with vertex enumeration") {
  rc::RandomSource rs(97);
  rc::BatteryParams bat;
  bat.c_max = 3.0;
  bat.eta_c = 0.9;
  bat.eta_d = 0.9;
  bat.p_charge_max = 2.0;
  bat.p_discharge_max = 2.0;
  bat.x_min = -2.0;
  bat.x_max = 2.0;
  bat.s_init = 1.0;
  bat.s_final = 1.0;

  for (int trial = 0; trial < 12; ++trial) {
    rc::Vector charge_coef(3), discharge_coef(3);
    for (rc::Index t = 0; t < 3; ++t) {
      charge_coef[t] = 30.0 * rs.normal();
      discharge_coef[t] = 30.0 * rs.normal();
    }
    rc::LpProblem p = rc::storage_lp(charge_coef, discharge_coef, bat);
    rc::LpSolution fast = rc::solve_lp(p);
    rc::LpSolution brute = rc::enumerate_vertices(p);
    REQUIRE(fast.status == rc::LpStatus::Optimal);
    REQUIRE(brute.status == rc::LpStatus::Optimal);
    CHECK(fast.objective == doctest::Approx(brute.objective).epsilon(1e-6));
    CHECK(rc::verify_kkt(p, fast) == "");
  }

  for (int trial = 0; trial < 12; ++trial) {
    rc::Vector grid_coef(3), to_load_coef(3), to_batt_coef(3), demand(3);
    for (rc::Index t = 0; t < 3; ++t) {
      grid_coef[t] = 5.0 + std::abs(20.0 * rs.normal());
      to_load_coef[t] = std::abs(2.0 * rs.normal());
      to_batt_coef[t] = 5.0 + std::abs(20.0 * rs.normal());
      demand[t] = rs.uniform(0.0, 2.0);
    }
    rc::LpProblem p = rc::fixed_load_lp(grid_coef, to_load_coef, to_batt_coef,
                                        demand, bat);
    rc::LpSolution fast = rc::solve_lp(p);
    rc::LpSolution brute = rc::enumerate_vertices(p);
    REQUIRE(fast.status == rc::LpStatus::Optimal);
    REQUIRE(brute.status == rc::LpStatus::Optimal);
    CHECK(fast.objective == doctest::Approx(brute.objective).epsilon(1e-6));
    CHECK(rc::verify_kkt(p, fast) == "");
  }
}

TEST_CASE("unreachable terminal state reports infeasible") {
  rc::BatteryParams bat = default_battery();
  bat.s_init = 0.0;
  bat.s_final = 10.0;
  bat.p_charge_max = 1.0;  // at most 2 * 0.95 can be stored over two hours
  rc::Vector price(2);
  price << 10.0, 20.0;
  rc::Schedule plan = rc::plan_case1(price, bat);
  CHECK(plan.status == rc::LpStatus::Infeasible);
  CHECK(std::isnan(plan.objective));
}

TEST_CASE("input validation") {
  const rc::BatteryParams bat = default_battery();
  const rc::Vector price = rc::Vector::Constant(24, 50.0);
  rc::Vector bad_sigma = rc::Vector::Zero(24);
  bad_sigma[5] = -1.0;
  CHECK_THROWS_AS(rc::plan_case2(price, bad_sigma, 0.5, 0.5, bat),
                  std::invalid_argument);
  CHECK_THROWS_AS(rc::plan_case2(price, rc::Vector::Zero(23), 0.5, 0.5, bat),
                  std::invalid_argument);
  CHECK_THROWS_AS(rc::plan_case2(price, rc::Vector::Zero(24), -0.1, 0.5, bat),
                  std::invalid_argument);

  rc::Schedule plan = rc::plan_case1(price, bat);
  rc::RealizedInputs real;
  real.price = price;
  CHECK_THROWS_AS(rc::realized_value(rc::DispatchCase::CaseII, plan, real,
                                     rc::StrategyParams{}, bat),
                  std::invalid_argument);

  CHECK(rc::case_label(rc::DispatchCase::CaseIII) == std::string("III"));
  CHECK(rc::case_from_number(4) == rc::DispatchCase::CaseIV);
  CHECK_THROWS_AS(rc::case_from_number(5), std::invalid_argument);
}

}  // TEST_SUITE
