#include "regimecast/dispatch.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace regimecast {

namespace {

constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_size(const Vector& v, Index n, const char* name) {
  if (v.size() != n) {
    std::ostringstream os;
    os << name << " has " << v.size() << " entries, expected " << n;
    throw std::invalid_argument(os.str());
  }
}

void require_nonneg(const Vector& v, const char* name) {
  if (v.size() > 0 && v.minCoeff() < 0.0) {
    throw std::invalid_argument(std::string(name) + " must be nonnegative");
  }
}

// Adds the state-of-charge box constraints, the terminal requirement, and
// (optionally) the net-exchange limits to a flow-variable program in which
// charge variables occupy [charge0, charge0+T) and discharge variables
// [discharge0, discharge0+T).  soc_{t+1} = s_init
// + sum_{u<=t} (eta_c * charge_u - discharge_u / eta_d).
void add_storage_rows(LpProblem& p, Index t_horizon, Index charge0,
                      Index discharge0, const BatteryParams& bat,
                      bool net_limits) {
  const Index n = p.num_vars();
  for (Index t = 0; t < t_horizon; ++t) {
    Vector cum = Vector::Zero(n);
    for (Index u = 0; u <= t; ++u) {
      cum[charge0 + u] = bat.eta_c;
      cum[discharge0 + u] = -1.0 / bat.eta_d;
    }
    p.add_inequality(cum, bat.c_max - bat.s_init);  // soc_{t+1} <= c_max
    p.add_inequality(-cum, bat.s_init);             // soc_{t+1} >= 0
    if (t == t_horizon - 1) {
      p.add_inequality(-cum, bat.s_init - bat.s_final);  // terminal floor
    }
  }
  if (net_limits) {
    for (Index t = 0; t < t_horizon; ++t) {
      Vector net = Vector::Zero(n);
      net[discharge0 + t] = 1.0;
      net[charge0 + t] = -1.0;
      p.add_inequality(net, bat.x_max);
      p.add_inequality(-net, -bat.x_min);
    }
  }
}

// Rebuilds the state-of-charge trajectory from the flow decisions.
Vector soc_path(const Vector& charge, const Vector& discharge,
                const BatteryParams& bat) {
  const Index t_horizon = charge.size();
  Vector soc(t_horizon + 1);
  soc[0] = bat.s_init;
  for (Index t = 0; t < t_horizon; ++t) {
    soc[t + 1] = soc[t] + bat.eta_c * charge[t] - discharge[t] / bat.eta_d;
  }
  return soc;
}

Schedule failed_schedule(DispatchCase c, LpStatus status) {
  Schedule s;
  s.case_id = c;
  s.status = status;
  s.objective = std::numeric_limits<Scalar>::quiet_NaN();
  return s;
}

// With strictly lossy round trips, charging and discharging in the same hour
// is never optimal unless charging itself carries a positive reward (strongly
// negative prices, or a renewable bonus outweighing the price).  At hours
// without such a reward a simultaneous flow signals a solver defect, so we
// fail loudly there; at rewarded hours the churn is a legitimate optimum of
// the stated program and is kept.  `charge_reward[t]` is the objective gain
// per unit charged (profit sense).
void check_no_simultaneous_flow(const Vector& charge, const Vector& discharge,
                                const Vector& charge_reward) {
  for (Index t = 0; t < charge.size(); ++t) {
    if (charge_reward[t] > 1e-9) continue;
    if (charge[t] * discharge[t] >= 1e-6) {
      std::ostringstream os;
      os << "simultaneous charge and discharge at hour " << t << " (" << charge[t]
         << " * " << discharge[t] << ")";
      throw std::runtime_error(os.str());
    }
  }
}

Schedule solve_storage(DispatchCase c, const Vector& charge_coef,
                       const Vector& discharge_coef, const BatteryParams& bat) {
  const Index t_horizon = charge_coef.size();
  LpProblem p = storage_lp(charge_coef, discharge_coef, bat);
  LpSolution sol = solve_lp(p);
  if (sol.status != LpStatus::Optimal) return failed_schedule(c, sol.status);

  Schedule s;
  s.case_id = c;
  s.status = LpStatus::Optimal;
  s.charge = sol.x.head(t_horizon);
  s.discharge = sol.x.segment(t_horizon, t_horizon);
  s.soc = soc_path(s.charge, s.discharge, bat);
  s.objective = sol.objective;
  check_no_simultaneous_flow(s.charge, s.discharge, charge_coef);
  return s;
}

}  // namespace

void BatteryParams::validate() const {
  require(std::isfinite(c_max) && c_max > 0.0, "c_max must be positive");
  require(eta_c > 0.0 && eta_c <= 1.0, "eta_c must lie in (0, 1]");
  require(eta_d > 0.0 && eta_d <= 1.0, "eta_d must lie in (0, 1]");
  require(p_charge_max >= 0.0, "p_charge_max must be nonnegative");
  require(p_discharge_max >= 0.0, "p_discharge_max must be nonnegative");
  require(x_min <= x_max, "x_min must not exceed x_max");
  require(s_init >= 0.0 && s_init <= c_max, "s_init must lie in [0, c_max]");
  require(s_final >= 0.0 && s_final <= c_max, "s_final must lie in [0, c_max]");
}

const char* case_label(DispatchCase c) {
  switch (c) {
    case DispatchCase::CaseI: return "I";
    case DispatchCase::CaseII: return "II";
    case DispatchCase::CaseIII: return "III";
    case DispatchCase::CaseIV: return "IV";
  }
  throw std::invalid_argument("unknown dispatch case");
}

DispatchCase case_from_number(int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("dispatch case must be 1..4");
  return static_cast<DispatchCase>(n);
}

LpProblem storage_lp(const Vector& charge_coef, const Vector& discharge_coef,
                     const BatteryParams& bat) {
  bat.validate();
  const Index t_horizon = charge_coef.size();
  require(t_horizon > 0, "horizon must be positive");
  require_size(discharge_coef, t_horizon, "discharge_coef");

  LpProblem p = LpProblem::with_vars(2 * t_horizon, LpSense::Maximize);
  p.objective.head(t_horizon) = charge_coef;
  p.objective.tail(t_horizon) = discharge_coef;
  p.upper.head(t_horizon).setConstant(bat.p_charge_max);
  p.upper.tail(t_horizon).setConstant(bat.p_discharge_max);
  add_storage_rows(p, t_horizon, 0, t_horizon, bat, /*net_limits=*/true);
  return p;
}

LpProblem fixed_load_lp(const Vector& grid_coef, const Vector& to_load_coef,
                        const Vector& to_batt_coef, const Vector& demand,
                        const BatteryParams& bat) {
  bat.validate();
  const Index t_horizon = grid_coef.size();
  require(t_horizon > 0, "horizon must be positive");
  require_size(to_load_coef, t_horizon, "to_load_coef");
  require_size(to_batt_coef, t_horizon, "to_batt_coef");
  require_size(demand, t_horizon, "demand");
  require_nonneg(demand, "demand");

  LpProblem p = LpProblem::with_vars(3 * t_horizon, LpSense::Minimize);
  p.objective.head(t_horizon) = grid_coef;
  p.objective.segment(t_horizon, t_horizon) = to_load_coef;
  p.objective.tail(t_horizon) = to_batt_coef;
  p.upper.segment(t_horizon, t_horizon).setConstant(bat.p_discharge_max);
  p.upper.tail(t_horizon).setConstant(bat.p_charge_max);
  // Battery dynamics run on grid-to-battery (charge) and battery-to-load
  // (discharge); direct grid purchases never touch the state of charge.
  add_storage_rows(p, t_horizon, 2 * t_horizon, t_horizon, bat,
                   /*net_limits=*/false);
  for (Index t = 0; t < t_horizon; ++t) {
    Vector row = Vector::Zero(3 * t_horizon);
    row[t] = 1.0;                       // grid purchase
    row[t_horizon + t] = bat.eta_d;     // delivered battery energy
    p.add_equality(row, demand[t]);
  }
  return p;
}

Schedule plan_case1(const Vector& price_hat, const BatteryParams& bat) {
  const Index t_horizon = price_hat.size();
  require(t_horizon > 0, "horizon must be positive");
  Vector charge_coef = -price_hat / bat.eta_c;
  Vector discharge_coef = price_hat * bat.eta_d;
  return solve_storage(DispatchCase::CaseI, charge_coef, discharge_coef, bat);
}

Schedule plan_case2(const Vector& price_hat, const Vector& sigma, Scalar lambda1,
                    Scalar lambda2, const BatteryParams& bat) {
  const Index t_horizon = price_hat.size();
  require(t_horizon > 0, "horizon must be positive");
  require_size(sigma, t_horizon, "sigma");
  require_nonneg(sigma, "sigma");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "risk weights must be nonnegative");
  Vector charge_coef = -price_hat / bat.eta_c - lambda2 * sigma;
  Vector discharge_coef = price_hat * bat.eta_d - lambda1 * sigma;
  return solve_storage(DispatchCase::CaseII, charge_coef, discharge_coef, bat);
}

Schedule plan_case3(const Vector& price_hat, const Vector& sigma,
                    const Vector& residual_hat, const Vector& solar_hat,
                    Scalar lambda, Scalar mu, Scalar gamma,
                    const BatteryParams& bat) {
  const Index t_horizon = price_hat.size();
  require(t_horizon > 0, "horizon must be positive");
  require_size(sigma, t_horizon, "sigma");
  require_size(residual_hat, t_horizon, "residual_hat");
  require_size(solar_hat, t_horizon, "solar_hat");
  require_nonneg(sigma, "sigma");
  require(lambda >= 0.0 && mu >= 0.0 && gamma >= 0.0,
          "policy weights must be nonnegative");
  Vector charge_coef = -price_hat / bat.eta_c - lambda * sigma -
                       mu * residual_hat + gamma * solar_hat;
  Vector discharge_coef = price_hat * bat.eta_d - lambda * sigma;
  return solve_storage(DispatchCase::CaseIII, charge_coef, discharge_coef, bat);
}

Schedule plan_case4(const Vector& price_hat, const Vector& sigma,
                    const Vector& demand, Scalar lambda,
                    const BatteryParams& bat) {
  const Index t_horizon = price_hat.size();
  require(t_horizon > 0, "horizon must be positive");
  require_size(sigma, t_horizon, "sigma");
  require_size(demand, t_horizon, "demand");
  require_nonneg(sigma, "sigma");
  require(lambda >= 0.0, "risk weight must be nonnegative");

  Vector grid_coef = price_hat + lambda * sigma;
  Vector to_load_coef = lambda * sigma;
  Vector to_batt_coef = price_hat + lambda * sigma;
  LpProblem p = fixed_load_lp(grid_coef, to_load_coef, to_batt_coef, demand, bat);
  LpSolution sol = solve_lp(p);
  if (sol.status != LpStatus::Optimal) {
    return failed_schedule(DispatchCase::CaseIV, sol.status);
  }

  Schedule s;
  s.case_id = DispatchCase::CaseIV;
  s.status = LpStatus::Optimal;
  s.grid_buy = sol.x.head(t_horizon);
  s.batt_to_load = sol.x.segment(t_horizon, t_horizon);
  s.grid_to_batt = sol.x.tail(t_horizon);
  s.charge = s.grid_to_batt;
  s.discharge = s.batt_to_load;
  s.soc = soc_path(s.charge, s.discharge, bat);
  s.objective = sol.objective;
  check_no_simultaneous_flow(s.charge, s.discharge, -to_batt_coef);
  return s;
}

Schedule perfect_foresight(DispatchCase c, const RealizedInputs& real,
                           const StrategyParams& strat, const BatteryParams& bat) {
  const Index t_horizon = real.price.size();
  require(t_horizon > 0, "realized price is required");
  switch (c) {
    case DispatchCase::CaseI:
    case DispatchCase::CaseII: {
      Schedule s = plan_case1(real.price, bat);
      s.case_id = c;
      return s;
    }
    case DispatchCase::CaseIII: {
      require_size(real.residual_load, t_horizon, "residual_load");
      require_size(real.solar, t_horizon, "solar");
      Vector charge_coef = -real.price / bat.eta_c - strat.mu * real.residual_load +
                           strat.gamma * real.solar;
      Vector discharge_coef = real.price * bat.eta_d;
      return solve_storage(DispatchCase::CaseIII, charge_coef, discharge_coef, bat);
    }
    case DispatchCase::CaseIV: {
      require_size(real.demand, t_horizon, "demand");
      LpProblem p = fixed_load_lp(real.price, Vector::Zero(t_horizon), real.price,
                                  real.demand, bat);
      LpSolution sol = solve_lp(p);
      if (sol.status != LpStatus::Optimal) {
        return failed_schedule(DispatchCase::CaseIV, sol.status);
      }
      Schedule s;
      s.case_id = DispatchCase::CaseIV;
      s.status = LpStatus::Optimal;
      s.grid_buy = sol.x.head(t_horizon);
      s.batt_to_load = sol.x.segment(t_horizon, t_horizon);
      s.grid_to_batt = sol.x.tail(t_horizon);
      s.charge = s.grid_to_batt;
      s.discharge = s.batt_to_load;
      s.soc = soc_path(s.charge, s.discharge, bat);
      s.objective = sol.objective;
      check_no_simultaneous_flow(s.charge, s.discharge, -real.price);
      return s;
    }
  }
  throw std::invalid_argument("unknown dispatch case");
}

Scalar realized_value(DispatchCase c, const Schedule& plan,
                      const RealizedInputs& real, const StrategyParams& strat,
                      const BatteryParams& bat) {
  require(plan.case_id == c, "schedule case does not match the requested case");
  require(plan.status == LpStatus::Optimal, "schedule is not optimal");
  const Index t_horizon = plan.charge.size();
  require_size(real.price, t_horizon, "price");

  // Uncertainty penalties are policy terms; evaluation at realized conditions
  // drops them while keeping every term that has a realized counterpart.
  switch (c) {
    case DispatchCase::CaseI:
    case DispatchCase::CaseII:
      return (real.price.array() * plan.discharge.array()).sum() * bat.eta_d -
             (real.price.array() * plan.charge.array()).sum() / bat.eta_c;
    case DispatchCase::CaseIII: {
      require_size(real.residual_load, t_horizon, "residual_load");
      require_size(real.solar, t_horizon, "solar");
      const Scalar arbitrage =
          (real.price.array() * plan.discharge.array()).sum() * bat.eta_d -
          (real.price.array() * plan.charge.array()).sum() / bat.eta_c;
      const Scalar policy =
          -strat.mu * (real.residual_load.array() * plan.charge.array()).sum() +
          strat.gamma * (real.solar.array() * plan.charge.array()).sum();
      return arbitrage + policy;
    }
    case DispatchCase::CaseIV:
      require_size(plan.grid_buy, t_horizon, "grid_buy");
      require_size(plan.grid_to_batt, t_horizon, "grid_to_batt");
      return (real.price.array() *
              (plan.grid_buy.array() + plan.grid_to_batt.array()))
          .sum();
  }
  throw std::invalid_argument("unknown dispatch case");
}

std::string check_schedule(const Schedule& plan, const BatteryParams& bat,
                           const Vector* demand, Scalar tol) {
  bat.validate();
  std::ostringstream os;
  const Index t_horizon = plan.charge.size();
  if (plan.status != LpStatus::Optimal) return "schedule is not optimal";
  if (plan.discharge.size() != t_horizon) return "discharge size mismatch";
  if (plan.soc.size() != t_horizon + 1) return "soc size mismatch";

  if (std::abs(plan.soc[0] - bat.s_init) > tol) {
    os << "soc[0]=" << plan.soc[0] << " differs from s_init=" << bat.s_init;
    return os.str();
  }
  for (Index t = 0; t < t_horizon; ++t) {
    const Scalar next =
        plan.soc[t] + bat.eta_c * plan.charge[t] - plan.discharge[t] / bat.eta_d;
    if (std::abs(plan.soc[t + 1] - next) > tol) {
      os << "soc recursion violated at hour " << t;
      return os.str();
    }
  }
  for (Index t = 0; t <= t_horizon; ++t) {
    if (plan.soc[t] < -tol || plan.soc[t] > bat.c_max + tol) {
      os << "soc bound violated at step " << t << ": " << plan.soc[t];
      return os.str();
    }
  }
  if (plan.soc[t_horizon] < bat.s_final - tol) {
    os << "terminal soc " << plan.soc[t_horizon] << " below s_final "
       << bat.s_final;
    return os.str();
  }
  for (Index t = 0; t < t_horizon; ++t) {
    if (plan.charge[t] < -tol || plan.charge[t] > bat.p_charge_max + tol) {
      os << "charge bound violated at hour " << t;
      return os.str();
    }
    if (plan.discharge[t] < -tol ||
        plan.discharge[t] > bat.p_discharge_max + tol) {
      os << "discharge bound violated at hour " << t;
      return os.str();
    }
  }

  if (plan.case_id == DispatchCase::CaseIV) {
    if (demand == nullptr) return "case IV check requires the demand profile";
    if (demand->size() != t_horizon) return "demand size mismatch";
    if (plan.grid_buy.size() != t_horizon ||
        plan.batt_to_load.size() != t_horizon ||
        plan.grid_to_batt.size() != t_horizon) {
      return "case IV flow vectors missing";
    }
    for (Index t = 0; t < t_horizon; ++t) {
      if (plan.grid_buy[t] < -tol) {
        os << "grid purchase negative at hour " << t;
        return os.str();
      }
      const Scalar served =
          plan.grid_buy[t] + bat.eta_d * plan.batt_to_load[t];
      if (std::abs(served - (*demand)[t]) > tol) {
        os << "demand balance violated at hour " << t << ": served " << served
           << " vs demand " << (*demand)[t];
        return os.str();
      }
      if (std::abs(plan.charge[t] - plan.grid_to_batt[t]) > tol ||
          std::abs(plan.discharge[t] - plan.batt_to_load[t]) > tol) {
        os << "case IV flow mirror broken at hour " << t;
        return os.str();
      }
    }
  } else {
    for (Index t = 0; t < t_horizon; ++t) {
      const Scalar net = plan.discharge[t] - plan.charge[t];
      if (net < bat.x_min - tol || net > bat.x_max + tol) {
        os << "net exchange bound violated at hour " << t << ": " << net;
        return os.str();
      }
    }
  }
  return "";
}

}  // namespace regimecast
