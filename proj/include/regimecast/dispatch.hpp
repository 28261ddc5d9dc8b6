#pragma once

#include <string>

#include "regimecast/lp.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Physical description of the storage asset shared by all dispatch
/// strategies.  All energy quantities use one consistent unit; the CSV
/// emitters document the scale in their headers.
struct BatteryParams {
  Scalar c_max = 10.0;           ///< storage capacity
  Scalar eta_c = 0.95;           ///< charging efficiency, in (0, 1]
  Scalar eta_d = 0.95;           ///< discharging efficiency, in (0, 1]
  Scalar p_charge_max = 5.0;     ///< per-hour limit on energy charged
  Scalar p_discharge_max = 5.0;  ///< per-hour limit on energy discharged
  Scalar x_min = -5.0;           ///< lower bound on net grid injection (discharge - charge)
  Scalar x_max = 5.0;            ///< upper bound on net grid injection
  Scalar s_init = 5.0;           ///< state of charge entering hour 1
  Scalar s_final = 5.0;          ///< minimum state of charge after the last hour

  /// Throws std::invalid_argument when a field violates its documented range.
  void validate() const;
};

/// Weights for the risk- and policy-aware objectives.  lambda1/lambda2 price
/// per-direction transaction risk (case II), lambda prices total transaction
/// volume (cases III and IV), mu penalizes charging against residual load and
/// gamma rewards charging against renewable output (case III).
struct StrategyParams {
  Scalar lambda1 = 0.5;
  Scalar lambda2 = 0.5;
  Scalar lambda = 0.5;
  Scalar mu = 0.01;
  Scalar gamma = 0.01;
};

/// The four operational strategies.
enum class DispatchCase : int {
  CaseI = 1,    ///< price arbitrage on the forecast mean only
  CaseII = 2,   ///< arbitrage with per-direction uncertainty penalties
  CaseIII = 3,  ///< arbitrage with volume risk and grid-support terms
  CaseIV = 4,   ///< cost-minimal service of a fixed hourly demand
};

/// Roman-numeral label ("I".."IV") used in reports and CSV output.
const char* case_label(DispatchCase c);

/// Maps 1..4 to the enum; throws std::invalid_argument otherwise.
DispatchCase case_from_number(int n);

/// Hourly plan produced by the planners.  For case IV the battery-side flows
/// are mirrored into charge/discharge so that the state-of-charge recursion
/// reads identically across cases; grid_buy/batt_to_load/grid_to_batt are
/// populated for case IV only.
struct Schedule {
  DispatchCase case_id = DispatchCase::CaseI;
  LpStatus status = LpStatus::Optimal;
  Vector charge;        ///< T entries: energy sent into the battery
  Vector discharge;     ///< T entries: energy drawn from the battery
  Vector soc;           ///< T+1 entries: state of charge before hour 1 .. after hour T
  Vector grid_buy;      ///< case IV: grid energy serving the demand directly
  Vector batt_to_load;  ///< case IV: battery energy serving the demand
  Vector grid_to_batt;  ///< case IV: grid energy charging the battery
  Scalar objective = 0.0;
};

/// Realized market quantities for perfect-foresight benchmarks and
/// after-the-fact evaluation of a plan.  Only the fields a case consumes need
/// to be populated: price always, residual_load/solar for case III, demand
/// for case IV.
struct RealizedInputs {
  Vector price;
  Vector residual_load;
  Vector solar;
  Vector demand;
};

/// Profit-maximizing storage program over hourly charge/discharge variables
/// with caller-supplied objective coefficients (one per variable, maximize
/// sense).  The state of charge is substituted out: its bounds, the terminal
/// requirement, and the net-exchange limits appear as inequality rows over
/// the flow variables.  Variables 0..T-1 are charge, T..2T-1 discharge.
LpProblem storage_lp(const Vector& charge_coef, const Vector& discharge_coef,
                     const BatteryParams& bat);

/// Cost-minimizing program serving a fixed hourly demand through direct grid
/// purchase, battery-to-load discharge, and grid-to-battery charge (minimize
/// sense).  Variables 0..T-1 are grid purchase, T..2T-1 battery-to-load,
/// 2T..3T-1 grid-to-battery; each hour enforces
/// grid + eta_d * batt_to_load = demand.
LpProblem fixed_load_lp(const Vector& grid_coef, const Vector& to_load_coef,
                        const Vector& to_batt_coef, const Vector& demand,
                        const BatteryParams& bat);

/// Case I: maximize sum_t (p_t * eta_d * discharge_t - p_t / eta_c * charge_t)
/// subject to the storage constraints.
Schedule plan_case1(const Vector& price_hat, const BatteryParams& bat);

/// Case II: case I objective minus lambda1 * sigma_t * discharge_t and
/// lambda2 * sigma_t * charge_t.
Schedule plan_case2(const Vector& price_hat, const Vector& sigma, Scalar lambda1,
                    Scalar lambda2, const BatteryParams& bat);

/// Case III: case I objective minus lambda * sigma_t * (charge_t + discharge_t)
/// minus mu * residual_hat_t * charge_t plus gamma * solar_hat_t * charge_t.
Schedule plan_case3(const Vector& price_hat, const Vector& sigma,
                    const Vector& residual_hat, const Vector& solar_hat,
                    Scalar lambda, Scalar mu, Scalar gamma,
                    const BatteryParams& bat);

/// Case IV: minimize sum_t (p_t * (grid_t + to_batt_t)
/// + lambda * sigma_t * (grid_t + to_batt_t + to_load_t)) subject to hourly
/// demand balance and the storage constraints.
Schedule plan_case4(const Vector& price_hat, const Vector& sigma,
                    const Vector& demand, Scalar lambda,
                    const BatteryParams& bat);

/// Benchmark plan computed from realized inputs with every uncertainty
/// penalty dropped: cases I and II share one arbitrage program on the
/// realized price, case III keeps the grid-support terms with realized
/// residual load and solar output, case IV minimizes realized purchase cost.
Schedule perfect_foresight(DispatchCase c, const RealizedInputs& real,
                           const StrategyParams& strat, const BatteryParams& bat);

/// Value of an executed plan under realized conditions: the perfect-foresight
/// objective of the matching case evaluated at the plan's decisions (profit
/// for cases I-III, cost for case IV).  Throws std::invalid_argument when the
/// schedule's case differs from `c` or the schedule is not optimal.
Scalar realized_value(DispatchCase c, const Schedule& plan,
                      const RealizedInputs& real, const StrategyParams& strat,
                      const BatteryParams& bat);

/// Returns an empty string when the schedule satisfies the state-of-charge
/// recursion, every bound of its case, and (case IV) the hourly demand
/// balance within `tol`; otherwise a description of the first violation.
/// `demand` must be supplied for case IV schedules.
std::string check_schedule(const Schedule& plan, const BatteryParams& bat,
                           const Vector* demand = nullptr, Scalar tol = 1e-7);

}  // namespace regimecast
