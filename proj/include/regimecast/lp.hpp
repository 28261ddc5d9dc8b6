#pragma once

#include <string>

#include "regimecast/types.hpp"

namespace regimecast {

enum class LpSense { Minimize, Maximize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

/// Dense linear program:
///   optimize  c' x   subject to
///   ineq_lhs x <= ineq_rhs,  eq_lhs x == eq_rhs,  lower <= x <= upper.
/// Bounds may be +-infinity.
struct LpProblem {
  LpSense sense = LpSense::Minimize;
  Vector objective;
  Matrix ineq_lhs;
  Vector ineq_rhs;
  Matrix eq_lhs;
  Vector eq_rhs;
  Vector lower;
  Vector upper;

  Index num_vars() const { return objective.size(); }
  Index num_ineq() const { return ineq_lhs.rows(); }
  Index num_eq() const { return eq_lhs.rows(); }
  void validate() const;

  /// Convenience constructors for an empty problem over n variables with
  /// bounds [0, +inf).
  static LpProblem with_vars(Index n, LpSense sense);
  void add_inequality(const Vector& row, Scalar rhs);
  void add_equality(const Vector& row, Scalar rhs);
};

/// Solver output. Dual values refer to the internal minimization form
/// (maximization problems are solved as min of the negated objective).
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  Scalar objective = 0.0;
  Vector duals_ineq;
  Vector duals_eq;
  int iterations = 0;
};

/// Two-phase primal simplex on a dense tableau with Bland's anti-cycling
/// rule; pivot tolerance 1e-9.
LpSolution solve_lp(const LpProblem& problem);

/// Check primal feasibility, stationarity, dual sign and complementary
/// slackness of a claimed optimal solution. Returns an empty string when the
/// certificate holds, otherwise a description of the first violation.
std::string verify_kkt(const LpProblem& problem, const LpSolution& solution,
                       Scalar tol = 1e-7);

/// Brute-force reference for small instances: eliminate equalities through a
/// null-space parameterization, enumerate all basic candidate points of the
/// reduced inequality system, and return the best feasible one. Intended for
/// problems whose reduced dimension is at most ~7.
LpSolution enumerate_vertices(const LpProblem& problem, Scalar feas_tol = 1e-7);

}  // namespace regimecast
