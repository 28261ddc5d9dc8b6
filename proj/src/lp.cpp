#include "regimecast/lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace regimecast {

namespace {

constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();
constexpr Scalar kPivotTol = 1e-9;

/// How one original variable maps into nonnegative standard-form variables.
struct VarMap {
  enum Kind { Shifted, Mirrored, Split } kind = Shifted;
  Index col = 0;       // first standard-form column
  Scalar offset = 0.0; // x = offset + x~ (Shifted), x = offset - x~ (Mirrored)
};

struct StandardForm {
  Matrix a;            // m x n_all, includes slack and artificial columns
  Vector b;            // m, nonnegative
  Vector cost;         // phase-2 cost over all columns
  std::vector<VarMap> vars;
  Index n_structural = 0;  // structural (transformed) variable count
  Index n_slack = 0;
  Index n_art = 0;
  std::vector<Index> row_origin;   // index into original rows; see kinds below
  std::vector<int> row_kind;       // 0 = ineq, 1 = upper bound, 2 = eq
  std::vector<Scalar> row_sign;    // +-1 applied while making b nonnegative
  std::vector<Index> basis;        // basic column per row
};

StandardForm standardize(const LpProblem& p, const Vector& cmin) {
  StandardForm sf;
  const Index n = p.num_vars();

  // Variable transforms to x~ >= 0.
  Index cols = 0;
  sf.vars.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    const Scalar l = p.lower[j], u = p.upper[j];
    if (std::isfinite(l)) {
      vm.kind = VarMap::Shifted;
      vm.offset = l;
      vm.col = cols++;
    } else if (std::isfinite(u)) {
      vm.kind = VarMap::Mirrored;
      vm.offset = u;
      vm.col = cols++;
    } else {
      vm.kind = VarMap::Split;
      vm.col = cols;
      cols += 2;
    }
  }
  sf.n_structural = cols;

  // Row list: inequalities, finite upper bounds of shifted vars (and lower
  // bounds of mirrored vars), then equalities.
  struct Row {
    Vector coef;  // over structural columns
    Scalar rhs;
    int kind;
    Index origin;
  };
  std::vector<Row> rows;
  auto transform_row = [&](const Vector& row, Scalar rhs) {
    Vector coef = Vector::Zero(sf.n_structural);
    Scalar r = rhs;
    for (Index j = 0; j < n; ++j) {
      const Scalar a = row[j];
      if (a == 0.0) continue;
      const VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
      switch (vm.kind) {
        case VarMap::Shifted:
          coef[vm.col] += a;
          r -= a * vm.offset;
          break;
        case VarMap::Mirrored:
          coef[vm.col] -= a;
          r -= a * vm.offset;
          break;
        case VarMap::Split:
          coef[vm.col] += a;
          coef[vm.col + 1] -= a;
          break;
      }
    }
    return std::pair<Vector, Scalar>(coef, r);
  };

  for (Index i = 0; i < p.num_ineq(); ++i) {
    auto [coef, r] = transform_row(p.ineq_lhs.row(i).transpose(), p.ineq_rhs[i]);
    rows.push_back({coef, r, 0, i});
  }
  for (Index j = 0; j < n; ++j) {
    const VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    const Scalar l = p.lower[j], u = p.upper[j];
    if (vm.kind == VarMap::Shifted && std::isfinite(u)) {
      Vector coef = Vector::Zero(sf.n_structural);
      coef[vm.col] = 1.0;
      rows.push_back({coef, u - l, 1, j});
    } else if (vm.kind == VarMap::Mirrored && std::isfinite(l)) {
      Vector coef = Vector::Zero(sf.n_structural);
      coef[vm.col] = 1.0;
      rows.push_back({coef, u - l, 1, j});
    }
  }
  const Index first_eq_row = static_cast<Index>(rows.size());
  for (Index i = 0; i < p.num_eq(); ++i) {
    auto [coef, r] = transform_row(p.eq_lhs.row(i).transpose(), p.eq_rhs[i]);
    rows.push_back({coef, r, 2, i});
  }

  const auto m = static_cast<Index>(rows.size());
  sf.n_slack = first_eq_row;  // one slack per inequality-type row
  // Artificial columns are appended lazily below.
  std::vector<Index> art_rows;
  for (Index i = 0; i < m; ++i) {
    const bool negate = rows[static_cast<std::size_t>(i)].rhs < 0.0;
    sf.row_sign.push_back(negate ? -1.0 : 1.0);
    if (negate) {
      rows[static_cast<std::size_t>(i)].coef = -rows[static_cast<std::size_t>(i)].coef;
      rows[static_cast<std::size_t>(i)].rhs = -rows[static_cast<std::size_t>(i)].rhs;
    }
    const bool ineq = rows[static_cast<std::size_t>(i)].kind != 2;
    const bool slack_usable = ineq && !negate;
    if (!slack_usable) art_rows.push_back(i);
  }
  sf.n_art = static_cast<Index>(art_rows.size());

  const Index n_all = sf.n_structural + sf.n_slack + sf.n_art;
  sf.a = Matrix::Zero(m, n_all);
  sf.b.resize(m);
  sf.basis.assign(static_cast<std::size_t>(m), -1);
  for (Index i = 0; i < m; ++i) {
    const Row& row = rows[static_cast<std::size_t>(i)];
    sf.a.row(i).head(sf.n_structural) = row.coef.transpose();
    sf.b[i] = row.rhs;
    sf.row_kind.push_back(row.kind);
    sf.row_origin.push_back(row.origin);
    if (row.kind != 2) {
      const Scalar slack_coef = sf.row_sign[static_cast<std::size_t>(i)];
      sf.a(i, sf.n_structural + i) = slack_coef;
      if (slack_coef > 0.0) sf.basis[static_cast<std::size_t>(i)] = sf.n_structural + i;
    }
  }
  for (Index k = 0; k < sf.n_art; ++k) {
    const Index i = art_rows[static_cast<std::size_t>(k)];
    const Index col = sf.n_structural + sf.n_slack + k;
    sf.a(i, col) = 1.0;
    sf.basis[static_cast<std::size_t>(i)] = col;
  }

  // Phase-2 costs over structural columns.
  sf.cost = Vector::Zero(n_all);
  for (Index j = 0; j < n; ++j) {
    const VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    switch (vm.kind) {
      case VarMap::Shifted:
        sf.cost[vm.col] += cmin[j];
        break;
      case VarMap::Mirrored:
        sf.cost[vm.col] -= cmin[j];
        break;
      case VarMap::Split:
        sf.cost[vm.col] += cmin[j];
        sf.cost[vm.col + 1] -= cmin[j];
        break;
    }
  }
  return sf;
}

/// One simplex phase on the tableau (a, b) with the given costs; Bland's
/// rule for both entering and leaving choices. `allowed` masks columns that
/// may enter. Returns false when unbounded.
bool run_phase(Matrix& a, Vector& b, std::vector<Index>& basis,
               const Vector& cost, const std::vector<bool>& allowed,
               int& iterations) {
  const Index m = a.rows();
  const Index n = a.cols();
  // Reduced costs for the current basis.
  Vector cbar = cost;
  for (Index i = 0; i < m; ++i) {
    const Scalar cb = cost[basis[static_cast<std::size_t>(i)]];
    if (cb != 0.0) cbar -= cb * a.row(i).transpose();
  }
  for (;;) {
    // Bland: smallest-index allowed column with negative reduced cost.
    Index enter = -1;
    for (Index j = 0; j < n; ++j) {
      if (!allowed[static_cast<std::size_t>(j)]) continue;
      if (cbar[j] < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;  // optimal for this phase

    Index leave = -1;
    Scalar best_ratio = kInf;
    for (Index i = 0; i < m; ++i) {
      const Scalar aie = a(i, enter);
      if (aie <= kPivotTol) continue;
      const Scalar ratio = std::max(b[i], 0.0) / aie;
      const bool take =
          leave < 0 || ratio < best_ratio - 1e-12 ||
          (ratio <= best_ratio + 1e-12 &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]);
      if (take) {
        best_ratio = std::min(best_ratio, ratio);
        leave = i;
      }
    }
    if (leave < 0) return false;  // unbounded direction

    // Pivot (leave, enter).
    ++iterations;
    const Scalar pivot = a(leave, enter);
    a.row(leave) /= pivot;
    b[leave] /= pivot;
    for (Index i = 0; i < m; ++i) {
      if (i == leave) continue;
      const Scalar f = a(i, enter);
      if (f != 0.0) {
        a.row(i) -= f * a.row(leave);
        b[i] -= f * b[leave];
        if (std::abs(b[i]) < 1e-13) b[i] = 0.0;
      }
    }
    const Scalar fc = cbar[enter];
    cbar -= fc * a.row(leave).transpose();
    cbar[enter] = 0.0;
    basis[static_cast<std::size_t>(leave)] = enter;
  }
}

}  // namespace

void LpProblem::validate() const {
  const Index n = num_vars();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("lp: bounds must match variable count");
  if (ineq_lhs.rows() != ineq_rhs.size() ||
      (ineq_lhs.rows() > 0 && ineq_lhs.cols() != n))
    throw std::invalid_argument("lp: inequality shape mismatch");
  if (eq_lhs.rows() != eq_rhs.size() || (eq_lhs.rows() > 0 && eq_lhs.cols() != n))
    throw std::invalid_argument("lp: equality shape mismatch");
  if (!objective.allFinite())
    throw std::invalid_argument("lp: objective must be finite");
  if ((ineq_lhs.size() > 0 && !ineq_lhs.allFinite()) ||
      (ineq_rhs.size() > 0 && !ineq_rhs.allFinite()) ||
      (eq_lhs.size() > 0 && !eq_lhs.allFinite()) ||
      (eq_rhs.size() > 0 && !eq_rhs.allFinite()))
    throw std::invalid_argument("lp: constraints must be finite");
  for (Index j = 0; j < n; ++j)
    if (lower[j] > upper[j])
      throw std::invalid_argument("lp: lower bound exceeds upper bound");
}

LpProblem LpProblem::with_vars(Index n, LpSense sense_) {
  LpProblem p;
  p.sense = sense_;
  p.objective = Vector::Zero(n);
  p.ineq_lhs.resize(0, n);
  p.ineq_rhs.resize(0);
  p.eq_lhs.resize(0, n);
  p.eq_rhs.resize(0);
  p.lower = Vector::Zero(n);
  p.upper = Vector::Constant(n, kInf);
  return p;
}

void LpProblem::add_inequality(const Vector& row, Scalar rhs) {
  ineq_lhs.conservativeResize(ineq_lhs.rows() + 1, num_vars());
  ineq_lhs.row(ineq_lhs.rows() - 1) = row.transpose();
  ineq_rhs.conservativeResize(ineq_rhs.size() + 1);
  ineq_rhs[ineq_rhs.size() - 1] = rhs;
}

void LpProblem::add_equality(const Vector& row, Scalar rhs) {
  eq_lhs.conservativeResize(eq_lhs.rows() + 1, num_vars());
  eq_lhs.row(eq_lhs.rows() - 1) = row.transpose();
  eq_rhs.conservativeResize(eq_rhs.size() + 1);
  eq_rhs[eq_rhs.size() - 1] = rhs;
}

LpSolution solve_lp(const LpProblem& problem) {
  problem.validate();
  const Index n = problem.num_vars();
  const Vector cmin =
      problem.sense == LpSense::Maximize ? (-problem.objective).eval() : problem.objective;

  StandardForm sf = standardize(problem, cmin);
  const Matrix a0 = sf.a;  // pre-pivot copy for dual recovery
  const Index m = sf.a.rows();
  const Index n_all = sf.a.cols();

  LpSolution sol;
  sol.iterations = 0;

  // Phase 1: minimize the sum of artificials.
  if (sf.n_art > 0) {
    Vector phase1 = Vector::Zero(n_all);
    phase1.tail(sf.n_art).setOnes();
    std::vector<bool> allowed(static_cast<std::size_t>(n_all), true);
    if (!run_phase(sf.a, sf.b, sf.basis, phase1, allowed, sol.iterations))
      throw std::logic_error("lp: phase 1 cannot be unbounded");
    Scalar infeas = 0.0;
    for (Index i = 0; i < m; ++i)
      if (sf.basis[static_cast<std::size_t>(i)] >= n_all - sf.n_art)
        infeas += sf.b[i];
    if (infeas > 1e-7) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // Drive remaining zero-level artificials out where possible.
    for (Index i = 0; i < m; ++i) {
      if (sf.basis[static_cast<std::size_t>(i)] < n_all - sf.n_art) continue;
      for (Index j = 0; j < n_all - sf.n_art; ++j) {
        if (std::abs(sf.a(i, j)) > 1e-7) {
          const Scalar pivot = sf.a(i, j);
          sf.a.row(i) /= pivot;
          sf.b[i] /= pivot;
          for (Index r = 0; r < m; ++r) {
            if (r == i) continue;
            const Scalar f = sf.a(r, j);
            if (f != 0.0) {
              sf.a.row(r) -= f * sf.a.row(i);
              sf.b[r] -= f * sf.b[i];
            }
          }
          sf.basis[static_cast<std::size_t>(i)] = j;
          break;
        }
      }
    }
  }

  // Phase 2.
  {
    std::vector<bool> allowed(static_cast<std::size_t>(n_all), true);
    for (Index j = n_all - sf.n_art; j < n_all; ++j)
      allowed[static_cast<std::size_t>(j)] = false;
    if (!run_phase(sf.a, sf.b, sf.basis, sf.cost, allowed, sol.iterations)) {
      sol.status = LpStatus::Unbounded;
      return sol;
    }
  }

  // Recover the primal point.
  Vector xt = Vector::Zero(n_all);
  for (Index i = 0; i < m; ++i) xt[sf.basis[static_cast<std::size_t>(i)]] = sf.b[i];
  sol.x.resize(n);
  for (Index j = 0; j < n; ++j) {
    const VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    switch (vm.kind) {
      case VarMap::Shifted:
        sol.x[j] = vm.offset + xt[vm.col];
        break;
      case VarMap::Mirrored:
        sol.x[j] = vm.offset - xt[vm.col];
        break;
      case VarMap::Split:
        sol.x[j] = xt[vm.col] - xt[vm.col + 1];
        break;
    }
  }
  sol.objective = problem.objective.dot(sol.x);
  sol.status = LpStatus::Optimal;

  // Dual recovery: solve A_B' y = c_B on the original standardized columns.
  Matrix ab(m, m);
  Vector cb(m);
  for (Index i = 0; i < m; ++i) {
    ab.col(i) = a0.col(sf.basis[static_cast<std::size_t>(i)]);
    cb[i] = sf.cost[sf.basis[static_cast<std::size_t>(i)]];
  }
  const Vector y = ab.transpose().fullPivLu().solve(cb);
  // Stationarity uses mu = -sign * y for inequality rows, lambda likewise.
  sol.duals_ineq = Vector::Zero(problem.num_ineq());
  sol.duals_eq = Vector::Zero(problem.num_eq());
  for (Index i = 0; i < m; ++i) {
    const Scalar mult = -sf.row_sign[static_cast<std::size_t>(i)] * y[i];
    if (sf.row_kind[static_cast<std::size_t>(i)] == 0)
      sol.duals_ineq[sf.row_origin[static_cast<std::size_t>(i)]] = mult;
    else if (sf.row_kind[static_cast<std::size_t>(i)] == 2)
      sol.duals_eq[sf.row_origin[static_cast<std::size_t>(i)]] = mult;
  }
  return sol;
}

std::string verify_kkt(const LpProblem& problem, const LpSolution& solution,
                       Scalar tol) {
  if (solution.status != LpStatus::Optimal) return "solution is not optimal";
  const Index n = problem.num_vars();
  const Vector& x = solution.x;
  if (x.size() != n) return "solution size mismatch";

  for (Index j = 0; j < n; ++j) {
    if (x[j] < problem.lower[j] - tol) return "lower bound violated";
    if (x[j] > problem.upper[j] + tol) return "upper bound violated";
  }
  Vector slack;
  if (problem.num_ineq() > 0) {
    slack = problem.ineq_rhs - problem.ineq_lhs * x;
    if (slack.minCoeff() < -tol) return "inequality violated";
  }
  if (problem.num_eq() > 0) {
    const Vector resid = problem.eq_lhs * x - problem.eq_rhs;
    if (resid.cwiseAbs().maxCoeff() > tol) return "equality violated";
  }

  const Vector cmin =
      problem.sense == LpSense::Maximize ? (-problem.objective).eval() : problem.objective;
  Vector r = cmin;
  for (Index i = 0; i < problem.num_ineq(); ++i) {
    const Scalar mu = solution.duals_ineq[i];
    if (mu < -tol) return "negative inequality multiplier";
    if (mu > tol && slack[i] > 1e-5) return "complementary slackness violated";
    r += mu * problem.ineq_lhs.row(i).transpose();
  }
  for (Index i = 0; i < problem.num_eq(); ++i)
    r += solution.duals_eq[i] * problem.eq_lhs.row(i).transpose();

  for (Index j = 0; j < n; ++j) {
    const bool at_lower = x[j] <= problem.lower[j] + 1e-6;
    const bool at_upper = x[j] >= problem.upper[j] - 1e-6;
    if (at_lower && r[j] < -tol && !at_upper) return "reduced cost negative at lower bound";
    if (at_upper && r[j] > tol && !at_lower) return "reduced cost positive at upper bound";
    if (!at_lower && !at_upper && std::abs(r[j]) > tol)
      return "stationarity violated at interior variable";
  }
  return {};
}

LpSolution enumerate_vertices(const LpProblem& problem, Scalar feas_tol) {
  problem.validate();
  const Index n = problem.num_vars();

  // Gather equality rows (explicit plus pinned variables).
  std::vector<std::pair<Vector, Scalar>> eqs;
  for (Index i = 0; i < problem.num_eq(); ++i)
    eqs.emplace_back(problem.eq_lhs.row(i).transpose(), problem.eq_rhs[i]);
  for (Index j = 0; j < n; ++j) {
    if (problem.lower[j] == problem.upper[j]) {
      Vector e = Vector::Zero(n);
      e[j] = 1.0;
      eqs.emplace_back(e, problem.lower[j]);
    }
  }
  // Gather inequality rows (explicit plus finite, non-pinned bounds).
  std::vector<std::pair<Vector, Scalar>> ineqs;
  for (Index i = 0; i < problem.num_ineq(); ++i)
    ineqs.emplace_back(problem.ineq_lhs.row(i).transpose(), problem.ineq_rhs[i]);
  for (Index j = 0; j < n; ++j) {
    if (problem.lower[j] == problem.upper[j]) continue;
    if (std::isfinite(problem.lower[j])) {
      Vector e = Vector::Zero(n);
      e[j] = -1.0;
      ineqs.emplace_back(e, -problem.lower[j]);
    }
    if (std::isfinite(problem.upper[j])) {
      Vector e = Vector::Zero(n);
      e[j] = 1.0;
      ineqs.emplace_back(e, problem.upper[j]);
    }
  }

  LpSolution best;
  best.status = LpStatus::Infeasible;
  const bool maximize = problem.sense == LpSense::Maximize;

  Vector x0 = Vector::Zero(n);
  Matrix kernel = Matrix::Identity(n, n);
  if (!eqs.empty()) {
    Matrix e(static_cast<Index>(eqs.size()), n);
    Vector f(static_cast<Index>(eqs.size()));
    for (Index i = 0; i < e.rows(); ++i) {
      e.row(i) = eqs[static_cast<std::size_t>(i)].first.transpose();
      f[i] = eqs[static_cast<std::size_t>(i)].second;
    }
    x0 = e.colPivHouseholderQr().solve(f);
    if ((e * x0 - f).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + f.cwiseAbs().maxCoeff()))
      return best;  // inconsistent equalities
    Eigen::FullPivLU<Matrix> lu(e);
    lu.setThreshold(1e-10);
    kernel = lu.kernel();
    if (lu.rank() == n) kernel.resize(n, 0);
  }
  const Index k = kernel.cols();

  const auto mrows = static_cast<Index>(ineqs.size());
  Matrix g(mrows, n);
  Vector h(mrows);
  for (Index i = 0; i < mrows; ++i) {
    g.row(i) = ineqs[static_cast<std::size_t>(i)].first.transpose();
    h[i] = ineqs[static_cast<std::size_t>(i)].second;
  }
  const Matrix gr = g * kernel;          // reduced inequality system
  const Vector hr = h - g * x0;

  auto consider = [&](const Vector& y) {
    if (k > 0 && (gr * y - hr).maxCoeff() > feas_tol) return;
    if (k == 0 && mrows > 0 && (g * x0 - h).maxCoeff() > feas_tol) return;
    const Vector x = x0 + kernel * y;
    const Scalar obj = problem.objective.dot(x);
    const bool better = best.status != LpStatus::Optimal ||
                        (maximize ? obj > best.objective : obj < best.objective);
    if (better) {
      best.status = LpStatus::Optimal;
      best.x = x;
      best.objective = obj;
    }
  };

  if (k == 0) {
    consider(Vector::Zero(0));
    return best;
  }
  if (mrows < k) throw std::invalid_argument("enumerate_vertices: unbounded polytope");

  // Guard against combinatorial blow-up.
  double combos = 1.0;
  for (Index i = 0; i < k; ++i) combos *= static_cast<double>(mrows - i) / (i + 1);
  if (combos > 6e6)
    throw std::invalid_argument("enumerate_vertices: instance too large");

  std::vector<Index> pick(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  Matrix sub(k, k);
  Vector rhs(k);
  for (;;) {
    for (Index i = 0; i < k; ++i) {
      sub.row(i) = gr.row(pick[static_cast<std::size_t>(i)]);
      rhs[i] = hr[pick[static_cast<std::size_t>(i)]];
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    lu.setThreshold(1e-10);
    if (lu.rank() == k) consider(lu.solve(rhs));

    // Next combination of k indices from [0, mrows).
    Index pos = k - 1;
    while (pos >= 0 &&
           pick[static_cast<std::size_t>(pos)] == mrows - k + pos)
      --pos;
    if (pos < 0) break;
    ++pick[static_cast<std::size_t>(pos)];
    for (Index i = pos + 1; i < k; ++i)
      pick[static_cast<std::size_t>(i)] = pick[static_cast<std::size_t>(i - 1)] + 1;
  }
  return best;
}

}  // namespace regimecast
