#include "regimecast/topsis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace regimecast {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

constexpr Scalar kSimplexTol = 1e-8;

}  // namespace

Direction direction_from_string(std::string_view text) {
  if (text == "minimize" || text == "min") return Direction::Minimize;
  if (text == "maximize" || text == "max") return Direction::Maximize;
  throw std::invalid_argument("direction must be minimize or maximize, got '" +
                              std::string(text) + "'");
}

std::string direction_name(Direction d) {
  return d == Direction::Minimize ? "minimize" : "maximize";
}

void DecisionMatrix::validate() const {
  const Index m = values.rows();
  const Index n = values.cols();
  require(m >= 1 && n >= 1, "decision matrix must be at least 1x1");
  require(static_cast<Index>(alternatives.size()) == m,
          "alternative names must match the number of rows");
  require(static_cast<Index>(criteria.size()) == n,
          "criterion names must match the number of columns");
  require(static_cast<Index>(directions.size()) == n,
          "directions must match the number of columns");
  require(weights.size() == n, "weights must match the number of columns");
  require(values.allFinite(), "decision matrix values must be finite");
  for (Index j = 0; j < n; ++j) {
    require(values.col(j).norm() > 0.0,
            "decision matrix has an all-zero column");
    require(weights[j] > 0.0, "criterion weights must be positive");
  }
  require(std::abs(weights.sum() - 1.0) <= kSimplexTol,
          "criterion weights must sum to 1");
}

TopsisResult rank(const DecisionMatrix& dm) {
  dm.validate();
  const Index m = dm.values.rows();
  const Index n = dm.values.cols();

  // Weighted normalized matrix: v_ij = w_j * x_ij / ||x_.j||.
  Matrix v(m, n);
  for (Index j = 0; j < n; ++j) {
    v.col(j) = dm.weights[j] / dm.values.col(j).norm() * dm.values.col(j);
  }

  // Ideal / anti-ideal points, honoring each column's direction.
  Vector ideal(n);
  Vector anti(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar lo = v.col(j).minCoeff();
    const Scalar hi = v.col(j).maxCoeff();
    const bool smaller_better = dm.directions[j] == Direction::Minimize;
    ideal[j] = smaller_better ? lo : hi;
    anti[j] = smaller_better ? hi : lo;
  }

  TopsisResult out;
  out.closeness.resize(m);
  for (Index i = 0; i < m; ++i) {
    const Scalar s_plus = (v.row(i).transpose() - ideal).norm();
    const Scalar s_minus = (v.row(i).transpose() - anti).norm();
    const Scalar total = s_plus + s_minus;
    out.closeness[i] = total == 0.0 ? 0.5 : s_minus / total;
  }

  out.order.resize(static_cast<std::size_t>(m));
  std::iota(out.order.begin(), out.order.end(), Index{0});
  std::sort(out.order.begin(), out.order.end(), [&](Index a, Index b) {
    if (out.closeness[a] != out.closeness[b]) {
      return out.closeness[a] > out.closeness[b];
    }
    return dm.alternatives[static_cast<std::size_t>(a)] <
           dm.alternatives[static_cast<std::size_t>(b)];
  });
  return out;
}

}  // namespace regimecast
