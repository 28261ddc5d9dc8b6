#include "regimecast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "regimecast/stats.hpp"

namespace regimecast {

using stats::chi_square_sf;
using stats::norm_cdf;
using stats::norm_pdf;
using stats::studentized_range_cdf;

namespace {

// Denominator guard shared by MAPE and SMAPE, in price units.
constexpr Scalar kScaleGuard = 1.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Within-block ranks (1-based), ties replaced by the average of the tied
// positions.  Smaller values receive smaller ranks.
Vector average_ranks(const Vector& row) {
  const Index k = row.size();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return row[a] < row[b]; });
  Vector ranks(k);
  Index i = 0;
  while (i < k) {
    Index j = i;
    while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
    const Scalar shared = 0.5 * Scalar(i + j) + 1.0;
    for (Index u = i; u <= j; ++u) ranks[order[u]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

ErrorReport point_errors(const Vector& y, const Vector& y_hat) {
  require(y.size() > 0, "point_errors needs at least one observation");
  require(y.size() == y_hat.size(), "point_errors length mismatch");
  const auto err = (y - y_hat).array();
  const Scalar n = Scalar(y.size());

  ErrorReport r;
  r.mae = err.abs().mean();
  r.rmse = std::sqrt(err.square().mean());
  r.mape = 100.0 * (err.abs() / y.array().abs().max(kScaleGuard)).mean();
  r.smape = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    r.smape += 2.0 * std::abs(err[i]) /
               (std::abs(y[i]) + std::abs(y_hat[i]) + kScaleGuard);
  }
  r.smape /= n;
  return r;
}

IntervalReport interval_scores(const Vector& y, const Vector& lower,
                               const Vector& upper) {
  require(y.size() > 0, "interval_scores needs at least one observation");
  require(y.size() == lower.size() && y.size() == upper.size(),
          "interval_scores length mismatch");
  require((lower.array() <= upper.array()).all(),
          "interval bounds are crossed");

  IntervalReport r;
  Index inside = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] >= lower[i] && y[i] <= upper[i]) ++inside;
  }
  r.picp = Scalar(inside) / Scalar(y.size());
  r.mpiw = (upper - lower).mean();
  return r;
}

Scalar crps_gaussian(Scalar mu, Scalar sigma, Scalar y) {
  require(sigma > 0.0, "crps_gaussian requires sigma > 0");
  const Scalar z = (y - mu) / sigma;
  return sigma * (z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * norm_pdf(z) -
                  1.0 / std::sqrt(M_PI));
}

Scalar crps_mixture(const Vector& weights, const Vector& means,
                    const Vector& variances, Scalar y, int n_samples,
                    RandomSource& rng) {
  const Index k = weights.size();
  require(k > 0, "crps_mixture needs at least one component");
  require(means.size() == k && variances.size() == k,
          "crps_mixture component size mismatch");
  require(weights.minCoeff() >= 0.0, "mixture weights must be nonnegative");
  require(std::abs(weights.sum() - 1.0) < 1e-8,
          "mixture weights must sum to one");
  require(variances.minCoeff() >= 0.0, "variances must be nonnegative");
  require(n_samples >= 1, "n_samples must be positive");

  auto draw = [&]() {
    const Index c = rng.categorical(weights);
    return means[c] + std::sqrt(variances[c]) * rng.normal();
  };
  Scalar abs_to_y = 0.0;
  Scalar abs_pair = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Scalar x = draw();
    const Scalar x2 = draw();
    abs_to_y += std::abs(x - y);
    abs_pair += std::abs(x - x2);
  }
  return abs_to_y / Scalar(n_samples) - 0.5 * abs_pair / Scalar(n_samples);
}

TestResult dm_test(const Vector& e1, const Vector& e2, int h, DmLoss loss) {
  const Index n = e1.size();
  require(n > 10, "dm_test requires more than 10 observations");
  require(e2.size() == n, "dm_test length mismatch");
  require(h >= 1, "forecast horizon must be at least 1");

  Vector d(n);
  if (loss == DmLoss::SquaredError) {
    d = e1.array().square() - e2.array().square();
  } else {
    d = e1.array().abs() - e2.array().abs();
  }
  const Scalar mean = d.mean();
  const Vector c = d.array() - mean;

  // Newey-West long-run variance with Bartlett weights over h-1 lags and
  // 1/n-normalized autocovariances.
  Scalar lrv = c.squaredNorm() / Scalar(n);
  for (int lag = 1; lag < h && lag < n; ++lag) {
    const Scalar weight = 1.0 - Scalar(lag) / Scalar(h);
    const Scalar gamma =
        (c.tail(n - lag).array() * c.head(n - lag).array()).sum() / Scalar(n);
    lrv += 2.0 * weight * gamma;
  }

  TestResult r;
  if (!(lrv > 0.0) || lrv < 1e-300) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.degenerate = true;
    return r;
  }
  r.statistic = mean / std::sqrt(lrv / Scalar(n));
  r.p_value = 2.0 * (1.0 - norm_cdf(std::abs(r.statistic)));
  return r;
}

FriedmanNemenyi friedman_nemenyi(const Matrix& values, bool minimize) {
  const Index b = values.rows();
  const Index k = values.cols();
  require(b >= 2, "friedman_nemenyi requires at least two blocks");
  require(k >= 2, "friedman_nemenyi requires at least two treatments");

  Vector mean_ranks = Vector::Zero(k);
  for (Index i = 0; i < b; ++i) {
    Vector row = values.row(i);
    if (!minimize) row = -row;
    mean_ranks += average_ranks(row);
  }
  mean_ranks /= Scalar(b);

  FriedmanNemenyi out;
  out.mean_ranks = mean_ranks;

  const Scalar center = Scalar(k + 1) / 2.0;
  const Scalar chi2 = 12.0 * Scalar(b) / (Scalar(k) * Scalar(k + 1)) *
                      (mean_ranks.array() - center).square().sum();
  out.friedman.statistic = chi2;
  out.friedman.p_value = chi_square_sf(chi2, Scalar(k - 1));

  const Scalar denom = std::sqrt(Scalar(k) * Scalar(k + 1) / (6.0 * Scalar(b)));
  out.nemenyi_p = Matrix::Ones(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      const Scalar q = std::abs(mean_ranks[i] - mean_ranks[j]) / denom;
      const Scalar p =
          std::clamp(1.0 - studentized_range_cdf(q * std::sqrt(2.0), int(k)),
                     0.0, 1.0);
      out.nemenyi_p(i, j) = p;
      out.nemenyi_p(j, i) = p;
    }
  }
  return out;
}

}  // namespace regimecast
