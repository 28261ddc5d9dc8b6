#pragma once

#include "regimecast/rng.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Point-forecast error summary.  mape is a percentage; smape is a fraction
/// in [0, 2].  Both use a 1.0 guard in the denominator so that near-zero and
/// negative prices stay well defined.
struct ErrorReport {
  Scalar mae = 0.0;
  Scalar rmse = 0.0;
  Scalar mape = 0.0;
  Scalar smape = 0.0;
};

/// Prediction-interval summary: empirical coverage and mean width.
struct IntervalReport {
  Scalar picp = 0.0;
  Scalar mpiw = 0.0;
};

/// Statistic plus two-sided p-value.  `degenerate` marks results produced by
/// a fallback path (for example a zero-variance loss differential) rather
/// than the regular sampling distribution.
struct TestResult {
  Scalar statistic = 0.0;
  Scalar p_value = 1.0;
  bool degenerate = false;
};

/// Loss underlying the forecast-comparison test.
enum class DmLoss { SquaredError, AbsoluteError };

/// Friedman omnibus result plus pairwise studentized-range p-values.
/// mean_ranks holds the treatment's average within-block rank (1 = best);
/// nemenyi_p is symmetric with unit diagonal.
struct FriedmanNemenyi {
  TestResult friedman;
  Vector mean_ranks;
  Matrix nemenyi_p;
};

/// MAE, RMSE, MAPE (percent, scale guard 1.0), and SMAPE (fraction, same
/// guard) of y_hat against y.  Throws std::invalid_argument on empty or
/// mismatched inputs.
ErrorReport point_errors(const Vector& y, const Vector& y_hat);

/// Coverage fraction and mean width of [lower, upper] against y.  Throws on
/// mismatched sizes or crossed bounds.
IntervalReport interval_scores(const Vector& y, const Vector& lower,
                               const Vector& upper);

/// Continuous ranked probability score of a Gaussian forecast, closed form
/// sigma * (z * (2 * Phi(z) - 1) + 2 * phi(z) - 1 / sqrt(pi)).  Requires
/// sigma > 0.
Scalar crps_gaussian(Scalar mu, Scalar sigma, Scalar y);

/// CRPS of a Gaussian mixture via the pair estimator
/// mean|X - y| - mean|X - X'| / 2 over n_samples seeded draws.  `weights`
/// must be a probability vector; `variances` are componentwise and may be 0.
Scalar crps_mixture(const Vector& weights, const Vector& means,
                    const Vector& variances, Scalar y, int n_samples,
                    RandomSource& rng);

/// Equal-accuracy test between two forecast error series.  The loss
/// differential (squared by default) is tested with a Newey-West long-run
/// variance using h-1 Bartlett-weighted lags; the statistic is compared
/// against the standard normal, two sided.  A zero-variance differential
/// yields statistic 0, p 1, degenerate=true.  Requires n > 10 and h >= 1.
TestResult dm_test(const Vector& e1, const Vector& e2, int h = 24,
                   DmLoss loss = DmLoss::SquaredError);

/// Friedman rank test across b blocks (rows) of k treatments (columns) with
/// average ranks on ties, followed by pairwise Nemenyi p-values from the
/// studentized-range distribution.  `minimize` selects whether smaller or
/// larger values rank better; the statistics themselves are invariant to the
/// direction.  Requires b >= 2 and k >= 2.
FriedmanNemenyi friedman_nemenyi(const Matrix& values, bool minimize = true);

}  // namespace regimecast
