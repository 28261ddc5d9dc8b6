#pragma once

#include <vector>

#include "regimecast/cnp.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Regime-weighted Gaussian mixture over a day's hours, with the closed-form
/// aggregate mean and law-of-total-variance aggregate variance.  agg_mean and
/// agg_var are derived fields; aggregate() keeps them consistent with the
/// components.
struct MixtureForecast {
  Vector weights;   ///< K-simplex
  Matrix means;     ///< K x H component means
  Matrix variances; ///< K x H positive component variances
  Vector agg_mean;  ///< H
  Vector agg_var;   ///< H
};

/// Per-hour central prediction interval.
struct IntervalBand {
  Vector lower;
  Vector upper;
};

/// How interval() inverts the predictive distribution.
enum class IntervalMethod {
  ExactMixture,    ///< bisection on the exact mixture CDF
  GaussianApprox,  ///< N(agg_mean, agg_var) quantiles
};

/// Combines per-regime forecasts with simplex weights:
///   agg_mean_h = sum_k w_k mean_kh
///   agg_var_h  = sum_k w_k [ var_kh + (mean_kh - agg_mean_h)^2 ].
/// Throws std::invalid_argument when the weight count and forecast count
/// differ, the weights leave the simplex (1e-9), hour counts disagree, or a
/// variance is not positive.
MixtureForecast aggregate(const Vector& weights,
                          const std::vector<GaussianForecast>& forecasts);

/// Central interval containing probability `coverage` under the predictive
/// distribution, per hour.  The exact method bisects the mixture CDF
/// F(x) = sum_k w_k Phi((x - mean_k)/sigma_k) to an x-tolerance of 1e-8.
IntervalBand interval(const MixtureForecast& mix, Scalar coverage,
                      IntervalMethod method = IntervalMethod::ExactMixture);

/// Mixture CDF at x for one hour (column h of the component parameters).
Scalar mixture_cdf(const MixtureForecast& mix, Index hour, Scalar x);

}  // namespace regimecast
