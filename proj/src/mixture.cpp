#include "regimecast/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "regimecast/stats.hpp"

namespace regimecast {

namespace {

constexpr Scalar kSimplexTol = 1e-9;
constexpr Scalar kBisectTol = 1e-8;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Quantile of the mixture in one hour by bracketed bisection.
Scalar mixture_quantile(const MixtureForecast& mix, Index hour, Scalar q) {
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < mix.weights.size(); ++k) {
    const Scalar sigma = std::sqrt(mix.variances(k, hour));
    lo = std::min(lo, mix.means(k, hour) - 12.0 * sigma);
    hi = std::max(hi, mix.means(k, hour) + 12.0 * sigma);
  }
  Scalar width = std::max(hi - lo, Scalar(1.0));
  while (mixture_cdf(mix, hour, lo) > q) {
    lo -= width;
    width *= 2.0;
  }
  width = std::max(hi - lo, Scalar(1.0));
  while (mixture_cdf(mix, hour, hi) < q) {
    hi += width;
    width *= 2.0;
  }
  while (hi - lo > kBisectTol) {
    const Scalar mid = 0.5 * (lo + hi);
    if (mixture_cdf(mix, hour, mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

MixtureForecast aggregate(const Vector& weights,
                          const std::vector<GaussianForecast>& forecasts) {
  const Index components = weights.size();
  require(components >= 1, "mixture needs at least one component");
  require(static_cast<Index>(forecasts.size()) == components,
          "one forecast per weight required");
  require(weights.minCoeff() >= 0.0, "weights must be nonnegative");
  require(std::abs(weights.sum() - 1.0) <= kSimplexTol,
          "weights must sum to 1");
  const Index hours = forecasts.front().mean.size();
  for (const auto& f : forecasts) {
    require(f.mean.size() == hours && f.variance.size() == hours,
            "forecast hour counts differ");
    require(f.variance.minCoeff() > 0.0, "variances must be positive");
  }

  MixtureForecast mix;
  mix.weights = weights;
  mix.means.resize(components, hours);
  mix.variances.resize(components, hours);
  for (Index k = 0; k < components; ++k) {
    mix.means.row(k) = forecasts[static_cast<std::size_t>(k)].mean.transpose();
    mix.variances.row(k) =
        forecasts[static_cast<std::size_t>(k)].variance.transpose();
  }
  mix.agg_mean = mix.means.transpose() * weights;
  mix.agg_var.resize(hours);
  for (Index h = 0; h < hours; ++h) {
    Scalar total = 0.0;
    for (Index k = 0; k < components; ++k) {
      const Scalar centered = mix.means(k, h) - mix.agg_mean[h];
      total += weights[k] * (mix.variances(k, h) + centered * centered);
    }
    mix.agg_var[h] = total;
  }
  return mix;
}

Scalar mixture_cdf(const MixtureForecast& mix, Index hour, Scalar x) {
  require(hour >= 0 && hour < mix.means.cols(), "hour out of range");
  Scalar cdf = 0.0;
  for (Index k = 0; k < mix.weights.size(); ++k) {
    const Scalar sigma = std::sqrt(mix.variances(k, hour));
    cdf += mix.weights[k] * stats::norm_cdf((x - mix.means(k, hour)) / sigma);
  }
  return cdf;
}

IntervalBand interval(const MixtureForecast& mix, Scalar coverage,
                      IntervalMethod method) {
  require(coverage > 0.0 && coverage < 1.0, "coverage must lie in (0, 1)");
  const Index hours = mix.means.cols();
  require(hours >= 1 && mix.weights.size() >= 1,
          "mixture has no components");
  IntervalBand band;
  band.lower.resize(hours);
  band.upper.resize(hours);
  const Scalar q_lo = 0.5 * (1.0 - coverage);
  const Scalar q_hi = 0.5 * (1.0 + coverage);
  if (method == IntervalMethod::GaussianApprox) {
    const Scalar z = stats::norm_quantile(q_hi);
    for (Index h = 0; h < hours; ++h) {
      const Scalar sigma = std::sqrt(mix.agg_var[h]);
      band.lower[h] = mix.agg_mean[h] - z * sigma;
      band.upper[h] = mix.agg_mean[h] + z * sigma;
    }
    return band;
  }
  for (Index h = 0; h < hours; ++h) {
    band.lower[h] = mixture_quantile(mix, h, q_lo);
    band.upper[h] = mixture_quantile(mix, h, q_hi);
  }
  return band;
}

}  // namespace regimecast
