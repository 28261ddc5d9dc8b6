#include "regimecast/synth.hpp"

#include <array>
#include <cmath>

#include "regimecast/rng.hpp"

namespace regimecast {

namespace {

constexpr Scalar kPi = 3.14159265358979323846;

const std::array<Scalar, 24>& load_shape() {
  static const std::array<Scalar, 24> shape = {
      0.62, 0.58, 0.56, 0.55, 0.57, 0.64, 0.80, 0.95, 1.05, 1.02, 0.98, 0.96,
      0.95, 0.93, 0.92, 0.94, 1.00, 1.12, 1.28, 1.32, 1.22, 1.05, 0.85, 0.70};
  return shape;
}

IntVector regime_path(const SynthConfig& config, RandomSource rng) {
  // Sticky three-state chain; row-stochastic.
  const Scalar P[3][3] = {{0.975, 0.020, 0.005},
                          {0.030, 0.950, 0.020},
                          {0.080, 0.100, 0.820}};
  IntVector z(config.n_days);
  int state = 0;
  for (Index d = 0; d < config.n_days; ++d) {
    const Scalar u = rng.uniform();
    Scalar acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      acc += P[state][k];
      if (u < acc) {
        state = k;
        break;
      }
    }
    z[d] = state;
  }
  return z;
}

}  // namespace

IntVector synthetic_regime_path(const SynthConfig& config) {
  RandomSource root(config.seed);
  return regime_path(config, root.substream("synth-regimes"));
}

MarketTable generate_synthetic_market(const SynthConfig& config) {
  if (config.n_days < 1)
    throw std::invalid_argument("synthetic market: n_days must be >= 1");
  RandomSource root(config.seed);
  const IntVector z = regime_path(config, root.substream("synth-regimes"));
  RandomSource noise = root.substream("synth-noise");

  MarketTable table;
  table.days.reserve(static_cast<std::size_t>(config.n_days));
  table.price.resize(config.n_days, kHoursPerDay);
  table.load.resize(config.n_days, kHoursPerDay);
  table.renew.resize(config.n_days, kHoursPerDay);

  const Scalar shape_mean = [] {
    Scalar s = 0.0;
    for (const Scalar v : load_shape()) s += v;
    return s / 24.0;
  }();

  for (Index d = 0; d < config.n_days; ++d) {
    const Date date = config.start + std::chrono::days{d};
    table.days.push_back(date);
    const int doy = static_cast<int>(d % 365);
    const bool weekend = day_of_week(date) >= 5;

    const Scalar seasonal_demand =
        45000.0 + 8000.0 * std::cos(2.0 * kPi * (doy - 15) / 365.0);
    const Scalar weekly = weekend ? 0.88 : 1.0;
    const Scalar renew_level =
        (14000.0 + 6000.0 * std::sin(2.0 * kPi * (doy - 80) / 365.0)) *
        (0.6 + 0.8 * noise.uniform());

    for (Index h = 0; h < kHoursPerDay; ++h) {
      const Scalar hshape = load_shape()[static_cast<std::size_t>(h)] / shape_mean;
      const Scalar demand =
          seasonal_demand * weekly * hshape * (1.0 + 0.02 * noise.normal());
      const Scalar daylight =
          (h >= 6 && h <= 18)
              ? std::sin(kPi * (static_cast<Scalar>(h) - 6.0) / 12.0)
              : 0.0;
      Scalar renew = renew_level * (0.7 + 0.6 * daylight) *
                     (1.0 + 0.05 * noise.normal());
      if (renew < 0.0) renew = 0.0;
      Scalar residual = demand - renew;
      if (residual < 1000.0) residual = 1000.0;

      Scalar price = -10.0 + 1.5 * residual / 1000.0 +
                     config.regime_offsets[z[d]] + 3.0 * noise.normal();
      const Scalar u = noise.uniform();
      if (u < 0.006) price += 90.0 * noise.uniform();        // scarcity spike
      else if (u > 0.994) price -= 70.0 * noise.uniform();   // surplus dip
      table.price(d, h) = price;
      table.load(d, h) = residual;
      table.renew(d, h) = renew;
    }
  }
  table.cleaning_notes = "synthetic";
  table.validate();
  return table;
}

}  // namespace regimecast
