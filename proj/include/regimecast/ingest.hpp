#pragma once

#include <string>
#include <vector>

#include "regimecast/dates.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Hourly market data at daily granularity: price, residual load and total
/// renewable production, each n x 24, over a gap-free consecutive calendar.
struct MarketTable {
  std::vector<Date> days;
  Matrix price;  // EUR/MWh
  Matrix load;   // MWh, forecast residual load
  Matrix renew;  // MWh, forecast total renewable production
  std::string cleaning_notes;

  Index n() const { return static_cast<Index>(days.size()); }

  /// Row index of a date, or -1 when outside the table.
  Index index_of(Date date) const {
    if (days.empty()) return -1;
    const auto offset = (date - days.front()).count();
    if (offset < 0 || offset >= n()) return -1;
    return static_cast<Index>(offset);
  }

  /// Check the structural invariants (shapes, consecutive days, finite cells).
  void validate() const;
};

/// Column mapping for market CSV files.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string price = "price_eur_mwh";
  std::string load = "residual_load_mwh";
  std::string renew = "renewable_mwh";
};

/// Raised when a computation touches data it must not see yet.
struct LeakageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Read-only window over a MarketTable enforcing the information set of a
/// forecast origin: prices are visible strictly before `price_limit` (row
/// index), exogenous day-ahead series (load, renewables) strictly before
/// `exog_limit`. Access beyond a limit throws LeakageError.
class MarketView {
 public:
  MarketView(const MarketTable& table, Index price_limit, Index exog_limit);

  /// View for forecasting `target_day`: past prices only, exogenous forecasts
  /// available through the target day itself.
  static MarketView for_target(const MarketTable& table, Index target_day);

  /// Unrestricted view over the whole table.
  static MarketView full(const MarketTable& table);

  Scalar price(Index day, Index hour) const;
  Scalar load(Index day, Index hour) const;
  Scalar renew(Index day, Index hour) const;
  Vector price_day(Index day) const;
  Vector load_day(Index day) const;
  Vector renew_day(Index day) const;

  const MarketTable& table() const { return *table_; }
  Index price_limit() const { return price_limit_; }
  Index exog_limit() const { return exog_limit_; }

 private:
  const MarketTable* table_;
  Index price_limit_;
  Index exog_limit_;
};

/// Load and clean an hourly market CSV. Duplicate (day, hour) rows are
/// averaged; missing single hours are linearly interpolated within the day;
/// an entirely absent day raises an error naming the date.
MarketTable load_market_csv(const std::string& path, const CsvSchema& schema = {});

/// Write a MarketTable in the load_market_csv schema.
void write_market_csv(const std::string& path, const MarketTable& table,
                      const CsvSchema& schema = {});

/// Model input vector for one target day; layout:
/// [0]                day index (raw)
/// [1   .. 96 ]       price lags: days i-1, i-2, i-3, i-7 (24 each)
/// [97  .. 168]       residual load: days i, i-1, i-7 (24 each)
/// [169 .. 240]       renewables: days i, i-1, i-7 (24 each)
/// [241 .. 247]       day-of-week one-hot (Monday first)
Vector build_features(const MarketView& view, Index i);
Vector build_features(const MarketTable& table, Index i);

/// Chronologically ordered supervised pairs for one forecast origin.
struct TrainingSet {
  Matrix inputs;             // m x 248
  Matrix targets;            // m x 24
  std::vector<Index> days;   // table row index per pair
};

/// Pairs for target days [target_day - window, target_day); the target day
/// itself is excluded.
TrainingSet build_training_set(const MarketView& view, Index target_day,
                               Index window = 1460);
TrainingSet build_training_set(const MarketTable& table, Index target_day,
                               Index window = 1460);

/// Mean hourly price per day over rows [first, last).
Vector daily_mean_prices(const MarketView& view, Index first, Index last);

/// Synthetic site generator configuration (replaces the external
/// solar/load simulation the study area relies on).
struct SiteConfig {
  Scalar solar_peak = 1.0;      // MWh at the sine apex
  Scalar daylight_start = 6.0;  // hour of first daylight
  Scalar daylight_end = 18.0;   // hour of last daylight
  Scalar daily_demand = 24.0;   // MWh per day
  bool uniform_demand = false;  // flat profile instead of double-peak
};

/// Hourly site-level series for behind-the-meter dispatch cases.
struct SiteProfiles {
  Vector demand;    // 24, >= 0
  Vector solar;     // 24, >= 0
  Vector residual;  // demand - solar
};

/// Deterministic site profiles: clipped half-sine solar over the daylight
/// window, fixed double-peak demand normalized to the daily total (weekends
/// get a flatter shape, same total).
SiteProfiles simulate_site_profiles(Date date, const SiteConfig& config);

}  // namespace regimecast
