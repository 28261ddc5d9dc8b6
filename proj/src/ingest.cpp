#include "regimecast/ingest.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "regimecast/csv.hpp"

namespace regimecast {

namespace {

Scalar parse_cell(const std::string& cell, const std::string& what) {
  try {
    std::size_t used = 0;
    const Scalar v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("market csv: non-numeric " + what + " value '" +
                             cell + "'");
  }
}

/// Fill missing cells of one day's 24-vector by linear interpolation between
/// the nearest present hours (nearest-value extension at the edges). Returns
/// the number of repaired cells.
int repair_day(std::array<Scalar, 24>& values, const std::array<bool, 24>& present) {
  int repaired = 0;
  for (int h = 0; h < 24; ++h) {
    if (present[h]) continue;
    int lo = h - 1;
    while (lo >= 0 && !present[lo]) --lo;
    int hi = h + 1;
    while (hi < 24 && !present[hi]) ++hi;
    if (lo >= 0 && hi < 24) {
      const Scalar t = static_cast<Scalar>(h - lo) / static_cast<Scalar>(hi - lo);
      values[h] = (1.0 - t) * values[lo] + t * values[hi];
    } else if (lo >= 0) {
      values[h] = values[lo];
    } else if (hi < 24) {
      values[h] = values[hi];
    }
    ++repaired;
  }
  return repaired;
}

const std::array<Scalar, 24>& demand_shape() {
  static const std::array<Scalar, 24> shape = {
      0.62, 0.58, 0.56, 0.55, 0.57, 0.64, 0.80, 0.95, 1.05, 1.02, 0.98, 0.96,
      0.95, 0.93, 0.92, 0.94, 1.00, 1.12, 1.28, 1.32, 1.22, 1.05, 0.85, 0.70};
  return shape;
}

}  // namespace

void MarketTable::validate() const {
  const Index rows = n();
  if (price.rows() != rows || load.rows() != rows || renew.rows() != rows)
    throw std::runtime_error("market table: matrices disagree on day count");
  if (price.cols() != kHoursPerDay || load.cols() != kHoursPerDay ||
      renew.cols() != kHoursPerDay)
    throw std::runtime_error("market table: matrices must have 24 columns");
  for (Index d = 1; d < rows; ++d)
    if ((days[static_cast<std::size_t>(d)] - days[static_cast<std::size_t>(d - 1)]).count() != 1)
      throw std::runtime_error("market table: days not consecutive at row " +
                               std::to_string(d));
  if (!price.allFinite() || !load.allFinite() || !renew.allFinite())
    throw std::runtime_error("market table: non-finite cell after cleaning");
}

MarketView::MarketView(const MarketTable& table, Index price_limit, Index exog_limit)
    : table_(&table), price_limit_(price_limit), exog_limit_(exog_limit) {}

MarketView MarketView::for_target(const MarketTable& table, Index target_day) {
  return MarketView(table, target_day, target_day + 1);
}

MarketView MarketView::full(const MarketTable& table) {
  return MarketView(table, table.n(), table.n());
}

namespace {
void check_access(Index day, Index hour, Index limit, Index n, const char* what) {
  if (day < 0 || day >= n || hour < 0 || hour >= kHoursPerDay)
    throw std::out_of_range(std::string("market view: ") + what + " index out of range");
  if (day >= limit)
    throw LeakageError(std::string("market view: ") + what + " for day " +
                       std::to_string(day) + " is beyond the information set");
}
}  // namespace

Scalar MarketView::price(Index day, Index hour) const {
  check_access(day, hour, price_limit_, table_->n(), "price");
  return table_->price(day, hour);
}

Scalar MarketView::load(Index day, Index hour) const {
  check_access(day, hour, exog_limit_, table_->n(), "load");
  return table_->load(day, hour);
}

Scalar MarketView::renew(Index day, Index hour) const {
  check_access(day, hour, exog_limit_, table_->n(), "renewables");
  return table_->renew(day, hour);
}

Vector MarketView::price_day(Index day) const {
  check_access(day, 0, price_limit_, table_->n(), "price");
  return table_->price.row(day).transpose();
}

Vector MarketView::load_day(Index day) const {
  check_access(day, 0, exog_limit_, table_->n(), "load");
  return table_->load.row(day).transpose();
}

Vector MarketView::renew_day(Index day) const {
  check_access(day, 0, exog_limit_, table_->n(), "renewables");
  return table_->renew.row(day).transpose();
}

MarketTable load_market_csv(const std::string& path, const CsvSchema& schema) {
  const CsvTable csv = read_csv(path);
  const std::size_t c_ts = csv.column(schema.timestamp);
  const std::size_t c_p = csv.column(schema.price);
  const std::size_t c_l = csv.column(schema.load);
  const std::size_t c_r = csv.column(schema.renew);

  struct Cell {
    Scalar p = 0, l = 0, r = 0;
    int count = 0;
  };
  std::map<Date, std::array<Cell, 24>> by_day;
  for (const auto& row : csv.rows) {
    const auto [date, hour] = parse_timestamp(row[c_ts]);
    Cell& cell = by_day[date][static_cast<std::size_t>(hour)];
    cell.p += parse_cell(row[c_p], "price");
    cell.l += parse_cell(row[c_l], "load");
    cell.r += parse_cell(row[c_r], "renewables");
    cell.count += 1;
  }
  if (by_day.empty()) throw std::runtime_error("market csv: no data rows");

  const Date first = by_day.begin()->first;
  const Date last = by_day.rbegin()->first;
  const auto n = static_cast<Index>((last - first).count()) + 1;

  MarketTable table;
  table.days.reserve(static_cast<std::size_t>(n));
  table.price.resize(n, kHoursPerDay);
  table.load.resize(n, kHoursPerDay);
  table.renew.resize(n, kHoursPerDay);

  int interpolated = 0;
  int averaged_duplicates = 0;
  for (Index d = 0; d < n; ++d) {
    const Date date = first + std::chrono::days{d};
    const auto it = by_day.find(date);
    if (it == by_day.end())
      throw std::runtime_error("market csv: day " + format_date(date) +
                               " is entirely missing");
    std::array<Scalar, 24> p{}, l{}, r{};
    std::array<bool, 24> present{};
    bool any = false;
    for (int h = 0; h < 24; ++h) {
      const Cell& cell = it->second[static_cast<std::size_t>(h)];
      if (cell.count > 0) {
        p[h] = cell.p / cell.count;
        l[h] = cell.l / cell.count;
        r[h] = cell.r / cell.count;
        present[h] = true;
        any = true;
        if (cell.count > 1) ++averaged_duplicates;
      }
    }
    if (!any)
      throw std::runtime_error("market csv: day " + format_date(date) +
                               " is entirely missing");
    interpolated += repair_day(p, present);
    repair_day(l, present);
    repair_day(r, present);
    table.days.push_back(date);
    for (int h = 0; h < 24; ++h) {
      table.price(d, h) = p[h];
      table.load(d, h) = l[h];
      table.renew(d, h) = r[h];
    }
  }

  std::ostringstream notes;
  notes << "interpolated_hours=" << interpolated
        << ";averaged_duplicate_hours=" << averaged_duplicates;
  table.cleaning_notes = notes.str();
  table.validate();
  return table;
}

void write_market_csv(const std::string& path, const MarketTable& table,
                      const CsvSchema& schema) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(table.n() * kHoursPerDay));
  char ts[32];
  for (Index d = 0; d < table.n(); ++d) {
    const std::string date = format_date(table.days[static_cast<std::size_t>(d)]);
    for (Index h = 0; h < kHoursPerDay; ++h) {
      std::snprintf(ts, sizeof(ts), "%sT%02d:00:00", date.c_str(), static_cast<int>(h));
      rows.push_back({ts, format_number(table.price(d, h)),
                      format_number(table.load(d, h)),
                      format_number(table.renew(d, h))});
    }
  }
  write_csv(path, {schema.timestamp, schema.price, schema.load, schema.renew}, rows);
}

Vector build_features(const MarketView& view, Index i) {
  if (i < 7)
    throw std::invalid_argument(
        "build_features: day index must be >= 7 (lags up to 7 days required)");
  Vector x(kFeatureDim);
  Index pos = 0;
  x[pos++] = static_cast<Scalar>(i);
  for (const Index lag : {Index{1}, Index{2}, Index{3}, Index{7}}) {
    x.segment(pos, kHoursPerDay) = view.price_day(i - lag);
    pos += kHoursPerDay;
  }
  for (const Index lag : {Index{0}, Index{1}, Index{7}}) {
    x.segment(pos, kHoursPerDay) = view.load_day(i - lag);
    pos += kHoursPerDay;
  }
  for (const Index lag : {Index{0}, Index{1}, Index{7}}) {
    x.segment(pos, kHoursPerDay) = view.renew_day(i - lag);
    pos += kHoursPerDay;
  }
  x.segment(pos, 7).setZero();
  x[pos + day_of_week(view.table().days[static_cast<std::size_t>(i)])] = 1.0;
  return x;
}

Vector build_features(const MarketTable& table, Index i) {
  return build_features(MarketView::full(table), i);
}

TrainingSet build_training_set(const MarketView& view, Index target_day,
                               Index window) {
  if (window < 1) throw std::invalid_argument("build_training_set: window must be >= 1");
  if (target_day - window < 7)
    throw std::invalid_argument(
        "build_training_set: insufficient history (need target_day - window >= 7)");
  TrainingSet set;
  set.inputs.resize(window, kFeatureDim);
  set.targets.resize(window, kHoursPerDay);
  set.days.reserve(static_cast<std::size_t>(window));
  for (Index m = 0; m < window; ++m) {
    const Index d = target_day - window + m;
    set.inputs.row(m) = build_features(view, d).transpose();
    set.targets.row(m) = view.price_day(d).transpose();
    set.days.push_back(d);
  }
  return set;
}

TrainingSet build_training_set(const MarketTable& table, Index target_day,
                               Index window) {
  return build_training_set(MarketView::full(table), target_day, window);
}

Vector daily_mean_prices(const MarketView& view, Index first, Index last) {
  if (first < 0 || last <= first)
    throw std::invalid_argument("daily_mean_prices: empty or invalid range");
  Vector means(last - first);
  for (Index d = first; d < last; ++d)
    means[d - first] = view.price_day(d).mean();
  return means;
}

SiteProfiles simulate_site_profiles(Date date, const SiteConfig& config) {
  if (config.solar_peak < 0.0)
    throw std::invalid_argument("site config: solar peak must be >= 0");
  if (config.daily_demand < 0.0)
    throw std::invalid_argument("site config: daily demand must be >= 0");
  if (!(config.daylight_end > config.daylight_start))
    throw std::invalid_argument("site config: daylight window must be nonempty");

  SiteProfiles out;
  out.solar = Vector::Zero(kHoursPerDay);
  for (Index h = 0; h < kHoursPerDay; ++h) {
    const Scalar t = static_cast<Scalar>(h);
    if (t >= config.daylight_start && t <= config.daylight_end) {
      const Scalar phase = (t - config.daylight_start) /
                           (config.daylight_end - config.daylight_start);
      out.solar[h] = config.solar_peak * std::sin(phase * 3.14159265358979323846);
    }
  }

  Vector shape(kHoursPerDay);
  if (config.uniform_demand) {
    shape.setOnes();
  } else {
    for (Index h = 0; h < kHoursPerDay; ++h)
      shape[h] = demand_shape()[static_cast<std::size_t>(h)];
    // Weekends keep the daily total but flatten toward the uniform profile.
    if (day_of_week(date) >= 5) {
      const Scalar mean = shape.mean();
      shape = 0.5 * shape.array() + 0.5 * mean;
    }
  }
  out.demand = shape * (config.daily_demand / shape.sum());
  out.residual = out.demand - out.solar;
  return out;
}

}  // namespace regimecast
