#include "regimecast/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "regimecast/csv.hpp"
#include "regimecast/metrics.hpp"
#include "regimecast/rng.hpp"

namespace regimecast {
namespace {

namespace fs = std::filesystem;

// -- configuration plumbing -------------------------------------------------

[[noreturn]] void config_fail(const std::string& section,
                              const std::string& key, const std::string& why) {
  throw std::invalid_argument("config [" + section + "] " + key + ": " + why);
}

Scalar to_scalar(const std::string& section, const std::string& key,
                 const std::string& value) {
  char* end = nullptr;
  const Scalar v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    config_fail(section, key, "'" + value + "' is not a number");
  return v;
}

Index to_index(const std::string& section, const std::string& key,
               const std::string& value) {
  const Scalar v = to_scalar(section, key, value);
  const Index i = static_cast<Index>(v);
  if (static_cast<Scalar>(i) != v)
    config_fail(section, key, "'" + value + "' is not an integer");
  return i;
}

std::uint64_t to_u64(const std::string& section, const std::string& key,
                     const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    config_fail(section, key, "'" + value + "' is not an unsigned integer");
  }
}

bool to_bool(const std::string& section, const std::string& key,
             const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  config_fail(section, key, "'" + value + "' is not a boolean");
}

std::vector<Index> to_index_list(const std::string& section,
                                 const std::string& key,
                                 const std::string& value) {
  std::vector<Index> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ','))
    out.push_back(to_index(section, key, item));
  if (out.empty()) config_fail(section, key, "empty list");
  return out;
}

std::string join_indices(const std::vector<Index>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

/// Applies `fn(value)` when the key is present and records the key as known.
struct SectionReader {
  const ConfigMap& config;
  std::string section;
  std::set<std::string> seen;

  template <typename Fn>
  void key(const std::string& name, Fn&& fn) {
    seen.insert(name);
    const auto sec = config.find(section);
    if (sec == config.end()) return;
    const auto entry = sec->second.find(name);
    if (entry == sec->second.end()) return;
    fn(entry->second);
  }

  /// After reading every supported key, rejects the ones left over.
  ~SectionReader() noexcept(false) {
    const auto sec = config.find(section);
    if (sec == config.end()) return;
    for (const auto& [name, value] : sec->second)
      if (!seen.count(name) && !std::uncaught_exceptions())
        config_fail(section, name, "unknown key");
  }
};

const std::set<std::string> kKnownSections = {
    "data",   "run",     "segment",    "compress", "classifier",
    "cnp",    "lear",    "dnn",        "dispatch", "battery",
    "strategy", "site",  "metrics"};

int year_of(Date d) {
  return static_cast<int>(std::chrono::year_month_day{d}.year());
}

// -- stage timing -----------------------------------------------------------

struct StageClock {
  std::map<std::string, double> seconds;

  class Scope {
   public:
    Scope(StageClock& clock, std::string stage)
        : clock_(clock), stage_(std::move(stage)),
          start_(std::chrono::steady_clock::now()) {}
    ~Scope() {
      const auto elapsed = std::chrono::steady_clock::now() - start_;
      clock_.seconds[stage_] +=
          std::chrono::duration<double>(elapsed).count();
    }

   private:
    StageClock& clock_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
  };

  Scope scope(std::string stage) { return Scope(*this, std::move(stage)); }
};

[[noreturn]] void fail_stage(const std::string& stage, Date day,
                             const std::exception& e) {
  throw std::runtime_error("pipeline stage '" + stage + "' failed for " +
                           format_date(day) + ": " + e.what());
}

// -- deterministic parallel map over day indices ----------------------------

void parallel_for(std::size_t count, Index jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

// ---------------------------------------------------------------------------

BaselineSigma baseline_sigma_from_string(std::string_view text) {
  if (text == "zero") return BaselineSigma::Zero;
  if (text == "rolling") return BaselineSigma::Rolling;
  throw std::invalid_argument("baseline_sigma_from_string: expected 'zero' or "
                              "'rolling', got '" + std::string(text) + "'");
}

const char* baseline_sigma_name(BaselineSigma mode) {
  return mode == BaselineSigma::Zero ? "zero" : "rolling";
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                          std::uint64_t index) {
  std::uint64_t h = fnv1a64(&root, sizeof(root));
  h = fnv1a64(stage, h);
  h = fnv1a64(&index, sizeof(index), h);
  return h;
}

// -- configuration parsing --------------------------------------------------

PipelineConfig parse_pipeline_config(const ConfigMap& file) {
  for (const auto& [section, entries] : file) {
    (void)entries;
    if (!section.empty() && !kKnownSections.count(section))
      throw std::invalid_argument("config: unknown section [" + section + "]");
  }
  if (file.count("") && !file.at("").empty())
    throw std::invalid_argument("config: keys outside any section");

  PipelineConfig c;
  {
    SectionReader r{file, "data", {}};
    r.key("path", [&](const std::string& v) { c.data_path = v; });
  }
  {
    SectionReader r{file, "run", {}};
    r.key("out_dir", [&](const std::string& v) { c.out_dir = v; });
    r.key("seed", [&](const std::string& v) { c.seed = to_u64("run", "seed", v); });
    r.key("jobs", [&](const std::string& v) { c.jobs = to_index("run", "jobs", v); });
    r.key("force", [&](const std::string& v) { c.force = to_bool("run", "force", v); });
    r.key("eval_start", [&](const std::string& v) {
      c.eval_start = parse_date(v);
      c.eval_start_set = true;
    });
    r.key("eval_days", [&](const std::string& v) { c.eval_days = to_index("run", "eval_days", v); });
    r.key("stride", [&](const std::string& v) { c.stride = to_index("run", "stride", v); });
    r.key("reseg_days", [&](const std::string& v) { c.reseg_days = to_index("run", "reseg_days", v); });
    r.key("window", [&](const std::string& v) { c.window = to_index("run", "window", v); });
  }
  c.lear.window = c.window;
  {
    SectionReader r{file, "segment", {}};
    r.key("variant", [&](const std::string& v) { c.segmentation.variant = variant_from_string(v); });
    r.key("sweeps", [&](const std::string& v) { c.segmentation.sweeps = to_index("segment", "sweeps", v); });
    r.key("burn_in", [&](const std::string& v) { c.segmentation.burn_in = to_index("segment", "burn_in", v); });
    r.key("sticky_kappa", [&](const std::string& v) { c.segmentation.sticky_kappa = to_scalar("segment", "sticky_kappa", v); });
    r.key("max_regimes", [&](const std::string& v) { c.segmentation.max_regimes = to_index("segment", "max_regimes", v); });
  }
  {
    SectionReader r{file, "compress", {}};
    r.key("kl_threshold", [&](const std::string& v) { c.kl_threshold = to_scalar("compress", "kl_threshold", v); });
    r.key("min_mass", [&](const std::string& v) { c.min_mass = to_scalar("compress", "min_mass", v); });
  }
  {
    SectionReader r{file, "classifier", {}};
    r.key("hidden", [&](const std::string& v) { c.classifier.hidden = to_index_list("classifier", "hidden", v); });
    r.key("epochs", [&](const std::string& v) { c.classifier.epochs = static_cast<int>(to_index("classifier", "epochs", v)); });
    r.key("learning_rate", [&](const std::string& v) { c.classifier.learning_rate = to_scalar("classifier", "learning_rate", v); });
    r.key("batch_size", [&](const std::string& v) { c.classifier.batch_size = to_index("classifier", "batch_size", v); });
    r.key("val_fraction", [&](const std::string& v) { c.classifier.val_fraction = to_scalar("classifier", "val_fraction", v); });
    r.key("balanced_class_weights", [&](const std::string& v) { c.classifier.balanced_class_weights = to_bool("classifier", "balanced_class_weights", v); });
  }
  {
    SectionReader r{file, "cnp", {}};
    r.key("repr_dim", [&](const std::string& v) { c.cnp.repr_dim = to_index("cnp", "repr_dim", v); });
    r.key("hidden", [&](const std::string& v) { c.cnp.hidden = to_index_list("cnp", "hidden", v); });
    r.key("epochs", [&](const std::string& v) { c.cnp.epochs = static_cast<int>(to_index("cnp", "epochs", v)); });
    r.key("tasks_per_epoch", [&](const std::string& v) { c.cnp.tasks_per_epoch = static_cast<int>(to_index("cnp", "tasks_per_epoch", v)); });
    r.key("learning_rate", [&](const std::string& v) { c.cnp.learning_rate = to_scalar("cnp", "learning_rate", v); });
    r.key("context_cap", [&](const std::string& v) { c.context_cap = to_index("cnp", "context_cap", v); });
    r.key("min_regime_size", [&](const std::string& v) { c.min_regime_size = to_index("cnp", "min_regime_size", v); });
    r.key("tune_trials", [&](const std::string& v) { c.tune_trials = to_index("cnp", "tune_trials", v); });
  }
  {
    SectionReader r{file, "lear", {}};
    r.key("window", [&](const std::string& v) { c.lear.window = to_index("lear", "window", v); });
    r.key("holdout_days", [&](const std::string& v) { c.lear.holdout_days = to_index("lear", "holdout_days", v); });
    r.key("grid_size", [&](const std::string& v) { c.lear.grid_size = to_index("lear", "grid_size", v); });
    r.key("grid_floor", [&](const std::string& v) { c.lear.grid_floor = to_scalar("lear", "grid_floor", v); });
  }
  {
    SectionReader r{file, "dnn", {}};
    r.key("hidden", [&](const std::string& v) {
      const std::vector<Index> layers = to_index_list("dnn", "hidden", v);
      if (layers.size() != c.dnn.hidden.size())
        config_fail("dnn", "hidden", "expected exactly " +
                                         std::to_string(c.dnn.hidden.size()) +
                                         " layer widths");
      std::copy(layers.begin(), layers.end(), c.dnn.hidden.begin());
    });
    r.key("epochs", [&](const std::string& v) { c.dnn.epochs = to_index("dnn", "epochs", v); });
    r.key("batch_size", [&](const std::string& v) { c.dnn.batch_size = to_index("dnn", "batch_size", v); });
    r.key("learning_rate", [&](const std::string& v) { c.dnn.learning_rate = to_scalar("dnn", "learning_rate", v); });
  }
  {
    SectionReader r{file, "dispatch", {}};
    r.key("baseline_sigma", [&](const std::string& v) { c.baseline_sigma = baseline_sigma_from_string(v); });
    r.key("sigma_window", [&](const std::string& v) { c.sigma_window = to_index("dispatch", "sigma_window", v); });
    r.key("sigma_min_days", [&](const std::string& v) { c.sigma_min_days = to_index("dispatch", "sigma_min_days", v); });
  }
  c.battery = battery_from_config(file);
  c.strategy = strategy_from_config(file);
  c.site = site_from_config(file);
  {
    SectionReader r{file, "metrics", {}};
    r.key("coverage", [&](const std::string& v) { c.coverage = to_scalar("metrics", "coverage", v); });
    r.key("crps_samples", [&](const std::string& v) { c.crps_samples = to_index("metrics", "crps_samples", v); });
  }
  return c;
}

ConfigMap snapshot_pipeline_config(const PipelineConfig& c) {
  ConfigMap out;
  out["data"]["path"] = c.data_path;
  auto& run = out["run"];
  run["out_dir"] = c.out_dir;
  run["seed"] = std::to_string(c.seed);
  run["jobs"] = std::to_string(c.jobs);
  run["force"] = c.force ? "true" : "false";
  if (c.eval_start_set) run["eval_start"] = format_date(c.eval_start);
  run["eval_days"] = std::to_string(c.eval_days);
  run["stride"] = std::to_string(c.stride);
  run["reseg_days"] = std::to_string(c.reseg_days);
  run["window"] = std::to_string(c.window);
  auto& seg = out["segment"];
  seg["variant"] = variant_name(c.segmentation.variant);
  seg["sweeps"] = std::to_string(c.segmentation.sweeps);
  seg["burn_in"] = std::to_string(c.segmentation.burn_in);
  seg["sticky_kappa"] = format_number(c.segmentation.sticky_kappa);
  seg["max_regimes"] = std::to_string(c.segmentation.max_regimes);
  auto& comp = out["compress"];
  comp["kl_threshold"] = format_number(c.kl_threshold);
  comp["min_mass"] = format_number(c.min_mass);
  auto& clf = out["classifier"];
  clf["hidden"] = join_indices(c.classifier.hidden);
  clf["epochs"] = std::to_string(c.classifier.epochs);
  clf["learning_rate"] = format_number(c.classifier.learning_rate);
  clf["batch_size"] = std::to_string(c.classifier.batch_size);
  clf["val_fraction"] = format_number(c.classifier.val_fraction);
  clf["balanced_class_weights"] = c.classifier.balanced_class_weights ? "true" : "false";
  auto& cnp = out["cnp"];
  cnp["repr_dim"] = std::to_string(c.cnp.repr_dim);
  cnp["hidden"] = join_indices(c.cnp.hidden);
  cnp["epochs"] = std::to_string(c.cnp.epochs);
  cnp["tasks_per_epoch"] = std::to_string(c.cnp.tasks_per_epoch);
  cnp["learning_rate"] = format_number(c.cnp.learning_rate);
  cnp["context_cap"] = std::to_string(c.context_cap);
  cnp["min_regime_size"] = std::to_string(c.min_regime_size);
  cnp["tune_trials"] = std::to_string(c.tune_trials);
  auto& lear = out["lear"];
  lear["window"] = std::to_string(c.lear.window);
  lear["holdout_days"] = std::to_string(c.lear.holdout_days);
  lear["grid_size"] = std::to_string(c.lear.grid_size);
  lear["grid_floor"] = format_number(c.lear.grid_floor);
  auto& dnn = out["dnn"];
  dnn["hidden"] = join_indices(
      std::vector<Index>(c.dnn.hidden.begin(), c.dnn.hidden.end()));
  dnn["epochs"] = std::to_string(c.dnn.epochs);
  dnn["batch_size"] = std::to_string(c.dnn.batch_size);
  dnn["learning_rate"] = format_number(c.dnn.learning_rate);
  auto& dispatch = out["dispatch"];
  dispatch["baseline_sigma"] = baseline_sigma_name(c.baseline_sigma);
  dispatch["sigma_window"] = std::to_string(c.sigma_window);
  dispatch["sigma_min_days"] = std::to_string(c.sigma_min_days);
  auto& bat = out["battery"];
  bat["c_max"] = format_number(c.battery.c_max);
  bat["eta_c"] = format_number(c.battery.eta_c);
  bat["eta_d"] = format_number(c.battery.eta_d);
  bat["p_charge_max"] = format_number(c.battery.p_charge_max);
  bat["p_discharge_max"] = format_number(c.battery.p_discharge_max);
  bat["x_min"] = format_number(c.battery.x_min);
  bat["x_max"] = format_number(c.battery.x_max);
  bat["s_init"] = format_number(c.battery.s_init);
  bat["s_final"] = format_number(c.battery.s_final);
  auto& strat = out["strategy"];
  strat["lambda1"] = format_number(c.strategy.lambda1);
  strat["lambda2"] = format_number(c.strategy.lambda2);
  strat["lambda"] = format_number(c.strategy.lambda);
  strat["mu"] = format_number(c.strategy.mu);
  strat["gamma"] = format_number(c.strategy.gamma);
  auto& site = out["site"];
  site["solar_peak"] = format_number(c.site.solar_peak);
  site["daylight_start"] = format_number(c.site.daylight_start);
  site["daylight_end"] = format_number(c.site.daylight_end);
  site["daily_demand"] = format_number(c.site.daily_demand);
  site["uniform_demand"] = c.site.uniform_demand ? "true" : "false";
  auto& metrics = out["metrics"];
  metrics["coverage"] = format_number(c.coverage);
  metrics["crps_samples"] = std::to_string(c.crps_samples);
  return out;
}

BatteryParams battery_from_config(const ConfigMap& config) {
  BatteryParams b;
  SectionReader r{config, "battery", {}};
  r.key("c_max", [&](const std::string& v) { b.c_max = to_scalar("battery", "c_max", v); });
  r.key("eta_c", [&](const std::string& v) { b.eta_c = to_scalar("battery", "eta_c", v); });
  r.key("eta_d", [&](const std::string& v) { b.eta_d = to_scalar("battery", "eta_d", v); });
  r.key("p_charge_max", [&](const std::string& v) { b.p_charge_max = to_scalar("battery", "p_charge_max", v); });
  r.key("p_discharge_max", [&](const std::string& v) { b.p_discharge_max = to_scalar("battery", "p_discharge_max", v); });
  r.key("x_min", [&](const std::string& v) { b.x_min = to_scalar("battery", "x_min", v); });
  r.key("x_max", [&](const std::string& v) { b.x_max = to_scalar("battery", "x_max", v); });
  r.key("s_init", [&](const std::string& v) { b.s_init = to_scalar("battery", "s_init", v); });
  r.key("s_final", [&](const std::string& v) { b.s_final = to_scalar("battery", "s_final", v); });
  b.validate();
  return b;
}

StrategyParams strategy_from_config(const ConfigMap& config) {
  StrategyParams s;
  SectionReader r{config, "strategy", {}};
  r.key("lambda1", [&](const std::string& v) { s.lambda1 = to_scalar("strategy", "lambda1", v); });
  r.key("lambda2", [&](const std::string& v) { s.lambda2 = to_scalar("strategy", "lambda2", v); });
  r.key("lambda", [&](const std::string& v) { s.lambda = to_scalar("strategy", "lambda", v); });
  r.key("mu", [&](const std::string& v) { s.mu = to_scalar("strategy", "mu", v); });
  r.key("gamma", [&](const std::string& v) { s.gamma = to_scalar("strategy", "gamma", v); });
  return s;
}

SiteConfig site_from_config(const ConfigMap& config) {
  SiteConfig s;
  SectionReader r{config, "site", {}};
  r.key("solar_peak", [&](const std::string& v) { s.solar_peak = to_scalar("site", "solar_peak", v); });
  r.key("daylight_start", [&](const std::string& v) { s.daylight_start = to_scalar("site", "daylight_start", v); });
  r.key("daylight_end", [&](const std::string& v) { s.daylight_end = to_scalar("site", "daylight_end", v); });
  r.key("daily_demand", [&](const std::string& v) { s.daily_demand = to_scalar("site", "daily_demand", v); });
  r.key("uniform_demand", [&](const std::string& v) { s.uniform_demand = to_bool("site", "uniform_demand", v); });
  return s;
}

// -- regime utilities -------------------------------------------------------

RegimeMerge merge_small_regimes(const std::vector<int>& labels,
                                const std::vector<GaussianEmission>& emissions,
                                Index min_size) {
  const Index k0 = static_cast<Index>(emissions.size());
  if (k0 < 1) throw std::invalid_argument("merge_small_regimes: no classes");
  for (const int z : labels)
    if (z < 0 || z >= k0)
      throw std::invalid_argument("merge_small_regimes: label out of range");
  if (min_size > static_cast<Index>(labels.size()))
    throw std::invalid_argument(
        "merge_small_regimes: min_size exceeds the sample count");

  std::vector<Index> count(static_cast<std::size_t>(k0), 0);
  for (const int z : labels) ++count[static_cast<std::size_t>(z)];
  std::vector<Scalar> mean(static_cast<std::size_t>(k0));
  for (Index k = 0; k < k0; ++k)
    mean[static_cast<std::size_t>(k)] = emissions[static_cast<std::size_t>(k)].mu;
  std::vector<int> parent(static_cast<std::size_t>(k0));
  std::iota(parent.begin(), parent.end(), 0);
  const auto root = [&](int k) {
    while (parent[static_cast<std::size_t>(k)] != k)
      k = parent[static_cast<std::size_t>(k)];
    return k;
  };

  auto alive_count = [&] {
    Index n = 0;
    for (Index k = 0; k < k0; ++k) n += root(static_cast<int>(k)) == k;
    return n;
  };

  while (alive_count() > 1) {
    // Smallest class below the floor (ties: lower index).
    int victim = -1;
    for (Index k = 0; k < k0; ++k) {
      if (root(static_cast<int>(k)) != k) continue;
      const Index n = count[static_cast<std::size_t>(k)];
      if (n >= min_size) continue;
      if (victim < 0 || n < count[static_cast<std::size_t>(victim)]) victim = static_cast<int>(k);
    }
    if (victim < 0) break;
    // Nearest surviving class by emission mean (ties: larger, then lower).
    int target = -1;
    for (Index k = 0; k < k0; ++k) {
      const int kk = static_cast<int>(k);
      if (kk == victim || root(kk) != kk) continue;
      if (target < 0) {
        target = kk;
        continue;
      }
      const Scalar dk = std::abs(mean[static_cast<std::size_t>(kk)] - mean[static_cast<std::size_t>(victim)]);
      const Scalar dt = std::abs(mean[static_cast<std::size_t>(target)] - mean[static_cast<std::size_t>(victim)]);
      if (dk < dt || (dk == dt && count[static_cast<std::size_t>(kk)] > count[static_cast<std::size_t>(target)]))
        target = kk;
    }
    const Index nv = count[static_cast<std::size_t>(victim)];
    const Index nt = count[static_cast<std::size_t>(target)];
    if (nv + nt > 0)
      mean[static_cast<std::size_t>(target)] =
          (nt * mean[static_cast<std::size_t>(target)] + nv * mean[static_cast<std::size_t>(victim)]) / (nt + nv);
    count[static_cast<std::size_t>(target)] = nt + nv;
    count[static_cast<std::size_t>(victim)] = 0;
    parent[static_cast<std::size_t>(victim)] = target;
  }

  RegimeMerge out;
  std::vector<int> dense(static_cast<std::size_t>(k0), -1);
  Index next = 0;
  for (Index k = 0; k < k0; ++k)
    if (root(static_cast<int>(k)) == static_cast<int>(k) && count[static_cast<std::size_t>(k)] > 0)
      dense[static_cast<std::size_t>(k)] = static_cast<int>(next++);
  out.regimes = next;
  out.mapping.resize(static_cast<std::size_t>(k0));
  for (Index k = 0; k < k0; ++k)
    out.mapping[static_cast<std::size_t>(k)] = dense[static_cast<std::size_t>(root(static_cast<int>(k)))];
  out.labels.reserve(labels.size());
  for (const int z : labels)
    out.labels.push_back(out.mapping[static_cast<std::size_t>(z)]);
  return out;
}

// -- model stack ------------------------------------------------------------

namespace {

/// Chronological holdout score of one candidate configuration on a regime's
/// pairs: train on the head, mean negative log likelihood on the tail.
Scalar cnp_holdout_nll(const Matrix& X, const Matrix& Y, Index n_train,
                       Index context_cap, const CnpConfig& config) {
  const CnpTrainResult fit =
      train_cnp(X.topRows(n_train), Y.topRows(n_train), config);
  const Index ctx = std::min(context_cap, n_train);
  const Matrix ctx_x = X.middleRows(n_train - ctx, ctx);
  const Matrix ctx_y = Y.middleRows(n_train - ctx, ctx);
  Scalar total = 0.0;
  for (Index i = n_train; i < X.rows(); ++i) {
    const GaussianForecast f =
        predict(fit.model, ctx_x, ctx_y, X.row(i).transpose());
    total += nll(f, Y.row(i).transpose());
  }
  return total / static_cast<Scalar>(X.rows() - n_train);
}

CnpConfig tune_cnp_config(const Matrix& X, const Matrix& Y,
                          const CnpConfig& base, Index trials,
                          Index context_cap) {
  const Index m = X.rows();
  const Index n_val = std::max<Index>(1, m / 5);
  const Index n_train = m - n_val;
  if (n_train < 8) return base;  // too few pairs to split
  CnpConfig best = base;
  Scalar best_nll = std::numeric_limits<Scalar>::infinity();
  for (Index t = 0; t < trials; ++t) {
    RandomSource rng(derive_seed(base.seed, "search", static_cast<std::uint64_t>(t)));
    CnpConfig candidate = base;
    const Index width = rng.bernoulli(0.5) ? 128 : 64;
    candidate.repr_dim = width;
    candidate.hidden = {width, width};
    candidate.learning_rate = rng.bernoulli(0.5) ? 1e-3 : 3e-4;
    candidate.seed = derive_seed(base.seed, "trial", static_cast<std::uint64_t>(t));
    const Scalar score = cnp_holdout_nll(X, Y, n_train, context_cap, candidate);
    if (score < best_nll) {
      best_nll = score;
      best = candidate;
    }
  }
  return best;
}

}  // namespace

BundleResult train_model_bundle(const MarketView& view,
                                const std::vector<Index>& rows,
                                const std::vector<int>& labels,
                                const BundleOptions& options) {
  if (rows.empty() || rows.size() != labels.size())
    throw std::invalid_argument(
        "train_model_bundle: rows and labels must align and be nonempty");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 7)
      throw std::invalid_argument(
          "train_model_bundle: rows need seven days of history");
    if (i > 0 && rows[i] <= rows[i - 1])
      throw std::invalid_argument(
          "train_model_bundle: rows must be strictly increasing");
  }

  const Index m = static_cast<Index>(rows.size());
  int max_label = 0;
  for (const int z : labels) max_label = std::max(max_label, z);
  const Index k0 = max_label + 1;

  // Empirical class means of the daily mean price drive the merge.
  std::vector<GaussianEmission> emissions(static_cast<std::size_t>(k0));
  {
    std::vector<Scalar> sum(static_cast<std::size_t>(k0), 0.0);
    std::vector<Index> count(static_cast<std::size_t>(k0), 0);
    for (Index i = 0; i < m; ++i) {
      const Scalar day_mean = view.price_day(rows[static_cast<std::size_t>(i)]).mean();
      sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += day_mean;
      ++count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (Index k = 0; k < k0; ++k)
      emissions[static_cast<std::size_t>(k)].mu =
          count[static_cast<std::size_t>(k)]
              ? sum[static_cast<std::size_t>(k)] / count[static_cast<std::size_t>(k)]
              : 0.0;
  }

  BundleResult out;
  out.merge = merge_small_regimes(labels, emissions, options.min_regime_size);
  const Index k = out.merge.regimes;

  Matrix X(m, kFeatureDim), Y(m, kHoursPerDay);
  for (Index i = 0; i < m; ++i) {
    X.row(i) = build_features(view, rows[static_cast<std::size_t>(i)]).transpose();
    Y.row(i) = view.price_day(rows[static_cast<std::size_t>(i)]).transpose();
  }

  out.bundle.classifier.config = options.classifier;
  out.bundle.classifier.model =
      fit_regime_classifier(X, out.merge.labels, options.classifier).model;

  for (Index regime = 0; regime < k; ++regime) {
    std::vector<Index> member_rows;
    for (Index i = 0; i < m; ++i)
      if (out.merge.labels[static_cast<std::size_t>(i)] == regime)
        member_rows.push_back(i);
    const Index mk = static_cast<Index>(member_rows.size());
    Matrix Xk(mk, X.cols()), Yk(mk, Y.cols());
    for (Index i = 0; i < mk; ++i) {
      Xk.row(i) = X.row(member_rows[static_cast<std::size_t>(i)]);
      Yk.row(i) = Y.row(member_rows[static_cast<std::size_t>(i)]);
    }
    CnpConfig config = options.cnp;
    config.seed = derive_seed(options.cnp.seed, "regime",
                              static_cast<std::uint64_t>(regime));
    if (options.tune_trials > 0)
      config = tune_cnp_config(Xk, Yk, config, options.tune_trials,
                               options.context_cap);
    CnpArtifact member;
    try {
      member.model = train_cnp(Xk, Yk, config).model;
    } catch (const std::exception& e) {
      throw std::runtime_error("train_model_bundle: regime " +
                               std::to_string(regime) + " (" +
                               std::to_string(mk) + " days): " + e.what());
    }
    member.config = config;
    member.regime = static_cast<int>(regime);
    const Index ctx = std::min(options.context_cap, mk);
    member.context_x = Xk.bottomRows(ctx);
    member.context_y = Yk.bottomRows(ctx);
    out.bundle.members.push_back(std::move(member));
  }
  return out;
}

DayPrediction predict_day(const ModelBundle& bundle, const Vector& features,
                          Date day, Scalar coverage) {
  if (bundle.members.empty())
    throw std::invalid_argument("predict_day: bundle holds no regimes");
  const Vector weights = predict_weights(bundle.classifier.model, features);
  std::vector<GaussianForecast> forecasts;
  forecasts.reserve(bundle.members.size());
  for (const CnpArtifact& member : bundle.members)
    forecasts.push_back(
        predict(member.model, member.context_x, member.context_y, features));
  DayPrediction out;
  out.mixture = aggregate(weights, forecasts);
  const IntervalBand band =
      interval(out.mixture, coverage, IntervalMethod::ExactMixture);
  out.forecast.day = day;
  out.forecast.mean = out.mixture.agg_mean;
  out.forecast.variance = out.mixture.agg_var;
  out.forecast.lower = band.lower;
  out.forecast.upper = band.upper;
  out.forecast.weights = out.mixture.weights;
  out.forecast.member_mean = out.mixture.means;
  out.forecast.member_var = out.mixture.variances;
  return out;
}

// -- scoring ----------------------------------------------------------------

std::vector<MetricsRow> score_forecasts(const std::string& model,
                                        const std::vector<ForecastDay>& days,
                                        const MarketTable& actuals,
                                        Index crps_samples,
                                        std::uint64_t seed) {
  if (days.empty())
    throw std::invalid_argument("score_forecasts: no forecast days");
  struct Pool {
    std::vector<Scalar> y, yhat, lo, hi, crps;
    Index days = 0;
  };
  std::map<std::string, Pool> pools;  // "all" plus one per year

  for (const ForecastDay& d : days) {
    const Index row = actuals.index_of(d.day);
    if (row < 0)
      throw std::invalid_argument("score_forecasts: day " + format_date(d.day) +
                                  " is not in the actuals");
    const Vector y = actuals.price.row(row).transpose();
    const bool has_band = d.lower.size() == kHoursPerDay;
    const bool has_members = d.weights.size() > 0;
    const bool has_var = d.variance.size() == kHoursPerDay;
    RandomSource rng(derive_seed(seed, "crps", static_cast<std::uint64_t>(row)));
    std::vector<Scalar> day_crps;
    if (has_members || has_var) {
      day_crps.reserve(kHoursPerDay);
      for (Index h = 0; h < kHoursPerDay; ++h) {
        if (has_members) {
          day_crps.push_back(crps_mixture(d.weights, d.member_mean.col(h),
                                          d.member_var.col(h), y[h],
                                          static_cast<int>(crps_samples), rng));
        } else {
          day_crps.push_back(
              crps_gaussian(d.mean[h], std::sqrt(d.variance[h]), y[h]));
        }
      }
    }
    for (const std::string& period : {std::string("all"), std::to_string(year_of(d.day))}) {
      Pool& pool = pools[period];
      ++pool.days;
      for (Index h = 0; h < kHoursPerDay; ++h) {
        pool.y.push_back(y[h]);
        pool.yhat.push_back(d.mean[h]);
        if (has_band) {
          pool.lo.push_back(d.lower[h]);
          pool.hi.push_back(d.upper[h]);
        }
        if (!day_crps.empty()) pool.crps.push_back(day_crps[static_cast<std::size_t>(h)]);
      }
    }
  }

  // "all" first, then the years ascending.
  std::vector<std::string> order = {"all"};
  for (const auto& [period, pool] : pools) {
    (void)pool;
    if (period != "all") order.push_back(period);
  }
  std::vector<MetricsRow> rows;
  for (const std::string& period : order) {
    const Pool& pool = pools.at(period);
    MetricsRow r;
    r.model = model;
    r.period = period;
    r.days = pool.days;
    const auto to_vec = [](const std::vector<Scalar>& v) {
      return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    };
    const ErrorReport err = point_errors(to_vec(pool.y), to_vec(pool.yhat));
    r.mae = err.mae;
    r.rmse = err.rmse;
    r.mape = err.mape;
    r.smape = err.smape;
    if (!pool.crps.empty())
      r.crps = to_vec(pool.crps).mean();
    if (!pool.lo.empty()) {
      const IntervalReport band =
          interval_scores(to_vec(pool.y), to_vec(pool.lo), to_vec(pool.hi));
      r.picp80 = band.picp;
      r.mpiw80 = band.mpiw;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// -- the rolling evaluation -------------------------------------------------

namespace {

struct ModelStack {
  Index trained_for = -1;
  BundleResult bundle;
  LearModel lear;
  DnnModel dnn;
  std::string segmentation_file;
};

struct EvalAccum {
  std::vector<ForecastDay> forecasts;
  std::vector<ScheduleRecord> schedules;
  std::deque<Vector> recent_errors;  ///< per evaluated day, signed, 24 hours
  std::array<std::vector<Scalar>, 4> realized_by_case;
};

void validate_pipeline_config(const PipelineConfig& c) {
  const auto bad = [](const std::string& what) {
    throw std::invalid_argument("run_pipeline: " + what);
  };
  if (c.data_path.empty()) bad("data path is empty");
  if (c.out_dir.empty()) bad("output directory is empty");
  if (c.stride < 1) bad("stride must be at least 1");
  if (c.eval_days < 1) bad("eval_days must be at least 1");
  if (c.reseg_days < 1) bad("reseg_days must be at least 1");
  if (c.window < 10) bad("window must be at least 10 days");
  if (c.jobs < 1) bad("jobs must be at least 1");
  if (c.sigma_window < 1) bad("sigma_window must be at least 1");
  if (c.sigma_min_days < 1) bad("sigma_min_days must be at least 1");
  if (!(c.coverage > 0.0 && c.coverage < 1.0)) bad("coverage must lie in (0, 1)");
  if (c.crps_samples < 1) bad("crps_samples must be at least 1");
  if (c.context_cap < 1) bad("context_cap must be at least 1");
  if (c.min_regime_size < 1) bad("min_regime_size must be at least 1");
  if (c.tune_trials < 0) bad("tune_trials must not be negative");
  c.battery.validate();
}

Vector rolling_sigma(const EvalAccum& accum, const PipelineConfig& config) {
  if (config.baseline_sigma == BaselineSigma::Zero ||
      static_cast<Index>(accum.recent_errors.size()) < config.sigma_min_days)
    return Vector::Zero(kHoursPerDay);
  const Index n = static_cast<Index>(accum.recent_errors.size());
  Vector sigma(kHoursPerDay);
  for (Index h = 0; h < kHoursPerDay; ++h) {
    Scalar mean = 0.0;
    for (const Vector& e : accum.recent_errors) mean += e[h];
    mean /= static_cast<Scalar>(n);
    Scalar ss = 0.0;
    for (const Vector& e : accum.recent_errors) {
      const Scalar d = e[h] - mean;
      ss += d * d;
    }
    sigma[h] = std::sqrt(ss / static_cast<Scalar>(n - 1));
  }
  return sigma;
}

ForecastDay point_forecast_day(Date day, const Vector& mean) {
  ForecastDay d;
  d.day = day;
  d.mean = mean;
  d.member_mean.resize(0, kHoursPerDay);
  d.member_var.resize(0, kHoursPerDay);
  return d;
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, std::ostream* log) {
  validate_pipeline_config(config);
  StageClock clock;
  RunManifest manifest;
  manifest.seed = config.seed;
  manifest.data_path = config.data_path;
  manifest.config = snapshot_pipeline_config(config);

  const fs::path out_dir(config.out_dir);
  if (fs::exists(out_dir / "manifest.json") && !config.force)
    throw std::runtime_error("run_pipeline: '" + config.out_dir +
                             "' already holds a run; pass force to overwrite");

  MarketTable table;
  {
    auto timer = clock.scope("load");
    table = load_market_csv(config.data_path);
    table.validate();
    manifest.data_fingerprint = file_fingerprint(config.data_path);
  }
  if (log)
    *log << "[load] " << table.n() << " days from " << config.data_path
         << " (fingerprint " << manifest.data_fingerprint << ")\n";

  const Index first_usable = config.window + 7;
  Index start_row = first_usable;
  if (config.eval_start_set) {
    start_row = table.index_of(config.eval_start);
    if (start_row < 0)
      throw std::invalid_argument("run_pipeline: eval_start " +
                                  format_date(config.eval_start) +
                                  " lies outside the data");
    if (start_row < first_usable)
      throw std::invalid_argument(
          "run_pipeline: eval_start " + format_date(config.eval_start) +
          " needs " + std::to_string(first_usable) +
          " days of history (training window plus feature lags)");
  } else if (start_row + config.eval_days > table.n()) {
    throw std::invalid_argument(
        "run_pipeline: the table is too short for the training window and "
        "evaluation span");
  }
  if (start_row + config.eval_days > table.n())
    throw std::invalid_argument(
        "run_pipeline: the evaluation span extends past the data");

  std::vector<Index> targets;
  for (Index r = start_row; r < start_row + config.eval_days; r += config.stride)
    targets.push_back(r);

  fs::create_directories(out_dir / "segments");

  const std::array<std::string, 3> model_id = {"rnp", "dnn", "lear"};
  const std::array<std::string, 3> model_display = {"R-NP", "DNN", "LEAR"};
  std::array<EvalAccum, 3> accum;
  std::array<std::vector<Scalar>, 4> perfect_by_case;
  ModelStack stack;

  struct DayOutput {
    DayPrediction mixture;
    Vector dnn_hat;
    Vector lear_hat;
  };

  std::size_t at = 0;
  while (at < targets.size()) {
    const Index lead = targets[at];
    const Date lead_date = table.days[static_cast<std::size_t>(lead)];
    std::size_t batch_end = at;
    while (batch_end < targets.size() &&
           targets[batch_end] - lead < config.reseg_days)
      ++batch_end;

    // ---- (re)build the model stack at the batch's first target day.
    const MarketView lead_view = MarketView::for_target(table, lead);
    SegmentationArtifact seg;
    try {
      auto timer = clock.scope("segment");
      const Vector obs =
          daily_mean_prices(lead_view, lead - config.window, lead);
      SegmentationConfig seg_config = config.segmentation;
      seg_config.seed =
          derive_seed(config.seed, "segment", static_cast<std::uint64_t>(lead));
      const Priors priors = default_priors(obs);
      const SegmentationResult fit = fit_segmentation(obs, seg_config, priors);
      seg.state = compress_regimes(fit.map_state, obs, config.kl_threshold,
                                   config.min_mass, priors);
      seg.config = seg_config;
      seg.map_log_joint = fit.map_log_joint;
      for (Index r = lead - config.window; r < lead; ++r)
        seg.days.push_back(table.days[static_cast<std::size_t>(r)]);
      stack.segmentation_file =
          "segments/segmentation_" + format_date(lead_date) + ".json";
      save_segmentation((out_dir / stack.segmentation_file).string(), seg);
      manifest.outputs.push_back(stack.segmentation_file);
    } catch (const std::exception& e) {
      fail_stage("segment", lead_date, e);
    }

    try {
      auto timer = clock.scope("train");
      std::vector<Index> rows;
      for (Index r = lead - config.window; r < lead; ++r) rows.push_back(r);
      BundleOptions options;
      options.classifier = config.classifier;
      options.classifier.seed = derive_seed(config.seed, "classifier",
                                            static_cast<std::uint64_t>(lead));
      options.cnp = config.cnp;
      options.cnp.seed =
          derive_seed(config.seed, "cnp", static_cast<std::uint64_t>(lead));
      options.context_cap = config.context_cap;
      options.min_regime_size = config.min_regime_size;
      options.tune_trials = config.tune_trials;
      stack.bundle = train_model_bundle(lead_view, rows, seg.state.z, options);
      stack.bundle.bundle.data_path = config.data_path;
      stack.bundle.bundle.data_fingerprint = manifest.data_fingerprint;
      stack.bundle.bundle.segmentation_path = stack.segmentation_file;

      LearConfig lear_config = config.lear;
      lear_config.jobs = config.jobs;
      stack.lear = lear_fit(lead_view, lead, lear_config);

      const TrainingSet training =
          build_training_set(lead_view, lead, config.window);
      DnnConfig dnn_config = config.dnn;
      dnn_config.seed =
          derive_seed(config.seed, "dnn", static_cast<std::uint64_t>(lead));
      if (config.tune_trials > 0)
        dnn_config = dnn_random_search(training.inputs, training.targets,
                                       dnn_config, config.tune_trials)
                         .best;
      stack.dnn = dnn_fit(training.inputs, training.targets, dnn_config);
      stack.trained_for = lead;
    } catch (const std::exception& e) {
      fail_stage("train", lead_date, e);
    }
    if (log)
      *log << "[train] " << format_date(lead_date) << ": "
           << stack.bundle.bundle.members.size() << " regimes (segmentation "
           << seg.state.regimes << ", merged "
           << seg.state.regimes - stack.bundle.merge.regimes << ")\n";

    // ---- forecasts for every day of the batch, up to `jobs` at once.
    const std::size_t batch_size = batch_end - at;
    std::vector<DayOutput> outputs(batch_size);
    try {
      auto timer = clock.scope("predict");
      parallel_for(batch_size, config.jobs, [&](std::size_t b) {
        const Index r = targets[at + b];
        const MarketView view = MarketView::for_target(table, r);
        const Vector features = build_features(view, r);
        outputs[b].mixture =
            predict_day(stack.bundle.bundle, features,
                        table.days[static_cast<std::size_t>(r)], config.coverage);
        outputs[b].dnn_hat = dnn_predict(stack.dnn, features);
        outputs[b].lear_hat = lear_predict(stack.lear, lear_features(view, r));
      });
    } catch (const std::exception& e) {
      fail_stage("predict", lead_date, e);
    }
    if (log)
      *log << "[predict] " << format_date(table.days[static_cast<std::size_t>(targets[at])])
           << " .. "
           << format_date(table.days[static_cast<std::size_t>(targets[batch_end - 1])])
           << ": " << batch_size << " day(s)\n";

    // ---- dispatch and error bookkeeping, sequential in day order.
    for (std::size_t b = 0; b < batch_size; ++b) {
      const Index r = targets[at + b];
      const Date day = table.days[static_cast<std::size_t>(r)];
      try {
        auto timer = clock.scope("dispatch");
        const Vector price_real = table.price.row(r).transpose();
        const SiteProfiles site = simulate_site_profiles(day, config.site);
        RealizedInputs real;
        real.price = price_real;
        real.residual_load = site.residual;
        real.solar = site.solar;
        real.demand = site.demand;

        std::array<Scalar, 4> perfect{};
        for (int n = 1; n <= 4; ++n) {
          const DispatchCase c = case_from_number(n);
          perfect[static_cast<std::size_t>(n - 1)] =
              perfect_foresight(c, real, config.strategy, config.battery)
                  .objective;
          perfect_by_case[static_cast<std::size_t>(n - 1)].push_back(
              perfect[static_cast<std::size_t>(n - 1)]);
        }

        for (std::size_t m = 0; m < 3; ++m) {
          const Vector& price_hat =
              m == 0 ? outputs[b].mixture.mixture.agg_mean
                     : (m == 1 ? outputs[b].dnn_hat : outputs[b].lear_hat);
          const Vector sigma =
              m == 0 ? outputs[b].mixture.mixture.agg_var.cwiseSqrt()
                     : rolling_sigma(accum[m], config);
          for (int n = 1; n <= 4; ++n) {
            const DispatchCase c = case_from_number(n);
            Schedule plan;
            switch (n) {
              case 1:
                plan = plan_case1(price_hat, config.battery);
                break;
              case 2:
                plan = plan_case2(price_hat, sigma, config.strategy.lambda1,
                                  config.strategy.lambda2, config.battery);
                break;
              case 3:
                plan = plan_case3(price_hat, sigma, site.residual, site.solar,
                                  config.strategy.lambda, config.strategy.mu,
                                  config.strategy.gamma, config.battery);
                break;
              default:
                plan = plan_case4(price_hat, sigma, site.demand,
                                  config.strategy.lambda, config.battery);
                break;
            }
            const std::string violation = check_schedule(
                plan, config.battery, n == 4 ? &site.demand : nullptr);
            if (!violation.empty())
              throw std::runtime_error("case " + std::string(case_label(c)) +
                                       " (" + model_id[m] + "): " + violation);
            const Scalar realized =
                realized_value(c, plan, real, config.strategy, config.battery);
            accum[m].schedules.push_back(make_schedule_record(
                day, plan, realized, perfect[static_cast<std::size_t>(n - 1)]));
            accum[m].realized_by_case[static_cast<std::size_t>(n - 1)]
                .push_back(realized);
          }
        }
      } catch (const std::exception& e) {
        fail_stage("dispatch", day, e);
      }

      // Record the day's forecasts and errors for later days' sigma.
      accum[0].forecasts.push_back(outputs[b].mixture.forecast);
      accum[1].forecasts.push_back(point_forecast_day(day, outputs[b].dnn_hat));
      accum[2].forecasts.push_back(point_forecast_day(day, outputs[b].lear_hat));
      const Vector price_real = table.price.row(r).transpose();
      for (std::size_t m = 0; m < 3; ++m) {
        accum[m].recent_errors.push_back(accum[m].forecasts.back().mean -
                                         price_real);
        while (static_cast<Index>(accum[m].recent_errors.size()) >
               config.sigma_window)
          accum[m].recent_errors.pop_front();
      }
    }
    at = batch_end;
  }

  // ---- score and write everything.
  try {
    auto timer = clock.scope("write");

    std::vector<MetricsRow> metric_rows;
    for (std::size_t m = 0; m < 3; ++m) {
      const std::vector<MetricsRow> rows = score_forecasts(
          model_id[m], accum[m].forecasts, table, config.crps_samples,
          config.seed);
      metric_rows.insert(metric_rows.end(), rows.begin(), rows.end());
    }
    write_metrics_csv((out_dir / "metrics.csv").string(), metric_rows);
    manifest.outputs.push_back("metrics.csv");

    for (std::size_t m = 0; m < 3; ++m) {
      const std::string forecast_file = "forecasts_" + model_id[m] + ".csv";
      write_forecast_csv((out_dir / forecast_file).string(),
                         accum[m].forecasts);
      manifest.outputs.push_back(forecast_file);
      const std::string dispatch_file = "dispatch_" + model_id[m] + ".csv";
      write_schedule_csv((out_dir / dispatch_file).string(),
                         accum[m].schedules);
      manifest.outputs.push_back(dispatch_file);
    }

    // Pairwise equal-accuracy tests on the pooled hourly errors.
    {
      const std::size_t hours = accum[0].forecasts.size() * kHoursPerDay;
      std::array<Vector, 3> errors;
      for (std::size_t m = 0; m < 3; ++m) {
        errors[m].resize(static_cast<Index>(hours));
        Index i = 0;
        for (const ForecastDay& d : accum[m].forecasts) {
          const Vector y =
              table.price.row(table.index_of(d.day)).transpose();
          for (Index h = 0; h < kHoursPerDay; ++h)
            errors[m][i++] = y[h] - d.mean[h];
        }
      }
      std::vector<std::vector<std::string>> rows;
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
          for (const DmLoss loss : {DmLoss::SquaredError, DmLoss::AbsoluteError}) {
            const TestResult t = dm_test(errors[a], errors[b],
                                         static_cast<int>(kHoursPerDay), loss);
            rows.push_back({model_id[a], model_id[b],
                            loss == DmLoss::SquaredError ? "squared" : "absolute",
                            format_number(t.statistic), format_number(t.p_value),
                            t.degenerate ? "true" : "false"});
          }
      write_csv((out_dir / "dm_tests.csv").string(),
                {"model_a", "model_b", "loss", "statistic", "p_value",
                 "degenerate"},
                rows);
      manifest.outputs.push_back("dm_tests.csv");
    }

    // Rank tests over per-day MAE blocks (needs two or more days).
    if (accum[0].forecasts.size() >= 2) {
      const Index b = static_cast<Index>(accum[0].forecasts.size());
      Matrix day_mae(b, 3);
      for (std::size_t m = 0; m < 3; ++m)
        for (Index d = 0; d < b; ++d) {
          const ForecastDay& f = accum[m].forecasts[static_cast<std::size_t>(d)];
          const Vector y = table.price.row(table.index_of(f.day)).transpose();
          day_mae(d, static_cast<Index>(m)) = (f.mean - y).cwiseAbs().mean();
        }
      const FriedmanNemenyi ranks = friedman_nemenyi(day_mae, true);
      std::vector<std::vector<std::string>> rows;
      for (std::size_t m = 0; m < 3; ++m)
        rows.push_back({model_id[m],
                        format_number(ranks.mean_ranks[static_cast<Index>(m)]),
                        format_number(ranks.friedman.statistic),
                        format_number(ranks.friedman.p_value)});
      write_csv((out_dir / "friedman.csv").string(),
                {"model", "mean_rank", "friedman_statistic", "friedman_p"},
                rows);
      manifest.outputs.push_back("friedman.csv");
      rows.clear();
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t bb = a + 1; bb < 3; ++bb)
          rows.push_back({model_id[a], model_id[bb],
                          format_number(ranks.nemenyi_p(
                              static_cast<Index>(a), static_cast<Index>(bb)))});
      write_csv((out_dir / "nemenyi.csv").string(),
                {"model_a", "model_b", "p_value"}, rows);
      manifest.outputs.push_back("nemenyi.csv");
    }

    // Multi-criteria matrix: accuracy, operation value, and regret.
    {
      DecisionMatrix dm;
      dm.alternatives = {model_display[0], model_display[1], model_display[2]};
      dm.criteria = {"mae",          "rmse",          "mape",
                     "smape",        "value_case_i",  "value_case_ii",
                     "value_case_iii", "cost_case_iv", "regret_case_i",
                     "regret_case_ii", "regret_case_iii", "regret_case_iv"};
      dm.directions = {Direction::Minimize, Direction::Minimize,
                       Direction::Minimize, Direction::Minimize,
                       Direction::Maximize, Direction::Maximize,
                       Direction::Maximize, Direction::Minimize,
                       Direction::Minimize, Direction::Minimize,
                       Direction::Minimize, Direction::Minimize};
      dm.weights = Vector::Constant(12, 1.0 / 12.0);
      dm.values.resize(3, 12);
      const auto mean_of = [](const std::vector<Scalar>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) /
               static_cast<Scalar>(v.size());
      };
      for (std::size_t m = 0; m < 3; ++m) {
        const auto all_row = std::find_if(
            metric_rows.begin(), metric_rows.end(), [&](const MetricsRow& r) {
              return r.model == model_id[m] && r.period == "all";
            });
        const MetricsRow& all = *all_row;
        dm.values(static_cast<Index>(m), 0) = all.mae;
        dm.values(static_cast<Index>(m), 1) = all.rmse;
        dm.values(static_cast<Index>(m), 2) = all.mape;
        dm.values(static_cast<Index>(m), 3) = all.smape;
        for (std::size_t n = 0; n < 4; ++n) {
          const Scalar realized = mean_of(accum[m].realized_by_case[n]);
          const Scalar ideal = mean_of(perfect_by_case[n]);
          dm.values(static_cast<Index>(m), static_cast<Index>(4 + n)) = realized;
          dm.values(static_cast<Index>(m), static_cast<Index>(8 + n)) =
              std::abs(ideal - realized);
        }
      }
      write_criteria_csv((out_dir / "topsis_matrix.csv").string(), dm);
      manifest.outputs.push_back("topsis_matrix.csv");
      const TopsisResult result = rank(dm);
      write_topsis_scores_csv((out_dir / "topsis_scores.csv").string(), dm,
                              result);
      manifest.outputs.push_back("topsis_scores.csv");
      if (log) {
        *log << "[rank]";
        for (std::size_t r = 0; r < result.order.size(); ++r)
          *log << (r ? " > " : " ")
               << dm.alternatives[static_cast<std::size_t>(result.order[r])];
        *log << "\n";
      }
    }

    save_model_bundle((out_dir / "models").string(), stack.bundle.bundle);
    manifest.outputs.push_back("models/models.json");
    manifest.outputs.push_back("models/classifier.json");
    for (std::size_t k = 0; k < stack.bundle.bundle.members.size(); ++k)
      manifest.outputs.push_back("models/cnp_regime_" + std::to_string(k) +
                                 ".json");
  } catch (const std::exception& e) {
    fail_stage("write", table.days[static_cast<std::size_t>(targets.back())], e);
  }

  for (const auto& [stage, seconds] : clock.seconds)
    manifest.timings.push_back({stage, seconds});
  manifest.outputs.push_back("manifest.json");
  save_manifest((out_dir / "manifest.json").string(), manifest);
  if (log) *log << "[done] " << targets.size() << " evaluated day(s)\n";
  return manifest;
}

}  // namespace regimecast
