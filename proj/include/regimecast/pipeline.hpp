#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "regimecast/artifacts.hpp"
#include "regimecast/assoc.hpp"
#include "regimecast/bench.hpp"
#include "regimecast/cnp.hpp"
#include "regimecast/dispatch.hpp"
#include "regimecast/ingest.hpp"
#include "regimecast/mixture.hpp"
#include "regimecast/regime.hpp"

namespace regimecast {

/// How dispatch obtains per-hour price uncertainty for point forecasts.
/// The mixture model always supplies its own predictive spread; baselines
/// either run risk-neutral (Zero) or use the rolling standard deviation of
/// their own recent hourly errors (Rolling).
enum class BaselineSigma { Zero, Rolling };

BaselineSigma baseline_sigma_from_string(std::string_view text);
const char* baseline_sigma_name(BaselineSigma mode);

/// Deterministic substream seeding: hashes (root, stage, index) so every
/// random draw in a run is reproducible from the manifest seed alone.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                          std::uint64_t index);

/// Full configuration of the rolling day-ahead evaluation.  Field defaults
/// are the study-scale protocol; parse_pipeline_config overrides them from a
/// sectioned key-value file and snapshot_pipeline_config writes the
/// effective values back so a manifest can reproduce the run.
struct PipelineConfig {
  // [data] / [run]
  std::string data_path;
  std::string out_dir = "run";
  std::uint64_t seed = 1;
  Index jobs = 1;
  bool force = false;
  Date eval_start{};
  bool eval_start_set = false;  ///< false: first day with full history
  Index eval_days = 30;
  Index stride = 1;
  Index reseg_days = 7;  ///< retrain cadence of the whole model stack
  Index window = 1460;   ///< training lookback in days

  // [segment] / [compress]
  SegmentationConfig segmentation;
  Scalar kl_threshold = 0.5;
  Scalar min_mass = 0.02;

  // [classifier] / [cnp]
  ClassifierConfig classifier;
  CnpConfig cnp;
  Index context_cap = 512;     ///< most recent pairs kept as context
  Index min_regime_size = 8;   ///< smaller regimes fold into the nearest mean
  Index tune_trials = 0;       ///< random-search trials (0 = fixed configs)

  // [lear] / [dnn]
  LearConfig lear;
  DnnConfig dnn;

  // [dispatch] / [battery] / [strategy] / [site]
  BaselineSigma baseline_sigma = BaselineSigma::Rolling;
  Index sigma_window = 30;    ///< days of errors behind the rolling sigma
  Index sigma_min_days = 5;   ///< fewer recorded days -> sigma 0
  BatteryParams battery;
  StrategyParams strategy;
  SiteConfig site;

  // [metrics]
  Scalar coverage = 0.8;      ///< central-interval mass
  Index crps_samples = 2000;  ///< mixture-CRPS sample count
};

/// Exact inverses: parsing a snapshot yields the same configuration.
PipelineConfig parse_pipeline_config(const ConfigMap& file);
ConfigMap snapshot_pipeline_config(const PipelineConfig& config);

/// Section readers shared with the dispatch command's --battery file.
BatteryParams battery_from_config(const ConfigMap& config);
StrategyParams strategy_from_config(const ConfigMap& config);
SiteConfig site_from_config(const ConfigMap& config);

/// Densely relabeled classes where every class keeps at least min_size
/// members; mapping[k] is the final class of original class k.
struct RegimeMerge {
  std::vector<int> labels;
  Index regimes = 0;
  std::vector<int> mapping;
};

/// Folds each undersized class into the class with the nearest emission
/// mean (weighted by member count when means tie) until all classes hold at
/// least min_size members.  Throws when labels and emissions disagree or
/// min_size exceeds the sample count.
RegimeMerge merge_small_regimes(const std::vector<int>& labels,
                                const std::vector<GaussianEmission>& emissions,
                                Index min_size);

/// Knobs for assembling the predictive stack from labeled days.  Member
/// seeds derive from cnp.seed via derive_seed(cnp.seed, "regime", k).
struct BundleOptions {
  ClassifierConfig classifier;
  CnpConfig cnp;
  Index context_cap = 512;
  Index min_regime_size = 8;
  Index tune_trials = 0;
};

struct BundleResult {
  ModelBundle bundle;
  RegimeMerge merge;
};

/// Trains the regime classifier and one conditional process per (merged)
/// regime on the given table rows and labels.  Features and targets come
/// from the view, so a forecast-origin view enforces the information set.
/// Rows must have at least seven predecessors in the table.
BundleResult train_model_bundle(const MarketView& view,
                                const std::vector<Index>& rows,
                                const std::vector<int>& labels,
                                const BundleOptions& options);

/// Regime-weighted forecast of one day from a trained stack: classifier
/// weights, per-regime predictions on the stored contexts, mixture
/// aggregation, and a central interval of the given coverage.
struct DayPrediction {
  MixtureForecast mixture;
  ForecastDay forecast;
};

DayPrediction predict_day(const ModelBundle& bundle, const Vector& features,
                          Date day, Scalar coverage);

/// Point and probabilistic metrics of one model's forecast days against the
/// actual table, per calendar year plus an "all" row.  CRPS uses the
/// mixture components when a day carries them (seeded pair estimator with
/// crps_samples draws), the aggregate Gaussian when only a variance is
/// stored, and stays absent for point forecasts; interval scores need the
/// stored bands.  Throws when a forecast day is missing from the table.
std::vector<MetricsRow> score_forecasts(const std::string& model,
                                        const std::vector<ForecastDay>& days,
                                        const MarketTable& actuals,
                                        Index crps_samples, std::uint64_t seed);

/// Runs the full rolling evaluation: per target day (eval_start stepping by
/// stride through eval_days) segment the training window's daily means,
/// compress, train the classifier and per-regime processes, forecast with
/// mixture aggregation, run the benchmark forecasters, dispatch all four
/// battery cases under each model's forecast and under realized prices, and
/// accumulate metrics.  The model stack is rebuilt whenever the current one
/// is older than reseg_days; predictions inside such a batch run on up to
/// `jobs` threads with identical results.  Writes every output into
/// config.out_dir (refusing an existing run without `force`) and returns
/// the manifest.  Progress goes to `log` when given.  No stage reads market
/// data dated on or after its target day; realized prices enter only the
/// after-the-fact valuation of that day's plans.
RunManifest run_pipeline(const PipelineConfig& config,
                         std::ostream* log = nullptr);

}  // namespace regimecast
