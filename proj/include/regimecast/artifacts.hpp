#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "regimecast/assoc.hpp"
#include "regimecast/cnp.hpp"
#include "regimecast/dates.hpp"
#include "regimecast/dispatch.hpp"
#include "regimecast/regime.hpp"
#include "regimecast/topsis.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Schema version stamped into every structured artifact; loaders reject
/// files written under a different version.
inline constexpr int kArtifactVersion = 1;

/// Software identifier recorded in run manifests.
inline constexpr const char* kSoftwareVersion = "regimecast 0.1.0";

/// FNV-1a (64 bit) digest of a file's bytes as a 16-digit hex string; used
/// to fingerprint input data in manifests.  Throws when the file cannot be
/// read.
std::string file_fingerprint(const std::string& path);

// ---------------------------------------------------------------------------
// Structured (JSON) artifacts
// ---------------------------------------------------------------------------

/// Fitted segmentation of a daily series: the maximum-a-posteriori sampler
/// state, the run configuration, and the calendar day behind each label.
struct SegmentationArtifact {
  RegimePosterior state;
  SegmentationConfig config;
  Scalar map_log_joint = 0.0;
  std::vector<Date> days;  ///< one calendar day per element of state.z
};

void save_segmentation(const std::string& path,
                       const SegmentationArtifact& artifact);
SegmentationArtifact load_segmentation(const std::string& path);

/// Trained regime classifier plus its training configuration.  The
/// segmentation_version field records the artifact version of the
/// segmentation whose labels it was trained on.
struct ClassifierArtifact {
  Classifier model;
  ClassifierConfig config;
  int segmentation_version = kArtifactVersion;
};

void save_classifier(const std::string& path,
                     const ClassifierArtifact& artifact);
ClassifierArtifact load_classifier(const std::string& path);

/// Trained per-regime conditional process.  The stored context rows are the
/// regime's training pairs (most recent first-capped subset); prediction
/// conditions on them, so they are part of the model.
struct CnpArtifact {
  CnpModel model;
  CnpConfig config;
  int regime = 0;
  Matrix context_x;  ///< n_ctx x x_dim
  Matrix context_y;  ///< n_ctx x y_dim
};

void save_cnp(const std::string& path, const CnpArtifact& artifact);
CnpArtifact load_cnp(const std::string& path);

/// Complete predictive stack for one forecast origin: a regime classifier
/// and one conditional process per regime, with provenance.  Saved as a
/// directory: models.json (index), classifier.json, cnp_regime_<k>.json.
struct ModelBundle {
  ClassifierArtifact classifier;
  std::vector<CnpArtifact> members;  ///< indexed by regime, 0..K-1
  std::string data_path;             ///< market CSV the stack was trained on
  std::string data_fingerprint;
  std::string segmentation_path;     ///< segmentation the labels came from
};

void save_model_bundle(const std::string& dir, const ModelBundle& bundle);
ModelBundle load_model_bundle(const std::string& dir);

/// Wall-clock spent in one pipeline stage, summed across evaluated days.
struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Section -> key -> value view of a configuration file.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

/// Record of one pipeline run: the effective configuration snapshot, the
/// root seed, the fingerprinted input, every file the run wrote, and stage
/// timings.  Re-running from the snapshot reproduces the numeric outputs
/// byte for byte (timings differ).
struct RunManifest {
  std::string software = kSoftwareVersion;
  std::uint64_t seed = 1;
  std::string data_path;
  std::string data_fingerprint;
  ConfigMap config;
  std::vector<std::string> outputs;  ///< paths relative to the run directory
  std::vector<StageTiming> timings;
};

void save_manifest(const std::string& path, const RunManifest& manifest);
RunManifest load_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Configuration files
// ---------------------------------------------------------------------------

/// Parse a key-value configuration file with [section] headers, '=' pairs,
/// blank lines, and '#' or ';' comments.  Keys outside any section go under
/// "".  Throws std::runtime_error on unreadable files or malformed lines.
ConfigMap load_config_file(const std::string& path);

/// Write a ConfigMap in the load_config_file format.
void save_config_file(const std::string& path, const ConfigMap& config);

/// Lookup with a default for absent sections or keys.
std::string config_get(const ConfigMap& config, const std::string& section,
                       const std::string& key, const std::string& fallback);

// ---------------------------------------------------------------------------
// Tabular (CSV) outputs
// ---------------------------------------------------------------------------

/// One day's forecast.  mean is always 24 hourly values; variance and the
/// interval bounds are empty for point forecasts.  weights / member_mean /
/// member_var describe the per-regime mixture components and are empty for
/// single-model forecasts.
struct ForecastDay {
  Date day{};
  Vector mean;
  Vector variance;
  Vector lower;
  Vector upper;
  Vector weights;      ///< K
  Matrix member_mean;  ///< K x 24
  Matrix member_var;   ///< K x 24
};

/// Header: date,hour,mean,variance,lower80,upper80[,weight_k,mean_k,var_k...]
/// with one row per hour and empty cells where a day lacks the quantity.
/// The component column count is the maximum K over the days.
void write_forecast_csv(const std::string& path,
                        const std::vector<ForecastDay>& days);
std::vector<ForecastDay> read_forecast_csv(const std::string& path);

/// One day of one dispatch case, flattened for CSV exchange: hourly flows,
/// end-of-hour state of charge, and the day-level objective values.
struct ScheduleRecord {
  Date day{};
  DispatchCase case_id = DispatchCase::CaseI;
  Vector charge;     ///< 24
  Vector discharge;  ///< 24
  Vector soc;        ///< 24, state after each hour
  Scalar predicted = 0.0;  ///< planner objective under the forecast
  Scalar realized = 0.0;   ///< plan value under realized prices
  Scalar perfect = 0.0;    ///< perfect-foresight bound
};

/// Drops the leading state-of-charge entry of a planner schedule.
ScheduleRecord make_schedule_record(Date day, const Schedule& plan,
                                    Scalar realized, Scalar perfect);

/// Header: date,hour,charge,discharge,soc,case,predicted_objective,
/// realized_value,pf_value; 24 rows per record, case as its Roman label.
void write_schedule_csv(const std::string& path,
                        const std::vector<ScheduleRecord>& records);
std::vector<ScheduleRecord> read_schedule_csv(const std::string& path);

/// One row of the evaluation report: a model's metrics over one period
/// (a calendar year, or "all").  NaN marks metrics a model cannot provide
/// (probabilistic scores for point forecasts); they round-trip as empty
/// cells.
struct MetricsRow {
  std::string model;
  std::string period;
  Index days = 0;
  Scalar mae = 0.0;
  Scalar rmse = 0.0;
  Scalar mape = 0.0;
  Scalar smape = 0.0;
  Scalar crps = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar picp80 = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar mpiw80 = std::numeric_limits<Scalar>::quiet_NaN();
};

/// Header: model,period,days,mae,rmse,mape,smape,crps,picp80,mpiw80.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Long-form decision matrix exchange.  Header:
/// alternative,criterion,value,direction,weight.  Criteria and alternatives
/// keep first-appearance order; every (alternative, criterion) pair must
/// appear exactly once and a criterion's direction/weight must not vary.
void write_criteria_csv(const std::string& path, const DecisionMatrix& matrix);
DecisionMatrix read_criteria_csv(const std::string& path);

/// Ranking output, best first.  Header: alternative,closeness,rank.
void write_topsis_scores_csv(const std::string& path,
                             const DecisionMatrix& matrix,
                             const TopsisResult& result);

}  // namespace regimecast
