// Command-line frontend: segmentation, classification, model training,
// forecasting, battery dispatch, evaluation, ranking, and the full rolling
// pipeline.  Every command writes the documented CSV/JSON artifacts; all
// randomness derives from --seed.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "regimecast/artifacts.hpp"
#include "regimecast/csv.hpp"
#include "regimecast/pipeline.hpp"
#include "regimecast/synth.hpp"

namespace rc = regimecast;
namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::uint64_t seed = 1;
  rc::Index jobs = 1;
  std::string out;
  bool seed_set = false;
  bool jobs_set = false;
  bool out_set = false;
};

std::string effective_out(const GlobalFlags& global, const std::string& local,
                          const std::string& fallback) {
  if (!local.empty()) return local;
  if (global.out_set) return global.out;
  return fallback;
}

/// Table rows and labels for the days a segmentation artifact covers.
/// Days missing from the table are an error; days without the seven-day
/// feature history are skipped (reported via `skipped`).
void align_segmentation(const rc::SegmentationArtifact& artifact,
                        const rc::MarketTable& table,
                        std::vector<rc::Index>& rows, std::vector<int>& labels,
                        rc::Index& skipped) {
  rows.clear();
  labels.clear();
  skipped = 0;
  for (std::size_t i = 0; i < artifact.days.size(); ++i) {
    const rc::Index row = table.index_of(artifact.days[i]);
    if (row < 0)
      throw std::runtime_error("segmentation day " +
                               rc::format_date(artifact.days[i]) +
                               " is not in the market data");
    if (row < 7) {
      ++skipped;
      continue;
    }
    rows.push_back(row);
    labels.push_back(artifact.state.z[i]);
  }
  if (rows.empty())
    throw std::runtime_error(
        "no segmentation day has the seven-day feature history");
}

// ---------------------------------------------------------------------------

struct SegmentArgs {
  std::string data;
  std::string variant = "ds";
  rc::Index sweeps = 1500;
  rc::Index burn_in = 500;
  rc::Index max_regimes = 50;
  double sticky_kappa = 1.0;
  bool compress = false;
  double kl_threshold = 0.5;
  double min_mass = 0.02;
  std::string out;
};

int cmd_segment(const GlobalFlags& global, const SegmentArgs& args) {
  const rc::MarketTable table = rc::load_market_csv(args.data);
  table.validate();
  const rc::MarketView view = rc::MarketView::full(table);
  const rc::Vector obs = rc::daily_mean_prices(view, 0, table.n());

  rc::SegmentationConfig config;
  config.variant = rc::variant_from_string(args.variant);
  config.sweeps = args.sweeps;
  config.burn_in = args.burn_in;
  config.max_regimes = args.max_regimes;
  config.sticky_kappa = args.sticky_kappa;
  config.seed = global.seed;
  const rc::Priors priors = rc::default_priors(obs);
  const rc::SegmentationResult fit = rc::fit_segmentation(obs, config, priors);

  rc::SegmentationArtifact artifact;
  artifact.state = args.compress
                       ? rc::compress_regimes(fit.map_state, obs,
                                              args.kl_threshold, args.min_mass,
                                              priors)
                       : fit.map_state;
  artifact.config = config;
  artifact.map_log_joint = fit.map_log_joint;
  artifact.days = table.days;

  const std::string out = effective_out(global, args.out, "segmentation.json");
  rc::save_segmentation(out, artifact);
  std::cout << "segmented " << table.n() << " days into "
            << artifact.state.regimes << " regimes (variant "
            << rc::variant_name(config.variant) << ", map log joint "
            << rc::format_number(fit.map_log_joint) << ")\n"
            << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string segmentation;
  std::string data;
  std::string report;
  std::string artifact_out;
  int epochs = rc::ClassifierConfig{}.epochs;
};

int cmd_classify(const GlobalFlags& global, const ClassifyArgs& args) {
  const rc::SegmentationArtifact artifact =
      rc::load_segmentation(args.segmentation);
  const rc::MarketTable table = rc::load_market_csv(args.data);
  table.validate();

  std::vector<rc::Index> rows;
  std::vector<int> labels;
  rc::Index skipped = 0;
  align_segmentation(artifact, table, rows, labels, skipped);
  if (skipped > 0)
    std::cerr << "note: skipped " << skipped
              << " day(s) without the seven-day feature history\n";

  const rc::Index m = static_cast<rc::Index>(rows.size());
  rc::Matrix X(m, rc::kFeatureDim);
  for (rc::Index i = 0; i < m; ++i)
    X.row(i) = rc::build_features(table, rows[static_cast<std::size_t>(i)])
                   .transpose();

  rc::ClassifierConfig config;
  config.epochs = args.epochs;
  config.seed = global.seed;
  const rc::ClassifierFit fit = rc::fit_regime_classifier(X, labels, config);
  const rc::DependenceReport report =
      rc::classification_report(fit.model, X, labels);

  std::vector<std::vector<std::string>> lines;
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const rc::ClassMetrics& c = report.per_class[k];
    lines.push_back({std::to_string(k), rc::format_number(c.precision),
                     rc::format_number(c.recall), rc::format_number(c.f1),
                     std::to_string(c.support), "", ""});
  }
  lines.push_back({"overall", "", "", "", std::to_string(m),
                   rc::format_number(report.accuracy),
                   rc::format_number(report.weighted_f1)});
  rc::write_csv(args.report,
                {"class", "precision", "recall", "f1", "support", "accuracy",
                 "weighted_f1"},
                lines);
  std::cout << "classified " << m << " days into "
            << report.per_class.size() << " regimes; accuracy "
            << rc::format_number(report.accuracy) << ", weighted F1 "
            << rc::format_number(report.weighted_f1) << "\n"
            << "wrote " << args.report << "\n";

  const std::string artifact_out =
      effective_out(global, args.artifact_out, "");
  if (!artifact_out.empty()) {
    rc::ClassifierArtifact out;
    out.model = fit.model;
    out.config = config;
    rc::save_classifier(artifact_out, out);
    std::cout << "wrote " << artifact_out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string segmentation;
  std::string data;
  std::string out_dir;
  rc::Index context_cap = 512;
  rc::Index min_regime_size = 8;
  rc::Index tune_trials = 0;
  int classifier_epochs = rc::ClassifierConfig{}.epochs;
  int cnp_epochs = rc::CnpConfig{}.epochs;
};

int cmd_train(const GlobalFlags& global, const TrainArgs& args) {
  const rc::SegmentationArtifact artifact =
      rc::load_segmentation(args.segmentation);
  const rc::MarketTable table = rc::load_market_csv(args.data);
  table.validate();

  std::vector<rc::Index> rows;
  std::vector<int> labels;
  rc::Index skipped = 0;
  align_segmentation(artifact, table, rows, labels, skipped);
  if (skipped > 0)
    std::cerr << "note: skipped " << skipped
              << " day(s) without the seven-day feature history\n";

  rc::BundleOptions options;
  options.classifier.epochs = args.classifier_epochs;
  options.classifier.seed = rc::derive_seed(global.seed, "classifier", 0);
  options.cnp.epochs = args.cnp_epochs;
  options.cnp.seed = rc::derive_seed(global.seed, "cnp", 0);
  options.context_cap = args.context_cap;
  options.min_regime_size = args.min_regime_size;
  options.tune_trials = args.tune_trials;

  const rc::MarketView view = rc::MarketView::full(table);
  rc::BundleResult result =
      rc::train_model_bundle(view, rows, labels, options);
  result.bundle.data_path = args.data;
  result.bundle.data_fingerprint = rc::file_fingerprint(args.data);
  result.bundle.segmentation_path = args.segmentation;

  const std::string out_dir = effective_out(global, args.out_dir, "models");
  rc::save_model_bundle(out_dir, result.bundle);
  std::cout << "trained " << result.bundle.members.size()
            << " per-regime processes";
  if (result.merge.regimes <
      static_cast<rc::Index>(result.merge.mapping.size()))
    std::cout << " (" << result.merge.mapping.size() - static_cast<std::size_t>(result.merge.regimes)
              << " undersized regime(s) folded)";
  std::cout << " from " << rows.size() << " days\n"
            << "wrote " << out_dir << "/\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string models;
  std::string date;
  std::string data;
  double coverage = 0.8;
  std::string out;
};

int cmd_predict(const GlobalFlags& global, const PredictArgs& args) {
  const rc::ModelBundle bundle = rc::load_model_bundle(args.models);
  const std::string data_path =
      args.data.empty() ? bundle.data_path : args.data;
  if (data_path.empty())
    throw std::runtime_error(
        "the model bundle records no data path; pass --data");
  const rc::MarketTable table = rc::load_market_csv(data_path);
  table.validate();
  if (rc::file_fingerprint(data_path) != bundle.data_fingerprint)
    std::cerr << "warning: " << data_path
              << " differs from the data the models were trained on\n";

  const rc::Date day = rc::parse_date(args.date);
  const rc::Index row = table.index_of(day);
  if (row < 0)
    throw std::runtime_error(
        "target day " + args.date +
        " is not in the market data (its exogenous forecasts are needed)");
  if (row < 7)
    throw std::runtime_error("target day " + args.date +
                             " lacks the seven-day feature history");

  const rc::MarketView view = rc::MarketView::for_target(table, row);
  const rc::DayPrediction prediction = rc::predict_day(
      bundle, rc::build_features(view, row), day, args.coverage);

  const std::string out = effective_out(global, args.out, "forecast.csv");
  rc::write_forecast_csv(out, {prediction.forecast});
  const rc::Vector& mean = prediction.forecast.mean;
  std::cout << "forecast for " << args.date << ": mean "
            << rc::format_number(mean.mean()) << " (hourly "
            << rc::format_number(mean.minCoeff()) << " .. "
            << rc::format_number(mean.maxCoeff()) << "), regime weights";
  for (rc::Index k = 0; k < prediction.forecast.weights.size(); ++k)
    std::cout << ' ' << rc::format_number(prediction.forecast.weights[k]);
  std::cout << "\nwrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DispatchArgs {
  int case_number = 1;
  std::string forecasts;
  std::string battery;
  std::string data;
  std::string sigma_mode = "forecast";
  std::string out;
};

int cmd_dispatch(const GlobalFlags& global, const DispatchArgs& args) {
  const std::vector<rc::ForecastDay> days =
      rc::read_forecast_csv(args.forecasts);
  if (days.empty()) throw std::runtime_error("no forecast days to dispatch");
  if (args.sigma_mode != "forecast" && args.sigma_mode != "zero")
    throw std::runtime_error("--sigma must be 'forecast' or 'zero'");

  rc::BatteryParams battery;
  rc::StrategyParams strategy;
  rc::SiteConfig site;
  if (!args.battery.empty()) {
    const rc::ConfigMap file = rc::load_config_file(args.battery);
    battery = rc::battery_from_config(file);
    strategy = rc::strategy_from_config(file);
    site = rc::site_from_config(file);
  }

  rc::MarketTable table;
  const bool has_actuals = !args.data.empty();
  if (has_actuals) {
    table = rc::load_market_csv(args.data);
    table.validate();
  }

  const rc::DispatchCase c = rc::case_from_number(args.case_number);
  std::vector<rc::ScheduleRecord> records;
  for (const rc::ForecastDay& day : days) {
    const rc::Vector& price_hat = day.mean;
    const rc::Vector sigma =
        (args.sigma_mode == "forecast" &&
         day.variance.size() == rc::kHoursPerDay)
            ? day.variance.cwiseSqrt().eval()
            : rc::Vector::Zero(rc::kHoursPerDay).eval();
    const rc::SiteProfiles profiles =
        rc::simulate_site_profiles(day.day, site);

    rc::Schedule plan;
    switch (args.case_number) {
      case 1:
        plan = rc::plan_case1(price_hat, battery);
        break;
      case 2:
        plan = rc::plan_case2(price_hat, sigma, strategy.lambda1,
                              strategy.lambda2, battery);
        break;
      case 3:
        plan = rc::plan_case3(price_hat, sigma, profiles.residual,
                              profiles.solar, strategy.lambda, strategy.mu,
                              strategy.gamma, battery);
        break;
      default:
        plan = rc::plan_case4(price_hat, sigma, profiles.demand,
                              strategy.lambda, battery);
        break;
    }
    const std::string violation = rc::check_schedule(
        plan, battery, args.case_number == 4 ? &profiles.demand : nullptr);
    if (!violation.empty())
      throw std::runtime_error("schedule for " + rc::format_date(day.day) +
                               ": " + violation);

    rc::Scalar realized = std::numeric_limits<rc::Scalar>::quiet_NaN();
    rc::Scalar perfect = std::numeric_limits<rc::Scalar>::quiet_NaN();
    if (has_actuals) {
      const rc::Index row = table.index_of(day.day);
      if (row < 0)
        throw std::runtime_error("day " + rc::format_date(day.day) +
                                 " is not in the market data");
      rc::RealizedInputs real;
      real.price = table.price.row(row).transpose();
      real.residual_load = profiles.residual;
      real.solar = profiles.solar;
      real.demand = profiles.demand;
      realized = rc::realized_value(c, plan, real, strategy, battery);
      perfect = rc::perfect_foresight(c, real, strategy, battery).objective;
    }
    records.push_back(rc::make_schedule_record(day.day, plan, realized, perfect));
    std::cout << rc::format_date(day.day) << " case "
              << rc::case_label(c) << ": planned "
              << rc::format_number(plan.objective);
    if (has_actuals)
      std::cout << ", realized " << rc::format_number(realized)
                << ", perfect foresight " << rc::format_number(perfect);
    std::cout << "\n";
  }

  const std::string out = effective_out(global, args.out, "schedule.csv");
  rc::write_schedule_csv(out, records);
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> forecasts;
  std::string actuals;
  rc::Index crps_samples = 2000;
  std::string out;
};

int cmd_evaluate(const GlobalFlags& global, const EvaluateArgs& args) {
  const rc::MarketTable table = rc::load_market_csv(args.actuals);
  table.validate();
  std::vector<rc::MetricsRow> rows;
  for (const std::string& path : args.forecasts) {
    const std::vector<rc::ForecastDay> days = rc::read_forecast_csv(path);
    const std::string model = fs::path(path).stem().string();
    const std::vector<rc::MetricsRow> scored = rc::score_forecasts(
        model, days, table, args.crps_samples, global.seed);
    rows.insert(rows.end(), scored.begin(), scored.end());
  }
  const std::string out = effective_out(global, args.out, "metrics.csv");
  rc::write_metrics_csv(out, rows);
  std::cout << std::left << std::setw(22) << "model" << std::setw(8)
            << "period" << std::right << std::setw(10) << "mae"
            << std::setw(10) << "rmse" << std::setw(10) << "smape"
            << std::setw(10) << "crps" << "\n";
  for (const rc::MetricsRow& r : rows) {
    std::cout << std::left << std::setw(22) << r.model << std::setw(8)
              << r.period << std::right << std::fixed << std::setprecision(3)
              << std::setw(10) << r.mae << std::setw(10) << r.rmse
              << std::setw(10) << r.smape;
    if (std::isnan(r.crps))
      std::cout << std::setw(10) << "-";
    else
      std::cout << std::setw(10) << r.crps;
    std::cout << "\n" << std::defaultfloat;
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TopsisArgs {
  std::string matrix;
  std::string out;
};

int cmd_topsis(const GlobalFlags& global, const TopsisArgs& args) {
  const rc::DecisionMatrix matrix = rc::read_criteria_csv(args.matrix);
  const rc::TopsisResult result = rc::rank(matrix);
  const std::string out = effective_out(global, args.out, "topsis_scores.csv");
  rc::write_topsis_scores_csv(out, matrix, result);
  for (std::size_t r = 0; r < result.order.size(); ++r) {
    const rc::Index i = result.order[r];
    std::cout << (r + 1) << ". "
              << matrix.alternatives[static_cast<std::size_t>(i)]
              << "  closeness " << rc::format_number(result.closeness[i])
              << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string manifest;
  std::string data;
  std::string eval_start;
  rc::Index eval_days = 0;
  rc::Index stride = 0;
  rc::Index reseg_days = 0;
  rc::Index window = 0;
  bool force = false;
  bool eval_days_set = false;
  bool stride_set = false;
  bool reseg_set = false;
  bool window_set = false;
};

int cmd_run(const GlobalFlags& global, const RunArgs& args) {
  rc::PipelineConfig config;
  if (!args.manifest.empty()) {
    const rc::RunManifest previous = rc::load_manifest(args.manifest);
    config = rc::parse_pipeline_config(previous.config);
    config.seed = previous.seed;
    if (fs::exists(config.data_path) &&
        rc::file_fingerprint(config.data_path) != previous.data_fingerprint)
      std::cerr << "warning: " << config.data_path
                << " differs from the manifest's data fingerprint\n";
  } else if (!args.config.empty()) {
    config = rc::parse_pipeline_config(rc::load_config_file(args.config));
  } else {
    throw std::runtime_error("run needs --config or --manifest");
  }

  if (!args.data.empty()) config.data_path = args.data;
  if (global.seed_set) config.seed = global.seed;
  if (global.jobs_set) config.jobs = global.jobs;
  if (global.out_set) config.out_dir = global.out;
  if (!args.eval_start.empty()) {
    config.eval_start = rc::parse_date(args.eval_start);
    config.eval_start_set = true;
  }
  if (args.eval_days_set) config.eval_days = args.eval_days;
  if (args.stride_set) config.stride = args.stride;
  if (args.reseg_set) config.reseg_days = args.reseg_days;
  if (args.window_set) config.window = args.window;
  if (args.force) config.force = true;

  const rc::RunManifest manifest = rc::run_pipeline(config, &std::cout);
  std::cout << "wrote " << (fs::path(config.out_dir) / "manifest.json").string()
            << " (" << manifest.outputs.size() << " artifacts)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string run_dir;
};

int cmd_report(const GlobalFlags&, const ReportArgs& args) {
  const fs::path dir(args.run_dir);
  const rc::RunManifest manifest =
      rc::load_manifest((dir / "manifest.json").string());
  std::cout << manifest.software << "  seed " << manifest.seed << "\n"
            << "data: " << manifest.data_path << " (fingerprint "
            << manifest.data_fingerprint << ")\n\nstage timings:\n";
  double total = 0.0;
  for (const rc::StageTiming& t : manifest.timings) total += t.seconds;
  for (const rc::StageTiming& t : manifest.timings)
    std::cout << "  " << std::left << std::setw(10) << t.stage << std::right
              << std::fixed << std::setprecision(2) << std::setw(9)
              << t.seconds << " s\n";
  std::cout << "  " << std::left << std::setw(10) << "total" << std::right
            << std::setw(9) << total << " s\n"
            << std::defaultfloat;

  if (fs::exists(dir / "metrics.csv")) {
    std::cout << "\nforecast metrics:\n";
    for (const rc::MetricsRow& r :
         rc::read_metrics_csv((dir / "metrics.csv").string())) {
      std::cout << "  " << std::left << std::setw(6) << r.model
                << std::setw(6) << r.period << std::right << std::fixed
                << std::setprecision(3) << " mae " << std::setw(8) << r.mae
                << "  rmse " << std::setw(8) << r.rmse;
      if (!std::isnan(r.crps))
        std::cout << "  crps " << std::setw(8) << r.crps;
      if (!std::isnan(r.picp80))
        std::cout << "  picp " << std::setw(6) << r.picp80;
      std::cout << "\n" << std::defaultfloat;
    }
  }
  if (fs::exists(dir / "topsis_scores.csv")) {
    std::cout << "\nranking:\n";
    const rc::CsvTable scores =
        rc::read_csv((dir / "topsis_scores.csv").string());
    for (const std::vector<std::string>& row : scores.rows)
      std::cout << "  " << row[2] << ". " << row[0] << "  closeness "
                << row[1] << "\n";
  }
  std::cout << "\n" << manifest.outputs.size() << " artifacts in "
            << args.run_dir << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{
      "Regime-conditioned probabilistic day-ahead electricity price "
      "forecasting with battery dispatch"};
  app.require_subcommand(1);
  GlobalFlags global;
  auto* seed_opt =
      app.add_option("--seed", global.seed, "Root random seed")
          ->capture_default_str();
  auto* jobs_opt =
      app.add_option("--jobs", global.jobs,
                     "Concurrent forecast days within a batch")
          ->capture_default_str();
  auto* out_opt = app.add_option(
      "--out", global.out, "Output path (overrides the command default)");

  SegmentArgs segment_args;
  auto* segment = app.add_subcommand(
      "segment", "Segment daily mean prices into market regimes");
  segment->fallthrough();
  segment->add_option("--data", segment_args.data, "Market CSV")->required();
  segment->add_option("--variant", segment_args.variant, "hdp, sticky, or ds")
      ->capture_default_str();
  segment->add_option("--sweeps", segment_args.sweeps, "Gibbs sweeps")
      ->capture_default_str();
  segment->add_option("--burn-in", segment_args.burn_in, "Burn-in sweeps")
      ->capture_default_str();
  segment
      ->add_option("--max-regimes", segment_args.max_regimes,
                   "Regime-count cap")
      ->capture_default_str();
  segment
      ->add_option("--sticky-kappa", segment_args.sticky_kappa,
                   "Self-transition boost of the sticky variant")
      ->capture_default_str();
  segment->add_flag("--compress", segment_args.compress,
                    "Merge statistically indistinct regimes after fitting");
  segment
      ->add_option("--kl-threshold", segment_args.kl_threshold,
                   "Symmetric KL merge threshold")
      ->capture_default_str();
  segment
      ->add_option("--min-mass", segment_args.min_mass,
                   "Minimum regime occupancy fraction")
      ->capture_default_str();
  segment->add_option("--out", segment_args.out,
                      "Output artifact (default segmentation.json)");

  ClassifyArgs classify_args;
  auto* classify = app.add_subcommand(
      "classify", "Train the regime classifier and report its association");
  classify->fallthrough();
  classify
      ->add_option("--segmentation", classify_args.segmentation,
                   "Segmentation artifact")
      ->required();
  classify->add_option("--data", classify_args.data, "Market CSV")->required();
  classify->add_option("--report", classify_args.report, "Report CSV")
      ->required();
  classify->add_option("--epochs", classify_args.epochs, "Training epochs")
      ->capture_default_str();
  classify->add_option("--out", classify_args.artifact_out,
                       "Also save the classifier artifact here");

  TrainArgs train_args;
  auto* train = app.add_subcommand(
      "train", "Train the classifier and one forecaster per regime");
  train->fallthrough();
  train
      ->add_option("--segmentation", train_args.segmentation,
                   "Segmentation artifact")
      ->required();
  train->add_option("--data", train_args.data, "Market CSV")->required();
  train->add_option("--out-dir", train_args.out_dir,
                    "Model directory (default models)");
  train
      ->add_option("--context-cap", train_args.context_cap,
                   "Most recent pairs kept as inference context")
      ->capture_default_str();
  train
      ->add_option("--min-regime-size", train_args.min_regime_size,
                   "Fold smaller regimes into the nearest mean")
      ->capture_default_str();
  train
      ->add_option("--tune-trials", train_args.tune_trials,
                   "Random-search trials per regime (0 = fixed)")
      ->capture_default_str();
  train
      ->add_option("--classifier-epochs", train_args.classifier_epochs,
                   "Classifier training epochs")
      ->capture_default_str();
  train
      ->add_option("--cnp-epochs", train_args.cnp_epochs,
                   "Per-regime forecaster training epochs")
      ->capture_default_str();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand(
      "predict", "Forecast one day from a trained model directory");
  predict->fallthrough();
  predict->add_option("--models", predict_args.models, "Model directory")
      ->required();
  predict->add_option("--date", predict_args.date, "Target day (YYYY-MM-DD)")
      ->required();
  predict->add_option("--data", predict_args.data,
                      "Market CSV (default: the bundle's training data)");
  predict
      ->add_option("--coverage", predict_args.coverage,
                   "Central interval mass")
      ->capture_default_str();
  predict->add_option("--out", predict_args.out,
                      "Forecast CSV (default forecast.csv)");

  DispatchArgs dispatch_args;
  auto* dispatch = app.add_subcommand(
      "dispatch", "Plan battery operation for forecast days");
  dispatch->fallthrough();
  dispatch
      ->add_option("--case", dispatch_args.case_number,
                   "Dispatch case 1..4")
      ->required()
      ->check(CLI::Range(1, 4));
  dispatch->add_option("--forecasts", dispatch_args.forecasts, "Forecast CSV")
      ->required();
  dispatch->add_option("--battery", dispatch_args.battery,
                       "Battery/strategy/site configuration file");
  dispatch->add_option("--data", dispatch_args.data,
                       "Market CSV for realized and perfect-foresight value");
  dispatch
      ->add_option("--sigma", dispatch_args.sigma_mode,
                   "Price uncertainty: forecast or zero")
      ->capture_default_str();
  dispatch->add_option("--out", dispatch_args.out,
                       "Schedule CSV (default schedule.csv)");

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score forecast files against realized prices");
  evaluate->fallthrough();
  evaluate
      ->add_option("--forecasts", evaluate_args.forecasts,
                   "Forecast CSVs (model name = file stem)")
      ->required()
      ->expected(-1);
  evaluate->add_option("--actuals", evaluate_args.actuals, "Market CSV")
      ->required();
  evaluate
      ->add_option("--crps-samples", evaluate_args.crps_samples,
                   "Sample count of the mixture CRPS estimator")
      ->capture_default_str();
  evaluate->add_option("--out", evaluate_args.out,
                       "Metrics CSV (default metrics.csv)");

  TopsisArgs topsis_args;
  auto* topsis = app.add_subcommand(
      "topsis", "Rank alternatives from a criteria matrix");
  topsis->fallthrough();
  topsis->add_option("--matrix", topsis_args.matrix, "Criteria CSV")
      ->required();
  topsis->add_option("--out", topsis_args.out,
                     "Scores CSV (default topsis_scores.csv)");

  RunArgs run_args;
  auto* run = app.add_subcommand(
      "run", "Run the full rolling evaluation pipeline");
  run->fallthrough();
  run->add_option("--config", run_args.config, "Pipeline configuration file");
  run->add_option("--manifest", run_args.manifest,
                  "Reproduce a previous run from its manifest");
  run->add_option("--data", run_args.data, "Market CSV override");
  run->add_option("--eval-start", run_args.eval_start,
                  "First evaluated day (YYYY-MM-DD)");
  auto* eval_days_opt =
      run->add_option("--eval-days", run_args.eval_days, "Evaluation span");
  auto* stride_opt =
      run->add_option("--stride", run_args.stride, "Evaluate every k-th day");
  auto* reseg_opt = run->add_option("--reseg-days", run_args.reseg_days,
                                    "Model-stack retraining cadence");
  auto* window_opt =
      run->add_option("--window", run_args.window, "Training lookback days");
  run->add_flag("--force", run_args.force,
                "Overwrite an existing run directory");

  ReportArgs report_args;
  auto* report = app.add_subcommand(
      "report", "Summarize a finished run directory");
  report->fallthrough();
  report->add_option("--run", report_args.run_dir, "Run directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  global.seed_set = seed_opt->count() > 0;
  global.jobs_set = jobs_opt->count() > 0;
  global.out_set = out_opt->count() > 0;
  run_args.eval_days_set = eval_days_opt->count() > 0;
  run_args.stride_set = stride_opt->count() > 0;
  run_args.reseg_set = reseg_opt->count() > 0;
  run_args.window_set = window_opt->count() > 0;

  try {
    if (*segment) return cmd_segment(global, segment_args);
    if (*classify) return cmd_classify(global, classify_args);
    if (*train) return cmd_train(global, train_args);
    if (*predict) return cmd_predict(global, predict_args);
    if (*dispatch) return cmd_dispatch(global, dispatch_args);
    if (*evaluate) return cmd_evaluate(global, evaluate_args);
    if (*topsis) return cmd_topsis(global, topsis_args);
    if (*run) return cmd_run(global, run_args);
    if (*report) return cmd_report(global, report_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
