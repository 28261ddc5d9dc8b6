#include "regimecast/artifacts.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "json.hpp"
#include "regimecast/csv.hpp"
#include "regimecast/rng.hpp"

namespace regimecast {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// -- JSON helpers -----------------------------------------------------------

json vec_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from_json(const json& j) {
  if (!j.is_array()) throw std::runtime_error("artifact: expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<Scalar>();
  return v;
}

// Matrices carry explicit shape so empty ones keep their column count.
json mat_to_json(const Matrix& m) {
  json data = json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix mat_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
    throw std::runtime_error("artifact: matrix shape/data mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<Scalar>();
  return m;
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  throw std::logic_error("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw std::runtime_error("artifact: unknown activation '" + name + "'");
}

json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    layers.push_back(json{{"weight", mat_to_json(net.weights[l])},
                          {"bias", vec_to_json(net.biases[l])}});
  return json{{"activation", activation_name(net.activation)},
              {"layers", std::move(layers)}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  net.activation = activation_from_name(j.at("activation").get<std::string>());
  for (const json& layer : j.at("layers")) {
    net.weights.push_back(mat_from_json(layer.at("weight")));
    net.biases.push_back(vec_from_json(layer.at("bias")));
  }
  if (net.weights.empty()) throw std::runtime_error("artifact: empty network");
  return net;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("artifact: cannot read '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("artifact: '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("artifact: cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("artifact: write to '" + path + "' failed");
}

void require_schema(const json& j, const std::string& schema,
                    const std::string& path) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != schema)
    throw std::runtime_error("artifact: '" + path + "' does not hold schema '" +
                             schema + "'");
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kArtifactVersion)
    throw std::runtime_error(
        "artifact: '" + path + "' has unsupported version (expected " +
        std::to_string(kArtifactVersion) + ")");
}

json stamp(const std::string& schema) {
  return json{{"schema", schema}, {"version", kArtifactVersion}};
}

// -- CSV helpers ------------------------------------------------------------

Scalar parse_cell(const std::string& cell, const std::string& what) {
  if (cell.empty())
    throw std::runtime_error("csv: empty cell where " + what + " was expected");
  char* end = nullptr;
  const Scalar v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size())
    throw std::runtime_error("csv: cannot parse " + what + " from '" + cell + "'");
  return v;
}

std::string optional_cell(Scalar v) {
  return std::isnan(v) ? std::string{} : format_number(v);
}

Scalar parse_optional_cell(const std::string& cell, const std::string& what) {
  if (cell.empty()) return std::numeric_limits<Scalar>::quiet_NaN();
  return parse_cell(cell, what);
}

int parse_hour(const std::string& cell) {
  const Scalar v = parse_cell(cell, "hour");
  const int h = static_cast<int>(v);
  if (v != h || h < 0 || h >= kHoursPerDay)
    throw std::runtime_error("csv: hour out of range: '" + cell + "'");
  return h;
}

DispatchCase case_from_label(const std::string& label) {
  for (int n = 1; n <= 4; ++n) {
    const DispatchCase c = case_from_number(n);
    if (label == case_label(c)) return c;
  }
  throw std::runtime_error("csv: unknown dispatch case '" + label + "'");
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

// ---------------------------------------------------------------------------

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fingerprint: cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  const std::uint64_t digest = fnv1a64(bytes.data(), bytes.size());
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(digest));
  return hex;
}

// -- segmentation -----------------------------------------------------------

void save_segmentation(const std::string& path,
                       const SegmentationArtifact& artifact) {
  artifact.state.validate();
  if (artifact.days.size() != artifact.state.z.size())
    throw std::invalid_argument(
        "save_segmentation: days and labels differ in length");
  json j = stamp("regimecast.segmentation");
  j["config"] = {{"variant", variant_name(artifact.config.variant)},
                 {"sweeps", artifact.config.sweeps},
                 {"burn_in", artifact.config.burn_in},
                 {"seed", artifact.config.seed},
                 {"sticky_kappa", artifact.config.sticky_kappa},
                 {"max_regimes", artifact.config.max_regimes}};
  j["map_log_joint"] = artifact.map_log_joint;
  json days = json::array();
  for (const Date d : artifact.days) days.push_back(format_date(d));
  j["days"] = std::move(days);
  json emissions = json::array();
  for (const GaussianEmission& e : artifact.state.emissions)
    emissions.push_back(json{{"mu", e.mu}, {"sigma2", e.sigma2}});
  j["state"] = {{"z", artifact.state.z},
                {"w", artifact.state.w},
                {"beta", vec_to_json(artifact.state.beta)},
                {"kappa", vec_to_json(artifact.state.kappa)},
                {"emissions", std::move(emissions)},
                {"alpha", artifact.state.alpha},
                {"gamma", artifact.state.gamma},
                {"rho1", artifact.state.rho1},
                {"rho2", artifact.state.rho2},
                {"regimes", artifact.state.regimes},
                {"log_joint_trace", artifact.state.log_likelihood_trace}};
  write_json_file(path, j);
}

SegmentationArtifact load_segmentation(const std::string& path) {
  const json j = read_json_file(path);
  require_schema(j, "regimecast.segmentation", path);
  SegmentationArtifact a;
  const json& cfg = j.at("config");
  a.config.variant = variant_from_string(cfg.at("variant").get<std::string>());
  a.config.sweeps = cfg.at("sweeps").get<Index>();
  a.config.burn_in = cfg.at("burn_in").get<Index>();
  a.config.seed = cfg.at("seed").get<std::uint64_t>();
  a.config.sticky_kappa = cfg.at("sticky_kappa").get<Scalar>();
  a.config.max_regimes = cfg.at("max_regimes").get<Index>();
  a.map_log_joint = j.at("map_log_joint").get<Scalar>();
  for (const json& d : j.at("days")) a.days.push_back(parse_date(d.get<std::string>()));
  const json& st = j.at("state");
  a.state.z = st.at("z").get<std::vector<int>>();
  a.state.w = st.at("w").get<std::vector<int>>();
  a.state.beta = vec_from_json(st.at("beta"));
  a.state.kappa = vec_from_json(st.at("kappa"));
  for (const json& e : st.at("emissions"))
    a.state.emissions.push_back(
        {e.at("mu").get<Scalar>(), e.at("sigma2").get<Scalar>()});
  a.state.alpha = st.at("alpha").get<Scalar>();
  a.state.gamma = st.at("gamma").get<Scalar>();
  a.state.rho1 = st.at("rho1").get<Scalar>();
  a.state.rho2 = st.at("rho2").get<Scalar>();
  a.state.regimes = st.at("regimes").get<Index>();
  a.state.log_likelihood_trace = st.at("log_joint_trace").get<std::vector<Scalar>>();
  a.state.validate();
  if (a.days.size() != a.state.z.size())
    throw std::runtime_error("artifact: '" + path + "' days/labels mismatch");
  return a;
}

// -- classifier -------------------------------------------------------------

void save_classifier(const std::string& path,
                     const ClassifierArtifact& artifact) {
  json j = stamp("regimecast.classifier");
  j["segmentation_version"] = artifact.segmentation_version;
  j["config"] = {{"hidden", artifact.config.hidden},
                 {"epochs", artifact.config.epochs},
                 {"learning_rate", artifact.config.learning_rate},
                 {"batch_size", artifact.config.batch_size},
                 {"val_fraction", artifact.config.val_fraction},
                 {"balanced_class_weights", artifact.config.balanced_class_weights},
                 {"seed", artifact.config.seed}};
  j["model"] = {{"regimes", artifact.model.regimes},
                {"feature_mean", vec_to_json(artifact.model.feature_mean)},
                {"feature_std", vec_to_json(artifact.model.feature_std)},
                {"network", mlp_to_json(artifact.model.network)}};
  write_json_file(path, j);
}

ClassifierArtifact load_classifier(const std::string& path) {
  const json j = read_json_file(path);
  require_schema(j, "regimecast.classifier", path);
  ClassifierArtifact a;
  a.segmentation_version = j.at("segmentation_version").get<int>();
  const json& cfg = j.at("config");
  a.config.hidden = cfg.at("hidden").get<std::vector<Index>>();
  a.config.epochs = cfg.at("epochs").get<int>();
  a.config.learning_rate = cfg.at("learning_rate").get<Scalar>();
  a.config.batch_size = cfg.at("batch_size").get<Index>();
  a.config.val_fraction = cfg.at("val_fraction").get<Scalar>();
  a.config.balanced_class_weights = cfg.at("balanced_class_weights").get<bool>();
  a.config.seed = cfg.at("seed").get<std::uint64_t>();
  const json& model = j.at("model");
  a.model.regimes = model.at("regimes").get<Index>();
  a.model.feature_mean = vec_from_json(model.at("feature_mean"));
  a.model.feature_std = vec_from_json(model.at("feature_std"));
  a.model.network = mlp_from_json(model.at("network"));
  return a;
}

// -- conditional process ----------------------------------------------------

void save_cnp(const std::string& path, const CnpArtifact& artifact) {
  json j = stamp("regimecast.cnp");
  j["regime"] = artifact.regime;
  j["config"] = {{"repr_dim", artifact.config.repr_dim},
                 {"hidden", artifact.config.hidden},
                 {"epochs", artifact.config.epochs},
                 {"tasks_per_epoch", artifact.config.tasks_per_epoch},
                 {"learning_rate", artifact.config.learning_rate},
                 {"seed", artifact.config.seed}};
  j["model"] = {{"x_dim", artifact.model.x_dim},
                {"y_dim", artifact.model.y_dim},
                {"repr_dim", artifact.model.repr_dim},
                {"x_mean", vec_to_json(artifact.model.x_mean)},
                {"x_std", vec_to_json(artifact.model.x_std)},
                {"y_mean", vec_to_json(artifact.model.y_mean)},
                {"y_std", vec_to_json(artifact.model.y_std)},
                {"encoder", mlp_to_json(artifact.model.encoder)},
                {"decoder", mlp_to_json(artifact.model.decoder)}};
  j["context_x"] = mat_to_json(artifact.context_x);
  j["context_y"] = mat_to_json(artifact.context_y);
  write_json_file(path, j);
}

CnpArtifact load_cnp(const std::string& path) {
  const json j = read_json_file(path);
  require_schema(j, "regimecast.cnp", path);
  CnpArtifact a;
  a.regime = j.at("regime").get<int>();
  const json& cfg = j.at("config");
  a.config.repr_dim = cfg.at("repr_dim").get<Index>();
  a.config.hidden = cfg.at("hidden").get<std::vector<Index>>();
  a.config.epochs = cfg.at("epochs").get<int>();
  a.config.tasks_per_epoch = cfg.at("tasks_per_epoch").get<int>();
  a.config.learning_rate = cfg.at("learning_rate").get<Scalar>();
  a.config.seed = cfg.at("seed").get<std::uint64_t>();
  const json& model = j.at("model");
  a.model.x_dim = model.at("x_dim").get<Index>();
  a.model.y_dim = model.at("y_dim").get<Index>();
  a.model.repr_dim = model.at("repr_dim").get<Index>();
  a.model.x_mean = vec_from_json(model.at("x_mean"));
  a.model.x_std = vec_from_json(model.at("x_std"));
  a.model.y_mean = vec_from_json(model.at("y_mean"));
  a.model.y_std = vec_from_json(model.at("y_std"));
  a.model.encoder = mlp_from_json(model.at("encoder"));
  a.model.decoder = mlp_from_json(model.at("decoder"));
  a.context_x = mat_from_json(j.at("context_x"));
  a.context_y = mat_from_json(j.at("context_y"));
  if (a.context_x.rows() != a.context_y.rows())
    throw std::runtime_error("artifact: '" + path + "' context rows mismatch");
  return a;
}

// -- model bundle -----------------------------------------------------------

void save_model_bundle(const std::string& dir, const ModelBundle& bundle) {
  if (bundle.classifier.model.regimes !=
      static_cast<Index>(bundle.members.size()))
    throw std::invalid_argument(
        "save_model_bundle: member count does not match classifier regimes");
  fs::create_directories(dir);
  json j = stamp("regimecast.models");
  j["regimes"] = bundle.members.size();
  j["classifier"] = "classifier.json";
  json members = json::array();
  for (std::size_t k = 0; k < bundle.members.size(); ++k)
    members.push_back("cnp_regime_" + std::to_string(k) + ".json");
  j["members"] = members;
  j["data_path"] = bundle.data_path;
  j["data_fingerprint"] = bundle.data_fingerprint;
  j["segmentation_path"] = bundle.segmentation_path;
  save_classifier((fs::path(dir) / "classifier.json").string(), bundle.classifier);
  for (std::size_t k = 0; k < bundle.members.size(); ++k)
    save_cnp((fs::path(dir) / members[k].get<std::string>()).string(),
             bundle.members[k]);
  write_json_file((fs::path(dir) / "models.json").string(), j);
}

ModelBundle load_model_bundle(const std::string& dir) {
  const std::string index_path = (fs::path(dir) / "models.json").string();
  const json j = read_json_file(index_path);
  require_schema(j, "regimecast.models", index_path);
  ModelBundle b;
  b.classifier = load_classifier(
      (fs::path(dir) / j.at("classifier").get<std::string>()).string());
  for (const json& name : j.at("members"))
    b.members.push_back(
        load_cnp((fs::path(dir) / name.get<std::string>()).string()));
  b.data_path = j.at("data_path").get<std::string>();
  b.data_fingerprint = j.at("data_fingerprint").get<std::string>();
  b.segmentation_path = j.at("segmentation_path").get<std::string>();
  if (static_cast<Index>(b.members.size()) != b.classifier.model.regimes)
    throw std::runtime_error("artifact: '" + dir +
                             "' member count does not match classifier");
  for (std::size_t k = 0; k < b.members.size(); ++k)
    if (b.members[k].regime != static_cast<int>(k))
      throw std::runtime_error("artifact: '" + dir +
                               "' member regime ids out of order");
  return b;
}

// -- run manifest -----------------------------------------------------------

void save_manifest(const std::string& path, const RunManifest& manifest) {
  json j = stamp("regimecast.manifest");
  j["software"] = manifest.software;
  j["seed"] = manifest.seed;
  j["data_path"] = manifest.data_path;
  j["data_fingerprint"] = manifest.data_fingerprint;
  json cfg = json::object();
  for (const auto& [section, entries] : manifest.config) {
    json sec = json::object();
    for (const auto& [key, value] : entries) sec[key] = value;
    cfg[section] = std::move(sec);
  }
  j["config"] = std::move(cfg);
  j["outputs"] = manifest.outputs;
  json timings = json::array();
  for (const StageTiming& t : manifest.timings)
    timings.push_back(json{{"stage", t.stage}, {"seconds", t.seconds}});
  j["timings"] = std::move(timings);
  write_json_file(path, j);
}

RunManifest load_manifest(const std::string& path) {
  const json j = read_json_file(path);
  require_schema(j, "regimecast.manifest", path);
  RunManifest m;
  m.software = j.at("software").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.data_path = j.at("data_path").get<std::string>();
  m.data_fingerprint = j.at("data_fingerprint").get<std::string>();
  for (const auto& [section, entries] : j.at("config").items())
    for (const auto& [key, value] : entries.items())
      m.config[section][key] = value.get<std::string>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  for (const json& t : j.at("timings"))
    m.timings.push_back(
        {t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
  return m;
}

// -- configuration files ----------------------------------------------------

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read '" + path + "'");
  ConfigMap config;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#' || text.front() == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']')
        throw std::runtime_error("config: '" + path + "' line " +
                                 std::to_string(lineno) + ": unterminated section");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      config[section];  // record empty sections too
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: '" + path + "' line " +
                               std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: '" + path + "' line " +
                               std::to_string(lineno) + ": empty key");
    config[section][key] = value;  // later occurrences win
  }
  return config;
}

void save_config_file(const std::string& path, const ConfigMap& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  bool first = true;
  for (const auto& [section, entries] : config) {
    if (!first) out << '\n';
    first = false;
    if (!section.empty()) out << '[' << section << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
  }
}

std::string config_get(const ConfigMap& config, const std::string& section,
                       const std::string& key, const std::string& fallback) {
  const auto sec = config.find(section);
  if (sec == config.end()) return fallback;
  const auto entry = sec->second.find(key);
  return entry == sec->second.end() ? fallback : entry->second;
}

// -- forecast CSV -----------------------------------------------------------

namespace {

void check_forecast_day(const ForecastDay& d) {
  if (d.mean.size() != kHoursPerDay)
    throw std::invalid_argument("forecast csv: mean must hold 24 hours");
  for (const Vector* v : {&d.variance, &d.lower, &d.upper})
    if (v->size() != 0 && v->size() != kHoursPerDay)
      throw std::invalid_argument(
          "forecast csv: variance/lower/upper must be empty or 24 hours");
  const Index k = d.weights.size();
  if (d.member_mean.rows() != k || d.member_var.rows() != k)
    throw std::invalid_argument(
        "forecast csv: component weight/mean/var counts disagree");
  if (k > 0 &&
      (d.member_mean.cols() != kHoursPerDay || d.member_var.cols() != kHoursPerDay))
    throw std::invalid_argument("forecast csv: component curves must hold 24 hours");
}

}  // namespace

void write_forecast_csv(const std::string& path,
                        const std::vector<ForecastDay>& days) {
  Index max_k = 0;
  for (const ForecastDay& d : days) {
    check_forecast_day(d);
    max_k = std::max(max_k, d.weights.size());
  }
  std::vector<std::string> header = {"date",     "hour",    "mean",
                                     "variance", "lower80", "upper80"};
  for (Index k = 0; k < max_k; ++k) {
    header.push_back("weight_" + std::to_string(k));
    header.push_back("mean_" + std::to_string(k));
    header.push_back("var_" + std::to_string(k));
  }
  std::vector<std::vector<std::string>> rows;
  rows.reserve(days.size() * kHoursPerDay);
  for (const ForecastDay& d : days) {
    for (Index h = 0; h < kHoursPerDay; ++h) {
      std::vector<std::string> row = {
          format_date(d.day),
          std::to_string(h),
          format_number(d.mean[h]),
          d.variance.size() ? format_number(d.variance[h]) : std::string{},
          d.lower.size() ? format_number(d.lower[h]) : std::string{},
          d.upper.size() ? format_number(d.upper[h]) : std::string{}};
      for (Index k = 0; k < max_k; ++k) {
        if (k < d.weights.size()) {
          row.push_back(format_number(d.weights[k]));
          row.push_back(format_number(d.member_mean(k, h)));
          row.push_back(format_number(d.member_var(k, h)));
        } else {
          row.insert(row.end(), 3, std::string{});
        }
      }
      rows.push_back(std::move(row));
    }
  }
  write_csv(path, header, rows);
}

std::vector<ForecastDay> read_forecast_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> base = {"date",     "hour",    "mean",
                                         "variance", "lower80", "upper80"};
  if (table.header.size() < base.size() ||
      !std::equal(base.begin(), base.end(), table.header.begin()))
    throw std::runtime_error("forecast csv: '" + path + "' has a foreign header");
  if ((table.header.size() - base.size()) % 3 != 0)
    throw std::runtime_error("forecast csv: '" + path +
                             "' component columns are not (weight, mean, var) triples");
  const Index max_k = static_cast<Index>((table.header.size() - base.size()) / 3);
  for (Index k = 0; k < max_k; ++k) {
    const std::size_t at = base.size() + 3 * static_cast<std::size_t>(k);
    const std::string suffix = "_" + std::to_string(k);
    if (table.header[at] != "weight" + suffix ||
        table.header[at + 1] != "mean" + suffix ||
        table.header[at + 2] != "var" + suffix)
      throw std::runtime_error("forecast csv: '" + path +
                               "' component columns are misnamed");
  }
  if (table.rows.size() % kHoursPerDay != 0)
    throw std::runtime_error("forecast csv: '" + path +
                             "' row count is not a multiple of 24");
  std::vector<ForecastDay> days;
  for (std::size_t at = 0; at < table.rows.size(); at += kHoursPerDay) {
    ForecastDay d;
    d.day = parse_date(table.rows[at][0]);
    const bool has_var = !table.rows[at][3].empty();
    const bool has_band = !table.rows[at][4].empty();
    d.mean.resize(kHoursPerDay);
    if (has_var) d.variance.resize(kHoursPerDay);
    if (has_band) {
      d.lower.resize(kHoursPerDay);
      d.upper.resize(kHoursPerDay);
    }
    Index k_day = 0;
    while (k_day < max_k &&
           !table.rows[at][base.size() + 3 * static_cast<std::size_t>(k_day)].empty())
      ++k_day;
    d.weights.resize(k_day);
    d.member_mean.resize(k_day, kHoursPerDay);
    d.member_var.resize(k_day, kHoursPerDay);
    for (Index h = 0; h < kHoursPerDay; ++h) {
      const std::vector<std::string>& row = table.rows[at + h];
      if (parse_date(row[0]) != d.day || parse_hour(row[1]) != h)
        throw std::runtime_error("forecast csv: '" + path +
                                 "' days are not contiguous hour blocks");
      d.mean[h] = parse_cell(row[2], "mean");
      if (has_var) d.variance[h] = parse_cell(row[3], "variance");
      if (has_band) {
        d.lower[h] = parse_cell(row[4], "lower80");
        d.upper[h] = parse_cell(row[5], "upper80");
      }
      for (Index k = 0; k < k_day; ++k) {
        const std::size_t c = base.size() + 3 * static_cast<std::size_t>(k);
        d.weights[k] = parse_cell(row[c], "weight");
        d.member_mean(k, h) = parse_cell(row[c + 1], "component mean");
        d.member_var(k, h) = parse_cell(row[c + 2], "component variance");
      }
    }
    days.push_back(std::move(d));
  }
  return days;
}

// -- schedule CSV -----------------------------------------------------------

ScheduleRecord make_schedule_record(Date day, const Schedule& plan,
                                    Scalar realized, Scalar perfect) {
  if (plan.soc.size() != plan.charge.size() + 1)
    throw std::invalid_argument(
        "make_schedule_record: schedule state-of-charge length mismatch");
  ScheduleRecord r;
  r.day = day;
  r.case_id = plan.case_id;
  r.charge = plan.charge;
  r.discharge = plan.discharge;
  r.soc = plan.soc.tail(plan.soc.size() - 1);
  r.predicted = plan.objective;
  r.realized = realized;
  r.perfect = perfect;
  return r;
}

void write_schedule_csv(const std::string& path,
                        const std::vector<ScheduleRecord>& records) {
  const std::vector<std::string> header = {
      "date", "hour",    "charge",    "discharge",           "soc",
      "case", "predicted_objective", "realized_value", "pf_value"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size() * kHoursPerDay);
  for (const ScheduleRecord& r : records) {
    if (r.charge.size() != kHoursPerDay || r.discharge.size() != kHoursPerDay ||
        r.soc.size() != kHoursPerDay)
      throw std::invalid_argument("schedule csv: records must hold 24 hours");
    for (Index h = 0; h < kHoursPerDay; ++h)
      rows.push_back({format_date(r.day), std::to_string(h),
                      format_number(r.charge[h]), format_number(r.discharge[h]),
                      format_number(r.soc[h]), case_label(r.case_id),
                      format_number(r.predicted), optional_cell(r.realized),
                      optional_cell(r.perfect)});
  }
  write_csv(path, header, rows);
}

std::vector<ScheduleRecord> read_schedule_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {
      "date", "hour",    "charge",    "discharge",           "soc",
      "case", "predicted_objective", "realized_value", "pf_value"};
  if (table.header != expected)
    throw std::runtime_error("schedule csv: '" + path + "' has a foreign header");
  if (table.rows.size() % kHoursPerDay != 0)
    throw std::runtime_error("schedule csv: '" + path +
                             "' row count is not a multiple of 24");
  std::vector<ScheduleRecord> records;
  for (std::size_t at = 0; at < table.rows.size(); at += kHoursPerDay) {
    ScheduleRecord r;
    r.day = parse_date(table.rows[at][0]);
    r.case_id = case_from_label(table.rows[at][5]);
    r.charge.resize(kHoursPerDay);
    r.discharge.resize(kHoursPerDay);
    r.soc.resize(kHoursPerDay);
    r.predicted = parse_cell(table.rows[at][6], "predicted objective");
    r.realized = parse_optional_cell(table.rows[at][7], "realized value");
    r.perfect = parse_optional_cell(table.rows[at][8], "perfect-foresight value");
    for (Index h = 0; h < kHoursPerDay; ++h) {
      const std::vector<std::string>& row = table.rows[at + h];
      if (parse_date(row[0]) != r.day || parse_hour(row[1]) != h ||
          case_from_label(row[5]) != r.case_id)
        throw std::runtime_error("schedule csv: '" + path +
                                 "' records are not contiguous hour blocks");
      r.charge[h] = parse_cell(row[2], "charge");
      r.discharge[h] = parse_cell(row[3], "discharge");
      r.soc[h] = parse_cell(row[4], "soc");
    }
    records.push_back(std::move(r));
  }
  return records;
}

// -- metrics CSV ------------------------------------------------------------

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  const std::vector<std::string> header = {"model", "period", "days",
                                           "mae",   "rmse",   "mape",
                                           "smape", "crps",   "picp80",
                                           "mpiw80"};
  std::vector<std::vector<std::string>> out;
  out.reserve(rows.size());
  for (const MetricsRow& r : rows)
    out.push_back({r.model, r.period, std::to_string(r.days),
                   format_number(r.mae), format_number(r.rmse),
                   format_number(r.mape), format_number(r.smape),
                   optional_cell(r.crps), optional_cell(r.picp80),
                   optional_cell(r.mpiw80)});
  write_csv(path, header, out);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"model", "period", "days",
                                             "mae",   "rmse",   "mape",
                                             "smape", "crps",   "picp80",
                                             "mpiw80"};
  if (table.header != expected)
    throw std::runtime_error("metrics csv: '" + path + "' has a foreign header");
  std::vector<MetricsRow> rows;
  for (const std::vector<std::string>& row : table.rows) {
    MetricsRow r;
    r.model = row[0];
    r.period = row[1];
    r.days = static_cast<Index>(parse_cell(row[2], "days"));
    r.mae = parse_cell(row[3], "mae");
    r.rmse = parse_cell(row[4], "rmse");
    r.mape = parse_cell(row[5], "mape");
    r.smape = parse_cell(row[6], "smape");
    r.crps = parse_optional_cell(row[7], "crps");
    r.picp80 = parse_optional_cell(row[8], "picp80");
    r.mpiw80 = parse_optional_cell(row[9], "mpiw80");
    rows.push_back(std::move(r));
  }
  return rows;
}

// -- decision matrix CSVs ---------------------------------------------------

void write_criteria_csv(const std::string& path, const DecisionMatrix& matrix) {
  matrix.validate();
  const std::vector<std::string> header = {"alternative", "criterion", "value",
                                           "direction", "weight"};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < matrix.alternatives.size(); ++i)
    for (std::size_t j = 0; j < matrix.criteria.size(); ++j)
      rows.push_back({matrix.alternatives[i], matrix.criteria[j],
                      format_number(matrix.values(static_cast<Index>(i),
                                                  static_cast<Index>(j))),
                      direction_name(matrix.directions[j]),
                      format_number(matrix.weights[static_cast<Index>(j)])});
  write_csv(path, header, rows);
}

DecisionMatrix read_criteria_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"alternative", "criterion",
                                             "value", "direction", "weight"};
  if (table.header != expected)
    throw std::runtime_error("criteria csv: '" + path + "' has a foreign header");
  DecisionMatrix dm;
  std::map<std::string, Index> alt_at, crit_at;
  struct Entry {
    Scalar value;
    Direction direction;
    Scalar weight;
  };
  std::map<std::pair<Index, Index>, Entry> cells;
  for (const std::vector<std::string>& row : table.rows) {
    const std::string& alt = row[0];
    const std::string& crit = row[1];
    if (!alt_at.count(alt)) {
      alt_at[alt] = static_cast<Index>(dm.alternatives.size());
      dm.alternatives.push_back(alt);
    }
    if (!crit_at.count(crit)) {
      crit_at[crit] = static_cast<Index>(dm.criteria.size());
      dm.criteria.push_back(crit);
    }
    const std::pair<Index, Index> key{alt_at[alt], crit_at[crit]};
    if (cells.count(key))
      throw std::runtime_error("criteria csv: duplicate cell for '" + alt +
                               "' / '" + crit + "'");
    cells[key] = {parse_cell(row[2], "value"), direction_from_string(row[3]),
                  parse_cell(row[4], "weight")};
  }
  const Index m = static_cast<Index>(dm.alternatives.size());
  const Index n = static_cast<Index>(dm.criteria.size());
  if (m == 0 || n == 0)
    throw std::runtime_error("criteria csv: '" + path + "' holds no cells");
  dm.values.resize(m, n);
  dm.directions.assign(static_cast<std::size_t>(n), Direction::Minimize);
  dm.weights.resize(n);
  std::vector<bool> column_seen(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      const auto cell = cells.find({i, j});
      if (cell == cells.end())
        throw std::runtime_error("criteria csv: missing cell for '" +
                                 dm.alternatives[static_cast<std::size_t>(i)] +
                                 "' / '" +
                                 dm.criteria[static_cast<std::size_t>(j)] + "'");
      dm.values(i, j) = cell->second.value;
      if (!column_seen[static_cast<std::size_t>(j)]) {
        dm.directions[static_cast<std::size_t>(j)] = cell->second.direction;
        dm.weights[j] = cell->second.weight;
        column_seen[static_cast<std::size_t>(j)] = true;
      } else if (dm.directions[static_cast<std::size_t>(j)] !=
                     cell->second.direction ||
                 dm.weights[j] != cell->second.weight) {
        throw std::runtime_error(
            "criteria csv: direction/weight vary within criterion '" +
            dm.criteria[static_cast<std::size_t>(j)] + "'");
      }
    }
  dm.validate();
  return dm;
}

void write_topsis_scores_csv(const std::string& path,
                             const DecisionMatrix& matrix,
                             const TopsisResult& result) {
  if (result.closeness.size() != static_cast<Index>(matrix.alternatives.size()) ||
      result.order.size() != matrix.alternatives.size())
    throw std::invalid_argument(
        "write_topsis_scores_csv: result does not match the matrix");
  const std::vector<std::string> header = {"alternative", "closeness", "rank"};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < result.order.size(); ++r) {
    const Index i = result.order[r];
    rows.push_back({matrix.alternatives[static_cast<std::size_t>(i)],
                    format_number(result.closeness[i]),
                    std::to_string(r + 1)});
  }
  write_csv(path, header, rows);
}

}  // namespace regimecast
