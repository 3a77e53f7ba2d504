#include "enckf/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace enckf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  if (v.size() == 1) return v(0);
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// Scalar when 1x1, nested arrays otherwise.
json cov_json(const Matrix& m) { return m.size() == 1 ? json(m(0, 0)) : to_json(m); }

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + partial.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + partial.string());
  }
  fs::rename(partial, path);
}

json spec_json(const ScenarioSpec& spec) {
  json overrides = json::object();
  for (const auto& [k, v] : spec.overrides) overrides[k] = v;
  return {{"scenario", to_string(spec.name)},
          {"steps", spec.steps},
          {"runs", spec.mc_runs},
          {"ensemble_sizes", spec.ensemble_sizes},
          {"seed", spec.seed},
          {"overrides", overrides}};
}

json options_json(const CampaignOptions& options) {
  json modes = json::array();
  for (FilterMode m : options.modes) modes.push_back(to_string(m));
  return {{"modes", modes},
          {"workers", options.workers},
          {"recenter", options.recenter},
          {"resample", to_string(options.resample_scheme)},
          {"enkf_zero_param_gain", options.enkf_zero_param_gain}};
}

[[noreturn]] void fail(const fs::path& file, int line, const std::string& what) {
  std::ostringstream os;
  os << file.string();
  if (line > 0) os << ":" << line;
  os << ": " << what;
  throw ReportFormatError(os.str());
}

}  // namespace

std::string series_file_name(ScenarioName scenario, FilterMode mode, int ensemble_size) {
  return to_string(scenario) + "_" + to_string(mode) + "_m" + std::to_string(ensemble_size) +
         ".csv";
}

std::string series_csv(const RmseSeries& series) {
  std::string out = "epoch,component,rmse\n";
  for (Eigen::Index k = 0; k < series.per_epoch.rows(); ++k) {
    for (Eigen::Index c = 0; c < series.per_epoch.cols(); ++c) {
      out += std::to_string(k + 1) + "," + std::to_string(c + 1) + "," +
             format_double(series.per_epoch(k, c)) + "\n";
    }
  }
  return out;
}

std::string summary_csv(const RmseReport& report) {
  std::string out = "mode,m,mean_rmse,win_fraction,repair_count\n";
  for (const auto& s : report.series) {
    const FilterMode other_mode = s.mode == FilterMode::enkf ? FilterMode::enckf : FilterMode::enkf;
    const RmseSeries* other = report.find(other_mode, s.ensemble_size);
    const std::string win = other ? format_double(win_fraction(s.per_epoch, other->per_epoch)) : "";
    out += to_string(s.mode) + "," + std::to_string(s.ensemble_size) + "," +
           format_double(s.mean_rmse) + "," + win + "," + std::to_string(s.audit.repair_count) +
           "\n";
  }
  return out;
}

json report_metadata(const RmseReport& report) {
  json series = json::array();
  for (const auto& s : report.series) {
    json comp = json::array();
    for (Eigen::Index c = 0; c < s.component_mean.size(); ++c) comp.push_back(s.component_mean(c));
    series.push_back({{"mode", to_string(s.mode)},
                      {"m", s.ensemble_size},
                      {"file", series_file_name(report.spec.name, s.mode, s.ensemble_size)},
                      {"mean_rmse", s.mean_rmse},
                      {"component_mean_rmse", comp},
                      {"audit",
                       {{"repair_count", s.audit.repair_count},
                        {"runs_with_repairs", s.audit.runs_with_repairs},
                        {"epochs_checked", s.audit.epochs_checked},
                        {"max_asymmetry", s.audit.max_asymmetry},
                        {"min_eigenvalue", s.audit.min_eigenvalue},
                        {"max_param_mean_offset", s.audit.max_param_mean_offset},
                        {"max_pbb_offset", s.audit.max_pbb_offset}}}});
  }
  return {{"version", kVersion},
          {"spec", spec_json(report.spec)},
          {"options", options_json(report.options)},
          {"rmse_definition",
           "per epoch k=1..K and component c: sqrt(mean over runs of squared error); "
           "mean_rmse averages that table over epochs and components"},
          {"wall_seconds", report.wall_seconds},
          {"series", series}};
}

json describe_scenario(ScenarioName name) {
  const ScenarioSpec spec = ScenarioSpec::defaults(name);
  const Scenario sc = build_scenario(spec);
  json out{{"name", to_string(name)},
           {"state_dim", sc.model.state_dim},
           {"meas_dim", sc.model.meas_dim},
           {"param_dim", sc.model.param_dim},
           {"R", cov_json(sc.model.meas_noise_cov)},
           {"b0", to_json(sc.model.param_reference)},
           {"Q_b", cov_json(sc.model.param_cov)},
           {"truth_b_mean", to_json(sc.truth_param_mean)},
           {"truth_b_var", cov_json(sc.truth_param_cov)},
           {"x0", to_json(sc.x0_truth)},
           {"x0_estimate", to_json(sc.x0_mean)},
           {"P0", sc.p0(0, 0)},
           {"enkf_b", to_json(sc.baseline_param)},
           {"enkf_b_var", cov_json(sc.baseline_param_cov)},
           {"steps", spec.steps},
           {"runs", spec.mc_runs},
           {"ensemble_sizes", spec.ensemble_sizes}};
  if (sc.linear) {
    const auto& lin = *sc.linear;
    out["Q"] = lin.q(0, 0);
    out["A"] = to_json(lin.a);
    out["B"] = to_json(Vector(lin.b.col(0)));
    out["G"] = to_json(Vector(lin.g.col(0)));
    out["H"] = to_json(Vector(lin.h.row(0).transpose()));
    out["transition"] = "x_k = A x_{k-1} + B b + G w";
    out["measurement"] = "z_k = H x_k + v";
  } else {
    out["Q"] = sc.model.process_noise_cov(0, 0);
    out["transition"] = "x_k = 0.5 x + 2.5 x / (1 + x^2) + 8 cos(1.2 (k - 1)) + w";
    out["measurement"] = "z_k = x_k^2 / 20 + b + v";
  }
  return out;
}

void write_report(const RmseReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& s : report.series) {
    write_atomically(dir / series_file_name(report.spec.name, s.mode, s.ensemble_size),
                     series_csv(s));
  }
  write_atomically(dir / "summary.csv", summary_csv(report));
  write_atomically(dir / "metadata.json", report_metadata(report).dump(2) + "\n");
}

void write_failure_marker(const fs::path& dir, const json& config, const std::string& error) {
  fs::create_directories(dir);
  std::ofstream out(dir / "metadata.json.partial", std::ios::trunc);
  out << json{{"version", kVersion}, {"status", "failed"}, {"error", error}, {"config", config}}
             .dump(2)
      << "\n";
}

namespace {

Matrix read_series_csv(const fs::path& file, int steps, int dim) {
  std::ifstream in(file);
  if (!in) fail(file, 0, "missing file");
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) fail(file, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epoch,component,rmse") {
    fail(file, 1, "bad header '" + line + "' (expected 'epoch,component,rmse')");
  }
  Matrix table = Matrix::Constant(steps, dim, std::numeric_limits<double>::quiet_NaN());
  long cells = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f_epoch, f_comp, f_rmse, extra;
    if (!std::getline(row, f_epoch, ',') || !std::getline(row, f_comp, ',') ||
        !std::getline(row, f_rmse, ',') || std::getline(row, extra, ',')) {
      fail(file, line_no, "expected 3 comma-separated fields");
    }
    int epoch = 0, comp = 0;
    double rmse = 0.0;
    try {
      std::size_t used = 0;
      epoch = std::stoi(f_epoch, &used);
      if (used != f_epoch.size()) throw std::invalid_argument("epoch");
      comp = std::stoi(f_comp, &used);
      if (used != f_comp.size()) throw std::invalid_argument("component");
      rmse = std::stod(f_rmse, &used);
      if (used != f_rmse.size()) throw std::invalid_argument("rmse");
    } catch (const std::exception&) {
      fail(file, line_no, "unparseable row '" + line + "'");
    }
    if (epoch < 1 || epoch > steps || comp < 1 || comp > dim) {
      fail(file, line_no, "epoch/component out of range");
    }
    if (!std::isfinite(rmse) || rmse < 0.0) fail(file, line_no, "rmse must be finite and >= 0");
    if (!std::isnan(table(epoch - 1, comp - 1))) fail(file, line_no, "duplicate cell");
    table(epoch - 1, comp - 1) = rmse;
    ++cells;
  }
  if (cells != static_cast<long>(steps) * dim) fail(file, line_no, "incomplete table");
  return table;
}

}  // namespace

RmseReport read_report(const fs::path& dir) {
  const fs::path meta_path = dir / "metadata.json";
  std::ifstream in(meta_path);
  if (!in) fail(meta_path, 0, "missing file");
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(meta_path, 0, std::string("invalid JSON: ") + e.what());
  }

  RmseReport report;
  try {
    const json& spec = meta.at("spec");
    report.spec.name = parse_scenario_name(spec.at("scenario").get<std::string>());
    report.spec.steps = spec.at("steps").get<int>();
    report.spec.mc_runs = spec.at("runs").get<int>();
    report.spec.ensemble_sizes = spec.at("ensemble_sizes").get<std::vector<int>>();
    report.spec.seed = spec.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : spec.at("overrides").items()) report.spec.overrides[k] = v.get<double>();
    report.options.modes.clear();
    for (const auto& m : meta.at("options").at("modes")) {
      report.options.modes.push_back(parse_filter_mode(m.get<std::string>()));
    }
  } catch (const std::exception& e) {
    fail(meta_path, 0, std::string("bad metadata: ") + e.what());
  }

  const int dim = build_scenario(report.spec).model.state_dim;
  for (const auto& s : meta.at("series")) {
    RmseSeries series;
    try {
      series.mode = parse_filter_mode(s.at("mode").get<std::string>());
      series.ensemble_size = s.at("m").get<int>();
    } catch (const std::exception& e) {
      fail(meta_path, 0, std::string("bad series entry: ") + e.what());
    }
    const fs::path file = dir / series_file_name(report.spec.name, series.mode, series.ensemble_size);
    series.per_epoch = read_series_csv(file, report.spec.steps, dim);
    series.component_mean = series.per_epoch.colwise().mean().transpose();
    series.mean_rmse = mean_rmse(series.per_epoch);
    if (s.contains("audit")) series.audit.repair_count = s["audit"].value("repair_count", 0L);
    report.series.push_back(std::move(series));
  }
  return report;
}

}  // namespace enckf
