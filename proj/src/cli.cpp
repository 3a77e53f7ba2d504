#include "enckf/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "enckf/report_io.hpp"

namespace enckf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Usage/config problem detected by the front end itself.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw UsageError(origin + ": '" + text + "' is not a non-negative integer seed");
  }
  return value;
}

std::pair<std::string, double> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError("--override expects key=value, got '" + text + "'");
  }
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return {key, v};
  } catch (const std::exception&) {
    throw UsageError("--override " + key + ": '" + raw + "' is not a number");
  }
}

void print_summary(const RmseReport& report, std::ostream& out) {
  out << std::left << std::setw(8) << "mode" << std::setw(6) << "m" << std::setw(14) << "mean_rmse"
      << std::setw(14) << "win_fraction" << "repairs\n";
  for (const auto& s : report.series) {
    const FilterMode other = s.mode == FilterMode::enkf ? FilterMode::enckf : FilterMode::enkf;
    const RmseSeries* o = report.find(other, s.ensemble_size);
    std::ostringstream win;
    if (o) win << std::fixed << std::setprecision(3) << win_fraction(s.per_epoch, o->per_epoch);
    else win << "-";
    std::ostringstream mean;
    mean << std::fixed << std::setprecision(6) << s.mean_rmse;
    out << std::setw(8) << to_string(s.mode) << std::setw(6) << s.ensemble_size << std::setw(14)
        << mean.str() << std::setw(14) << win.str() << s.audit.repair_count << "\n";
  }
}

void print_comparison(const ComparisonSummary& summary, std::ostream& out) {
  out << std::left << std::setw(6) << "m" << std::setw(16) << "mean_rmse_enkf" << std::setw(17)
      << "mean_rmse_enckf" << std::setw(14) << "win_fraction" << "per_component\n";
  for (const auto& row : summary.rows) {
    std::ostringstream a, b, w, comp;
    a << std::fixed << std::setprecision(6) << row.mean_enkf;
    b << std::fixed << std::setprecision(6) << row.mean_enckf;
    w << std::fixed << std::setprecision(3) << row.win_fraction;
    comp << std::fixed << std::setprecision(3);
    for (Eigen::Index c = 0; c < row.component_win_fraction.size(); ++c) {
      comp << (c ? " " : "") << row.component_win_fraction(c);
    }
    out << std::setw(6) << row.ensemble_size << std::setw(16) << a.str() << std::setw(17) << b.str()
        << std::setw(14) << w.str() << comp.str() << "\n";
  }
}

bool parse_on_off(const std::string& text) {
  if (text == "on") return true;
  if (text == "off") return false;
  throw UsageError("--recenter expects on or off, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

json CliConfig::to_json() const {
  json modes = json::array();
  for (FilterMode m : options.modes) modes.push_back(to_string(m));
  json overrides = json::object();
  for (const auto& [k, v] : spec.overrides) overrides[k] = v;
  return {{"scenario", to_string(spec.name)},
          {"runs", spec.mc_runs},
          {"steps", spec.steps},
          {"ensemble_sizes", spec.ensemble_sizes},
          {"seed", spec.seed},
          {"modes", modes},
          {"out", out_dir.string()},
          {"workers", options.workers},
          {"recenter", options.recenter},
          {"resample", to_string(options.resample_scheme)},
          {"enkf_zero_param_gain", options.enkf_zero_param_gain},
          {"overrides", overrides}};
}

CliSettings load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw UsageError(path.string() + ": top level must be an object");

  CliSettings s;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "scenario") s.scenario = value.get<std::string>();
      else if (key == "runs") s.runs = value.get<int>();
      else if (key == "steps") s.steps = value.get<int>();
      else if (key == "ensemble_sizes") s.ensemble_sizes = value.get<std::vector<int>>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "modes") s.modes = value.get<std::vector<std::string>>();
      else if (key == "out") s.out_dir = value.get<std::string>();
      else if (key == "workers") s.workers = value.get<int>();
      else if (key == "recenter") s.recenter = value.get<bool>();
      else if (key == "resample") s.resample = value.get<std::string>();
      else if (key == "enkf_zero_param_gain") s.enkf_zero_param_gain = value.get<bool>();
      else if (key == "overrides") s.overrides = value.get<std::map<std::string, double>>();
      else throw UsageError(path.string() + ": unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return s;
}

CliConfig resolve_config(const CliSettings& flags, const CliSettings& file,
                         const std::optional<std::string>& env_seed) {
  auto pick = [](const auto& a, const auto& b) { return a ? a : b; };

  const auto scenario = pick(flags.scenario, file.scenario);
  if (!scenario) throw UsageError("no scenario given (use --scenario or the config file)");
  CliConfig cfg;
  cfg.spec = ScenarioSpec::defaults(parse_scenario_name(*scenario));

  if (auto v = pick(flags.runs, file.runs)) cfg.spec.mc_runs = *v;
  if (auto v = pick(flags.steps, file.steps)) cfg.spec.steps = *v;
  if (auto v = pick(flags.ensemble_sizes, file.ensemble_sizes)) cfg.spec.ensemble_sizes = *v;
  if (auto v = pick(flags.seed, file.seed)) {
    cfg.spec.seed = *v;
  } else if (env_seed) {
    cfg.spec.seed = parse_seed(*env_seed, "ENCKF_SEED");
  }
  cfg.spec.overrides = file.overrides;
  for (const auto& [k, v] : flags.overrides) cfg.spec.overrides[k] = v;

  if (auto v = pick(flags.modes, file.modes)) {
    cfg.options.modes.clear();
    for (const auto& m : *v) cfg.options.modes.push_back(parse_filter_mode(m));
    if (cfg.options.modes.empty()) throw UsageError("--modes must name at least one mode");
  }
  if (auto v = pick(flags.out_dir, file.out_dir)) cfg.out_dir = *v;
  if (auto v = pick(flags.workers, file.workers)) {
    if (*v < 0) throw UsageError("--workers must be >= 0");
    cfg.options.workers = *v;
  }
  if (auto v = pick(flags.recenter, file.recenter)) cfg.options.recenter = *v;
  if (auto v = pick(flags.resample, file.resample)) {
    cfg.options.resample_scheme = parse_resample_scheme(*v);
  }
  if (auto v = pick(flags.enkf_zero_param_gain, file.enkf_zero_param_gain)) {
    cfg.options.enkf_zero_param_gain = *v;
  }
  cfg.spec.validate();
  return cfg;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble consider Kalman filter Monte Carlo harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string describe_name;
  auto* describe = app.add_subcommand("describe", "Print scenario constants as JSON");
  describe->add_option("scenario", describe_name, "spacecraft or ungm")->required();

  auto* run = app.add_subcommand("run", "Run a Monte Carlo campaign and write CSV/JSON results");
  std::string scenario, ensemble, modes, out_dir, seed, recenter, resample, config_path;
  std::optional<int> runs, steps, workers;
  std::vector<std::string> overrides;
  bool zero_gain = false;
  run->add_option("--scenario", scenario, "spacecraft or ungm");
  run->add_option("--runs", runs, "Monte Carlo runs");
  run->add_option("--steps", steps, "Filter epochs per run");
  run->add_option("--ensemble", ensemble, "Comma-separated ensemble sizes, e.g. 13,21");
  run->add_option("--seed", seed, "Master seed (falls back to ENCKF_SEED, then 0)");
  run->add_option("--modes", modes, "Comma-separated filter modes: enkf,enckf");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--workers", workers, "Worker threads (0: available parallelism)");
  run->add_option("--config", config_path, "JSON config file; flags take precedence");
  run->add_option("--recenter", recenter, "Recenter resampled ensembles: on or off");
  run->add_option("--resample", resample, "Consider resampling scheme: conditional or full");
  run->add_option("--override", overrides, "Scenario constant override key=value (repeatable)");
  run->add_flag("--enkf-zero-param-gain", zero_gain,
                "EnKF baseline: keep parameter members fixed in the update");

  std::string compare_dir;
  auto* compare = app.add_subcommand("compare", "Summarise a results directory written by run");
  compare->add_option("dir", compare_dir, "Results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (*describe) {
    try {
      out << describe_scenario(parse_scenario_name(describe_name)).dump(2) << "\n";
      return kExitOk;
    } catch (const UnknownScenario& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  if (*compare) {
    try {
      const RmseReport report = read_report(compare_dir);
      print_comparison(compare_report(report), out);
      return kExitOk;
    } catch (const ReportFormatError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }

  // run
  CliConfig cfg;
  try {
    CliSettings flags;
    if (!scenario.empty()) flags.scenario = scenario;
    flags.runs = runs;
    flags.steps = steps;
    if (!ensemble.empty()) {
      std::vector<int> sizes;
      for (const auto& item : split_list(ensemble)) {
        sizes.push_back(static_cast<int>(parse_seed(item, "--ensemble")));
      }
      flags.ensemble_sizes = sizes;
    }
    if (!seed.empty()) flags.seed = parse_seed(seed, "--seed");
    if (!modes.empty()) flags.modes = split_list(modes);
    if (!out_dir.empty()) flags.out_dir = out_dir;
    flags.workers = workers;
    if (!recenter.empty()) flags.recenter = parse_on_off(recenter);
    if (!resample.empty()) flags.resample = resample;
    if (zero_gain) flags.enkf_zero_param_gain = true;
    for (const auto& o : overrides) {
      const auto [key, value] = parse_override(o);
      flags.overrides[key] = value;
    }

    const CliSettings file = config_path.empty() ? CliSettings{} : load_config_file(config_path);
    std::optional<std::string> env_seed;
    if (const char* e = std::getenv("ENCKF_SEED")) env_seed = e;
    cfg = resolve_config(flags, file, env_seed);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const RmseReport report = run_campaign(cfg.spec, cfg.options);
    write_report(report, cfg.out_dir);
    print_summary(report, out);
    out << "wrote " << report.series.size() << " series to " << cfg.out_dir.string() << " ("
        << std::fixed << std::setprecision(2) << report.wall_seconds << " s)\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: campaign failed: " << e.what() << "\n";
    try {
      write_failure_marker(cfg.out_dir, cfg.to_json(), e.what());
    } catch (const std::exception& marker) {
      err << "error: could not write failure marker: " << marker.what() << "\n";
    }
    return kExitFailure;
  }
}

}  // namespace enckf
