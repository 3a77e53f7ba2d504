#include "enckf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace enckf {

void CovarianceAudit::merge(const CovarianceAudit& other) {
  repair_count += other.repair_count;
  runs_with_repairs += other.runs_with_repairs;
  epochs_checked += other.epochs_checked;
  max_asymmetry = std::max(max_asymmetry, other.max_asymmetry);
  min_eigenvalue = std::min(min_eigenvalue, other.min_eigenvalue);
  max_param_mean_offset = std::max(max_param_mean_offset, other.max_param_mean_offset);
  max_pbb_offset = std::max(max_pbb_offset, other.max_pbb_offset);
}

const RmseSeries* RmseReport::find(FilterMode mode, int ensemble_size) const {
  for (const auto& s : series) {
    if (s.mode == mode && s.ensemble_size == ensemble_size) return &s;
  }
  return nullptr;
}

RmseAccumulator::RmseAccumulator(int steps, int dim) : sum_sq_(Matrix::Zero(steps, dim)) {}

void RmseAccumulator::add_run(const Matrix& errors) {
  require_dim(errors, static_cast<int>(sum_sq_.rows()), static_cast<int>(sum_sq_.cols()),
              "RMSE errors");
  sum_sq_ += errors.cwiseAbs2();
  ++runs_;
}

Matrix RmseAccumulator::per_epoch() const {
  if (runs_ == 0) throw ModelError("RmseAccumulator: no runs added");
  return (sum_sq_ / static_cast<double>(runs_)).cwiseSqrt();
}

double mean_rmse(const Matrix& per_epoch) {
  if (per_epoch.size() == 0) throw ModelError("mean_rmse: empty table");
  return per_epoch.mean();
}

FilterRun run_filter(const Scenario& scenario, const FilterConfig& cfg, const TruthTrajectory& truth,
                     std::uint64_t run) {
  EnsembleFilter filter(scenario.filter_model(cfg.mode), cfg, scenario.x0_mean, scenario.p0,
                        FilterStreams::for_run(cfg.seed, run, cfg.ensemble_size));
  FilterRun out;
  out.estimates.reserve(truth.measurements.size());
  for (const Vector& z : truth.measurements) out.estimates.push_back(filter.step(z));
  out.repairs = filter.repairs();
  return out;
}

namespace {

struct SeriesKey {
  FilterMode mode;
  int ensemble_size;
};

struct RunResult {
  std::vector<Matrix> errors;  // per series, K x n
  std::vector<CovarianceAudit> audits;
};

CovarianceAudit audit_run(const FilterRun& fr, const SystemModel& model, FilterMode mode) {
  CovarianceAudit a;
  a.repair_count = fr.repairs.count;
  a.runs_with_repairs = fr.repairs.count > 0 ? 1 : 0;
  for (const auto& est : fr.estimates) {
    ++a.epochs_checked;
    const Matrix& p = est.cov.p_xx;
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    a.max_asymmetry = std::max(a.max_asymmetry, (p - p.transpose()).cwiseAbs().maxCoeff() / scale);
    a.min_eigenvalue = std::min(a.min_eigenvalue, min_eigenvalue(p));
    if (mode == FilterMode::enckf) {
      a.max_param_mean_offset = std::max(
          a.max_param_mean_offset, (est.mean_param - model.param_reference).cwiseAbs().maxCoeff());
      a.max_pbb_offset =
          std::max(a.max_pbb_offset, (est.cov.p_bb - model.param_cov).cwiseAbs().maxCoeff());
    }
  }
  return a;
}

RunResult run_one(const Scenario& scenario, const ScenarioSpec& spec,
                  const CampaignOptions& options, const std::vector<SeriesKey>& keys, int run) {
  const TruthTrajectory truth = generate_truth(scenario, spec, run);
  const int n = scenario.model.state_dim;
  RunResult out;
  for (const auto& key : keys) {
    FilterConfig cfg;
    cfg.ensemble_size = key.ensemble_size;
    cfg.mode = key.mode;
    cfg.recenter_resample = options.recenter;
    cfg.seed = spec.seed;
    cfg.resample_scheme = options.resample_scheme;
    cfg.zero_param_gain = options.enkf_zero_param_gain;
    try {
      const FilterRun fr = run_filter(scenario, cfg, truth, static_cast<std::uint64_t>(run));
      Matrix err(spec.steps, n);
      for (int k = 0; k < spec.steps; ++k) {
        err.row(k) = (fr.estimates[k].mean_state - truth.states[k + 1]).transpose();
      }
      out.errors.push_back(std::move(err));
      out.audits.push_back(audit_run(fr, scenario.filter_model(key.mode), key.mode));
    } catch (const std::exception& e) {
      throw CampaignError("run " + std::to_string(run) + ", mode " + to_string(key.mode) +
                              ", m=" + std::to_string(key.ensemble_size) + ": " + e.what(),
                          run, key.mode, key.ensemble_size);
    }
  }
  return out;
}

}  // namespace

RmseReport run_campaign(const ScenarioSpec& spec, const CampaignOptions& options) {
  spec.validate();
  if (options.modes.empty()) throw ModelError("run_campaign: no filter modes selected");
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario scenario = build_scenario(spec);

  std::vector<SeriesKey> keys;
  std::set<int> sizes(spec.ensemble_sizes.begin(), spec.ensemble_sizes.end());
  std::set<FilterMode> modes(options.modes.begin(), options.modes.end());
  for (int m : sizes) {
    for (FilterMode mode : modes) keys.push_back({mode, m});
  }

  const int runs = spec.mc_runs;
  std::vector<RunResult> results(runs);
  std::vector<std::exception_ptr> failures(runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int run = next++; run < runs; run = next++) {
      try {
        results[run] = run_one(scenario, spec, options, keys, run);
      } catch (...) {
        failures[run] = std::current_exception();
      }
    }
  };

  int workers = options.workers > 0 ? options.workers
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, runs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  RmseReport report;
  report.spec = spec;
  report.options = options;
  const int n = scenario.model.state_dim;
  for (std::size_t s = 0; s < keys.size(); ++s) {
    RmseAccumulator acc(spec.steps, n);
    RmseSeries series;
    series.mode = keys[s].mode;
    series.ensemble_size = keys[s].ensemble_size;
    for (int run = 0; run < runs; ++run) {
      acc.add_run(results[run].errors[s]);
      series.audit.merge(results[run].audits[s]);
    }
    series.per_epoch = acc.per_epoch();
    series.component_mean = series.per_epoch.colwise().mean().transpose();
    series.mean_rmse = mean_rmse(series.per_epoch);
    report.series.push_back(std::move(series));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

double win_fraction(const Matrix& challenger, const Matrix& baseline) {
  if (challenger.rows() != baseline.rows() || challenger.cols() != baseline.cols()) {
    throw DimensionError("win_fraction: tables differ in shape");
  }
  if (challenger.size() == 0) throw ModelError("win_fraction: empty tables");
  const auto wins = (challenger.array() < baseline.array()).count();
  return static_cast<double>(wins) / static_cast<double>(challenger.size());
}

ComparisonSummary compare_report(const RmseReport& report) {
  std::set<int> sizes;
  for (const auto& s : report.series) sizes.insert(s.ensemble_size);
  ComparisonSummary summary;
  for (int m : sizes) {
    const RmseSeries* enkf = report.find(FilterMode::enkf, m);
    const RmseSeries* enckf = report.find(FilterMode::enckf, m);
    if (!enkf || !enckf) continue;
    ComparisonRow row;
    row.ensemble_size = m;
    row.mean_enkf = enkf->mean_rmse;
    row.mean_enckf = enckf->mean_rmse;
    row.win_fraction = win_fraction(enckf->per_epoch, enkf->per_epoch);
    const auto cols = enkf->per_epoch.cols();
    row.component_win_fraction.resize(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      row.component_win_fraction(c) = win_fraction(enckf->per_epoch.col(c), enkf->per_epoch.col(c));
    }
    summary.rows.push_back(std::move(row));
  }
  if (summary.rows.empty()) throw ModelError("need both modes (enkf and enckf) to compare");
  return summary;
}

}  // namespace enckf
