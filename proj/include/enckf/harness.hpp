#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "enckf/filters.hpp"
#include "enckf/scenarios.hpp"

namespace enckf {

inline constexpr const char* kVersion = "0.1.0";

/// A campaign run failed; the message names the (run, mode, m) that aborted.
class CampaignError : public std::runtime_error {
 public:
  CampaignError(const std::string& what, int run, FilterMode mode, int ensemble_size)
      : std::runtime_error(what), run_(run), mode_(mode), ensemble_size_(ensemble_size) {}
  int run() const { return run_; }
  FilterMode mode() const { return mode_; }
  int ensemble_size() const { return ensemble_size_; }

 private:
  int run_;
  FilterMode mode_;
  int ensemble_size_;
};

/// Covariance health observed over every epoch of every run of one series.
struct CovarianceAudit {
  long repair_count = 0;
  long runs_with_repairs = 0;
  long epochs_checked = 0;
  double max_asymmetry = 0.0;        // max |P - P^T| / max(1, max|P|) over P_xx
  double min_eigenvalue = 0.0;       // smallest eigenvalue of any reported P_xx
  double max_param_mean_offset = 0.0;  // consider mode: max |b_hat - b_ref|
  double max_pbb_offset = 0.0;         // consider mode: max |P_bb - Q_b|

  void merge(const CovarianceAudit& other);
};

struct RmseSeries {
  FilterMode mode = FilterMode::enkf;
  int ensemble_size = 0;
  Matrix per_epoch;          // K x n, row k-1 holds epoch k
  Vector component_mean;     // per-component mean over epochs
  double mean_rmse = 0.0;    // mean over epochs and components
  CovarianceAudit audit;
};

struct CampaignOptions {
  std::vector<FilterMode> modes{FilterMode::enkf, FilterMode::enckf};
  int workers = 0;  // 0: hardware concurrency
  bool recenter = true;
  ResampleScheme resample_scheme = ResampleScheme::conditional;
  bool enkf_zero_param_gain = false;
};

struct RmseReport {
  ScenarioSpec spec;
  CampaignOptions options;
  std::vector<RmseSeries> series;
  double wall_seconds = 0.0;

  /// nullptr when the series is absent.
  const RmseSeries* find(FilterMode mode, int ensemble_size) const;
};

/// Sums squared errors across runs; RMSE_k[c] = sqrt(mean over runs).
class RmseAccumulator {
 public:
  RmseAccumulator(int steps, int dim);
  /// errors: steps x dim, estimate minus truth.
  void add_run(const Matrix& errors);
  Matrix per_epoch() const;
  int runs() const { return runs_; }

 private:
  Matrix sum_sq_;
  int runs_ = 0;
};

/// Average of a K x n RMSE table over all cells.
double mean_rmse(const Matrix& per_epoch);

/// Posterior estimates for epochs 1..K of one filter against one truth.
struct FilterRun {
  std::vector<FilterEstimate> estimates;
  RepairLog repairs;
};

FilterRun run_filter(const Scenario& scenario, const FilterConfig& cfg, const TruthTrajectory& truth,
                     std::uint64_t run);

/// Monte Carlo campaign: every (mode, m) pair filters the same truth in each
/// run. Results do not depend on the worker count.
RmseReport run_campaign(const ScenarioSpec& spec, const CampaignOptions& options);

struct ComparisonRow {
  int ensemble_size = 0;
  double mean_enkf = 0.0;
  double mean_enckf = 0.0;
  /// Share of (epoch, component) cells where EnCKF RMSE < EnKF RMSE; ties lose.
  double win_fraction = 0.0;
  Vector component_win_fraction;
};

struct ComparisonSummary {
  std::vector<ComparisonRow> rows;
};

/// Share of cells where challenger < baseline (strict).
double win_fraction(const Matrix& challenger, const Matrix& baseline);

/// Pairs EnCKF with EnKF at each ensemble size present in both. Throws
/// ModelError when the report does not contain both modes.
ComparisonSummary compare_report(const RmseReport& report);

}  // namespace enckf
