#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "enckf/numkit.hpp"
#include "enckf/rng.hpp"
#include "enckf/sysmodel.hpp"

namespace enckf {

/// enkf: perturbed-observation EnKF on the augmented [x; b] ensemble with the
/// full augmented gain. enckf: consider variant, parameter gain forced to
/// zero and the ensemble resampled from the augmented covariance every step.
enum class FilterMode { enkf, enckf };

/// How the consider filter regenerates its ensemble between steps.
///  - conditional: posterior state members are kept; parameter members are
///    drawn from the Gaussian conditional b | x implied by the augmented
///    square root (state rows of S_XX reproduce the kept deviations exactly).
///  - full: every member is redrawn from N([x_hat; b_ref], S_XX S_XX^T).
enum class ResampleScheme { conditional, full };

std::string to_string(FilterMode mode);
FilterMode parse_filter_mode(std::string_view text);
std::string to_string(ResampleScheme scheme);
ResampleScheme parse_resample_scheme(std::string_view text);

struct FilterConfig {
  int ensemble_size = 13;
  FilterMode mode = FilterMode::enckf;
  bool recenter_resample = true;
  std::uint64_t seed = 0;
  ResampleScheme resample_scheme = ResampleScheme::conditional;
  /// EnKF only: apply K_b = 0 instead of the full augmented gain.
  bool zero_param_gain = false;

  void validate() const;
};

/// m members of the augmented state, one per column.
struct AugmentedEnsemble {
  Matrix states;  // n x m
  Matrix params;  // l x m
  int epoch = 0;
  /// Exact parameter mean when it is known by construction (recentered
  /// draws); the rounded column mean is used otherwise.
  std::optional<Vector> param_center;

  int size() const { return static_cast<int>(states.cols()); }
  Matrix stacked() const;
  void validate(const SystemModel& model) const;
};

struct DeviationMatrices {
  Matrix m_x;  // states about their ensemble mean
  Matrix m_b;  // parameters about the reference (consider) or the mean (enkf)
  Matrix m_z;  // predicted measurements about their mean
};

struct CovarianceBlocks {
  Matrix p_xx;
  Matrix p_xb;
  Matrix p_bb;

  Matrix joint() const;
};

struct FilterEstimate {
  Vector mean_state;
  Vector mean_param;
  CovarianceBlocks cov;
  int epoch = 0;
};

struct Prediction {
  AugmentedEnsemble ensemble;
  Vector mean;  // stacked [x_hat^-; b_hat^-]
  DeviationMatrices deviations;  // m_z left empty
  CovarianceBlocks cov;
};

struct MeasurementEnsemble {
  Matrix members;  // p x m, h(x^i, b^i)
  Vector mean;
  Matrix m_z;
};

struct Gains {
  Matrix p_zz;
  Matrix p_xz;
  Matrix p_bz;
  Matrix k_x;
  Matrix k_b;
};

struct UpdateResult {
  AugmentedEnsemble ensemble;
  FilterEstimate estimate;
};

/// Where parameter deviations are taken: the consider filter uses the fixed
/// reference b_ref, the plain EnKF the ensemble mean.
enum class ParamCentering { ensemble_mean, reference };

/// States ~ N(x0_mean, P0), parameters ~ N(b_ref, Q_b), drawn independently.
/// With cfg.recenter_resample both blocks are shifted onto their targets.
AugmentedEnsemble init_ensemble(const SystemModel& model, const Vector& x0_mean, const Matrix& p0,
                                const FilterConfig& cfg, SeededRng& rng);

/// Time update: x^i <- f(x^i, b^i, k) + w^i, parameters carried unchanged,
/// P_xx^- = M_x M_x^T / (m-1), P_xb^- = M_x M_b^T / (m-1).
Prediction predict(const SystemModel& model, const AugmentedEnsemble& ens, SeededRng& rng,
                   ParamCentering centering);

/// Z^i = h(x^i, b^i), its mean and deviations.
MeasurementEnsemble measurement_ensemble(const SystemModel& model, const AugmentedEnsemble& ens);

/// P_zz = M_z M_z^T / (m-1) + R, P_xz, P_bz and the gains K_x, K_b.
Gains gains_and_covariances(const Matrix& m_x, const Matrix& m_b, const Matrix& m_z,
                            const Matrix& r);

/// Full augmented update against perturbed observations z + v^i.
UpdateResult update_enkf(const AugmentedEnsemble& prior, const MeasurementEnsemble& meas,
                         const Vector& z_actual, const Gains& gains, SeededRng& rng,
                         const Matrix& r);

/// Consider update: states use K_x, parameters stay put, and the covariance
/// blocks follow P_xx^+ = P_xx^- - K_x P_zz K_x^T, P_xb^+ = P_xb^- - K_x P_bz^T,
/// P_bb^+ = Q_b. A negative P_xx^+ is repaired and logged.
UpdateResult update_enckf(const Prediction& prediction, const MeasurementEnsemble& meas,
                          const Vector& z_actual, const Gains& gains, SeededRng& rng,
                          const Matrix& r, const Matrix& q_b, RepairLog* log = nullptr);

/// Regenerate the ensemble from the posterior estimate and the augmented
/// square root of [[P_xx, P_xb], [P_xb^T, Q_b]], centred on [x_hat; b_ref].
/// `posterior` supplies the kept state members for the conditional scheme.
AugmentedEnsemble resample(const FilterEstimate& estimate, const AugmentedEnsemble& posterior,
                           const Vector& b_ref, const Matrix& q_b, const FilterConfig& cfg,
                           SeededRng& rng, RepairLog* log = nullptr);

/// The four random streams a filter consumes.
struct FilterStreams {
  SeededRng init;
  SeededRng process;
  SeededRng perturbation;
  SeededRng resample;

  /// Streams keyed by (seed, run, ensemble size) only, so EnKF and EnCKF
  /// runs with the same key see the same draws.
  static FilterStreams for_run(std::uint64_t seed, std::uint64_t run, int ensemble_size);
};

/// One filter instance: owns its ensemble, streams and diagnostics.
class EnsembleFilter {
 public:
  EnsembleFilter(SystemModel model, FilterConfig cfg, const Vector& x0_mean, const Matrix& p0,
                 FilterStreams streams);

  /// Resample (consider mode, after the first epoch), predict, update.
  FilterEstimate step(const Vector& z_actual);

  const AugmentedEnsemble& ensemble() const { return ensemble_; }
  const std::optional<FilterEstimate>& last_estimate() const { return estimate_; }
  const RepairLog& repairs() const { return repairs_; }
  const FilterConfig& config() const { return cfg_; }
  int epoch() const { return ensemble_.epoch; }

 private:
  SystemModel model_;
  FilterConfig cfg_;
  FilterStreams streams_;
  AugmentedEnsemble ensemble_;
  std::optional<FilterEstimate> estimate_;
  RepairLog repairs_;
};

}  // namespace enckf
