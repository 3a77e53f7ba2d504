#include "enckf/filters.hpp"

#include <sstream>

namespace enckf {

std::string to_string(FilterMode mode) { return mode == FilterMode::enkf ? "enkf" : "enckf"; }

FilterMode parse_filter_mode(std::string_view text) {
  if (text == "enkf") return FilterMode::enkf;
  if (text == "enckf") return FilterMode::enckf;
  throw ModelError("unknown filter mode '" + std::string(text) + "' (expected enkf or enckf)");
}

std::string to_string(ResampleScheme scheme) {
  return scheme == ResampleScheme::conditional ? "conditional" : "full";
}

ResampleScheme parse_resample_scheme(std::string_view text) {
  if (text == "conditional") return ResampleScheme::conditional;
  if (text == "full") return ResampleScheme::full;
  throw ModelError("unknown resample scheme '" + std::string(text) +
                   "' (expected conditional or full)");
}

void FilterConfig::validate() const {
  if (ensemble_size < 2) throw ModelError("ensemble_size must be at least 2");
}

Matrix AugmentedEnsemble::stacked() const {
  Matrix out(states.rows() + params.rows(), states.cols());
  out << states, params;
  return out;
}

void AugmentedEnsemble::validate(const SystemModel& model) const {
  if (size() < 2) throw ModelError("ensemble needs at least 2 members");
  require_dim(states, model.state_dim, size(), "ensemble states");
  require_dim(params, model.param_dim, size(), "ensemble params");
}

Matrix CovarianceBlocks::joint() const {
  const auto n = p_xx.rows();
  const auto l = p_bb.rows();
  Matrix out(n + l, n + l);
  out.topLeftCorner(n, n) = p_xx;
  out.topRightCorner(n, l) = p_xb;
  out.bottomLeftCorner(l, n) = p_xb.transpose();
  out.bottomRightCorner(l, l) = p_bb;
  return out;
}

namespace {

Vector column_mean(const Matrix& members) { return members.rowwise().mean(); }

Matrix deviations(const Matrix& members, const Vector& center) {
  return members.colwise() - center;
}

Matrix outer(const Matrix& a, const Matrix& b, int m) {
  return a * b.transpose() / static_cast<double>(m - 1);
}

void recenter(Matrix& members, const Vector& target) {
  const Vector shift = target - column_mean(members);
  members.colwise() += shift;
}

// Rescale deviations about `center` so their sample covariance is exactly
// `target`. Skipped when the sample covariance is singular.
void match_covariance(Matrix& members, const Vector& center, const Matrix& target) {
  const int m = static_cast<int>(members.cols());
  Matrix dev = deviations(members, center);
  Eigen::LLT<Matrix> sample(outer(dev, dev, m));
  Eigen::LLT<Matrix> wanted(target);
  if (sample.info() != Eigen::Success || wanted.info() != Eigen::Success) return;
  const Matrix whitened = sample.matrixL().solve(dev);
  members = wanted.matrixL() * whitened;
  members.colwise() += center;
}

// Recentering: exact target mean for both blocks, and parameter deviations
// whose sample covariance equals Q_b, so that the P_bb = Q_b used by the
// consider update is a property of the ensemble itself.
void recenter_params(Matrix& params, const Vector& b_ref, const Matrix& q_b) {
  recenter(params, b_ref);
  match_covariance(params, b_ref, q_b);
}

// Sample mean and covariance blocks of a posterior ensemble.
FilterEstimate sample_estimate(const AugmentedEnsemble& ens) {
  const int m = ens.size();
  FilterEstimate est;
  est.epoch = ens.epoch;
  est.mean_state = column_mean(ens.states);
  est.mean_param = column_mean(ens.params);
  const Matrix dx = deviations(ens.states, est.mean_state);
  const Matrix db = deviations(ens.params, est.mean_param);
  est.cov.p_xx = symmetrize(outer(dx, dx, m));
  est.cov.p_xb = outer(dx, db, m);
  est.cov.p_bb = symmetrize(outer(db, db, m));
  return est;
}

}  // namespace

AugmentedEnsemble init_ensemble(const SystemModel& model, const Vector& x0_mean, const Matrix& p0,
                                const FilterConfig& cfg, SeededRng& rng) {
  model.validate();
  cfg.validate();
  require_dim(x0_mean, model.state_dim, "init_ensemble x0_mean");
  require_dim(p0, model.state_dim, model.state_dim, "init_ensemble P0");

  const LowerTriangular s0 = cholesky_lower(p0);
  const LowerTriangular sb = cholesky_lower(model.param_cov);
  AugmentedEnsemble ens;
  ens.states = sample_mvn(x0_mean, s0, rng, cfg.ensemble_size);
  ens.params = sample_mvn(model.param_reference, sb, rng, cfg.ensemble_size);
  ens.epoch = 0;
  if (cfg.recenter_resample) {
    recenter(ens.states, x0_mean);
    recenter_params(ens.params, model.param_reference, model.param_cov);
    ens.param_center = model.param_reference;
  }
  return ens;
}

Prediction predict(const SystemModel& model, const AugmentedEnsemble& ens, SeededRng& rng,
                   ParamCentering centering) {
  ens.validate(model);
  const int m = ens.size();
  const int n = model.state_dim;
  const int k = ens.epoch + 1;

  const Matrix noise =
      sample_mvn(Vector::Zero(n), cholesky_lower(model.process_noise_cov), rng, m);

  Prediction out;
  out.ensemble.epoch = k;
  out.ensemble.params = ens.params;
  out.ensemble.param_center = ens.param_center;
  out.ensemble.states.resize(n, m);
  for (int i = 0; i < m; ++i) {
    Vector x = model.transition(ens.states.col(i), ens.params.col(i), k);
    require_dim(x, n, "transition output");
    x += noise.col(i);
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "predict: non-finite state at epoch " << k << ", member " << i;
      throw NumericalError(os.str());
    }
    out.ensemble.states.col(i) = x;
  }

  const Vector x_mean = column_mean(out.ensemble.states);
  const Vector b_mean = ens.param_center ? *ens.param_center : column_mean(ens.params);
  out.mean.resize(n + model.param_dim);
  out.mean << x_mean, b_mean;

  const Vector& b_center = centering == ParamCentering::reference ? model.param_reference : b_mean;
  out.deviations.m_x = deviations(out.ensemble.states, x_mean);
  out.deviations.m_b = deviations(ens.params, b_center);
  out.cov.p_xx = outer(out.deviations.m_x, out.deviations.m_x, m);
  out.cov.p_xb = outer(out.deviations.m_x, out.deviations.m_b, m);
  out.cov.p_bb = outer(out.deviations.m_b, out.deviations.m_b, m);
  return out;
}

MeasurementEnsemble measurement_ensemble(const SystemModel& model, const AugmentedEnsemble& ens) {
  ens.validate(model);
  const int m = ens.size();
  MeasurementEnsemble out;
  out.members.resize(model.meas_dim, m);
  for (int i = 0; i < m; ++i) {
    Vector z = model.measurement(ens.states.col(i), ens.params.col(i));
    require_dim(z, model.meas_dim, "measurement output");
    if (!z.allFinite()) {
      std::ostringstream os;
      os << "measurement_ensemble: non-finite measurement at epoch " << ens.epoch << ", member "
         << i;
      throw NumericalError(os.str());
    }
    out.members.col(i) = z;
  }
  out.mean = column_mean(out.members);
  out.m_z = deviations(out.members, out.mean);
  return out;
}

Gains gains_and_covariances(const Matrix& m_x, const Matrix& m_b, const Matrix& m_z,
                            const Matrix& r) {
  const auto m = m_z.cols();
  if (m < 2) throw ModelError("gains_and_covariances: need at least 2 members");
  if (m_x.cols() != m || m_b.cols() != m) {
    throw DimensionError("gains_and_covariances: deviation matrices disagree on ensemble size");
  }
  require_dim(r, static_cast<int>(m_z.rows()), static_cast<int>(m_z.rows()), "R");

  const int mm = static_cast<int>(m);
  Gains g;
  g.p_zz = symmetrize(outer(m_z, m_z, mm) + r);
  g.p_xz = outer(m_x, m_z, mm);
  g.p_bz = outer(m_b, m_z, mm);

  Eigen::LLT<Matrix> llt(g.p_zz);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("gains_and_covariances: innovation covariance singular");
  }
  // K = P_{.z} P_zz^{-1}, solved as P_zz K^T = P_{.z}^T.
  g.k_x = llt.solve(g.p_xz.transpose()).transpose();
  g.k_b = llt.solve(g.p_bz.transpose()).transpose();
  if (!g.k_x.allFinite() || !g.k_b.allFinite()) {
    throw NumericalError("gains_and_covariances: innovation covariance singular");
  }
  return g;
}

namespace {

// z + v^i, v^i ~ N(0, R).
Matrix perturbed_observations(const Vector& z_actual, const Matrix& r, SeededRng& rng, int m) {
  return sample_mvn(z_actual, cholesky_lower(r), rng, m);
}

void check_update_inputs(const AugmentedEnsemble& prior, const MeasurementEnsemble& meas,
                         const Vector& z_actual, const Gains& gains) {
  const int m = prior.size();
  const int p = static_cast<int>(meas.members.rows());
  require_dim(meas.members, p, m, "measurement ensemble");
  require_dim(z_actual, p, "z_actual");
  require_dim(gains.k_x, static_cast<int>(prior.states.rows()), p, "K_x");
  require_dim(gains.k_b, static_cast<int>(prior.params.rows()), p, "K_b");
}

}  // namespace

UpdateResult update_enkf(const AugmentedEnsemble& prior, const MeasurementEnsemble& meas,
                         const Vector& z_actual, const Gains& gains, SeededRng& rng,
                         const Matrix& r) {
  check_update_inputs(prior, meas, z_actual, gains);
  const int m = prior.size();
  const Matrix innovations = perturbed_observations(z_actual, r, rng, m) - meas.members;

  UpdateResult out;
  out.ensemble.epoch = prior.epoch;
  out.ensemble.states = prior.states + gains.k_x * innovations;
  out.ensemble.params = prior.params + gains.k_b * innovations;
  out.estimate = sample_estimate(out.ensemble);
  return out;
}

UpdateResult update_enckf(const Prediction& prediction, const MeasurementEnsemble& meas,
                          const Vector& z_actual, const Gains& gains, SeededRng& rng,
                          const Matrix& r, const Matrix& q_b, RepairLog* log) {
  const AugmentedEnsemble& prior = prediction.ensemble;
  check_update_inputs(prior, meas, z_actual, gains);
  const int m = prior.size();
  const int n = static_cast<int>(prior.states.rows());
  const int l = static_cast<int>(prior.params.rows());
  require_dim(q_b, l, l, "Q_b");

  const Matrix innovations = perturbed_observations(z_actual, r, rng, m) - meas.members;

  UpdateResult out;
  out.ensemble.epoch = prior.epoch;
  out.ensemble.states = prior.states + gains.k_x * innovations;
  out.ensemble.params = prior.params;
  out.ensemble.param_center = prior.param_center;

  FilterEstimate& est = out.estimate;
  est.epoch = prior.epoch;
  est.mean_state = column_mean(out.ensemble.states);
  est.mean_param = prediction.mean.tail(l);

  Matrix p_xx = symmetrize(prediction.cov.p_xx - gains.k_x * gains.p_zz * gains.k_x.transpose());
  if (n > 0) {
    const double lambda_min = min_eigenvalue(p_xx);
    if (lambda_min < 0.0) {
      if (log) log->record(lambda_min);
      p_xx = psd_repair(p_xx);
    }
  }
  est.cov.p_xx = std::move(p_xx);
  est.cov.p_xb = prediction.cov.p_xb - gains.k_x * gains.p_bz.transpose();
  est.cov.p_bb = q_b;
  return out;
}

AugmentedEnsemble resample(const FilterEstimate& estimate, const AugmentedEnsemble& posterior,
                           const Vector& b_ref, const Matrix& q_b, const FilterConfig& cfg,
                           SeededRng& rng, RepairLog* log) {
  cfg.validate();
  const int n = static_cast<int>(estimate.mean_state.size());
  const int l = static_cast<int>(b_ref.size());
  const int m = cfg.ensemble_size;
  require_dim(q_b, l, l, "resample Q_b");

  const LowerTriangular s = augmented_sqrt(estimate.cov.p_xx, estimate.cov.p_xb, q_b, log);

  AugmentedEnsemble out;
  out.epoch = estimate.epoch;
  if (cfg.resample_scheme == ResampleScheme::full) {
    Vector target(n + l);
    target << estimate.mean_state, b_ref;
    Matrix members = sample_mvn(target, s, rng, m);
    out.states = members.topRows(n);
    out.params = members.bottomRows(l);
    if (cfg.recenter_resample) {
      recenter(out.states, estimate.mean_state);
      recenter_params(out.params, b_ref, q_b);
    }
  } else {
    require_dim(posterior.states, n, m, "resample posterior states");
    const Matrix& full = s.matrix();
    const LowerTriangular s_xx(full.topLeftCorner(n, n));
    const Matrix whitened =
        forward_substitute(s_xx, deviations(posterior.states, estimate.mean_state));
    const Matrix u = rng.standard_normal_matrix(l, m);
    Matrix params = full.bottomLeftCorner(l, n) * whitened + full.bottomRightCorner(l, l) * u;
    params.colwise() += b_ref;
    if (cfg.recenter_resample) recenter_params(params, b_ref, q_b);
    out.states = posterior.states;
    out.params = std::move(params);
  }
  if (cfg.recenter_resample) out.param_center = b_ref;
  return out;
}

FilterStreams FilterStreams::for_run(std::uint64_t seed, std::uint64_t run, int ensemble_size) {
  const auto m = static_cast<std::uint64_t>(ensemble_size);
  return FilterStreams{
      SeededRng(seed, stream_id(run, m, StreamPurpose::filter_init)),
      SeededRng(seed, stream_id(run, m, StreamPurpose::filter_process)),
      SeededRng(seed, stream_id(run, m, StreamPurpose::filter_perturbation)),
      SeededRng(seed, stream_id(run, m, StreamPurpose::filter_resample)),
  };
}

EnsembleFilter::EnsembleFilter(SystemModel model, FilterConfig cfg, const Vector& x0_mean,
                               const Matrix& p0, FilterStreams streams)
    : model_(std::move(model)), cfg_(cfg), streams_(std::move(streams)) {
  ensemble_ = init_ensemble(model_, x0_mean, p0, cfg_, streams_.init);
}

FilterEstimate EnsembleFilter::step(const Vector& z_actual) {
  const bool consider = cfg_.mode == FilterMode::enckf;
  if (consider && estimate_) {
    ensemble_ = resample(*estimate_, ensemble_, model_.param_reference, model_.param_cov, cfg_,
                         streams_.resample, &repairs_);
  }
  const Prediction prediction =
      predict(model_, ensemble_, streams_.process,
              consider ? ParamCentering::reference : ParamCentering::ensemble_mean);
  const MeasurementEnsemble meas = measurement_ensemble(model_, prediction.ensemble);
  Gains gains = gains_and_covariances(prediction.deviations.m_x, prediction.deviations.m_b,
                                      meas.m_z, model_.meas_noise_cov);
  if (!consider && cfg_.zero_param_gain) gains.k_b.setZero();
  UpdateResult result =
      consider ? update_enckf(prediction, meas, z_actual, gains, streams_.perturbation,
                              model_.meas_noise_cov, model_.param_cov, &repairs_)
               : update_enkf(prediction.ensemble, meas, z_actual, gains, streams_.perturbation,
                             model_.meas_noise_cov);
  ensemble_ = std::move(result.ensemble);
  estimate_ = result.estimate;
  return result.estimate;
}

}  // namespace enckf
