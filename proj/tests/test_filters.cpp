#include <gtest/gtest.h>

#include <cmath>

#include "enckf/filters.hpp"
#include "enckf/scenarios.hpp"

using namespace enckf;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
Vector scalar_vec(double v) { return Vector::Constant(1, v); }

/// Scalar random walk x_k = x_{k-1} + w observed directly (b unused).
SystemModel identity_model(double q, double r, double q_b) {
  SystemModel m;
  m.state_dim = m.meas_dim = m.param_dim = 1;
  m.transition = [](const Vector& x, const Vector&, int) { return x; };
  m.measurement = [](const Vector& x, const Vector&) { return x; };
  m.process_noise_cov = scalar(q);
  m.meas_noise_cov = scalar(r);
  m.param_reference = scalar_vec(0.0);
  m.param_cov = scalar(q_b);
  return m;
}

AugmentedEnsemble ensemble_of(const Matrix& states, const Matrix& params) {
  AugmentedEnsemble e;
  e.states = states;
  e.params = params;
  return e;
}

FilterConfig config(int m, FilterMode mode, bool recenter = true) {
  FilterConfig c;
  c.ensemble_size = m;
  c.mode = mode;
  c.recenter_resample = recenter;
  return c;
}

}  // namespace

TEST(Config, RejectsTinyEnsembleAndUnknownNames) {
  EXPECT_THROW(config(1, FilterMode::enkf).validate(), ModelError);
  EXPECT_THROW(parse_filter_mode("ukf"), ModelError);
  EXPECT_THROW(parse_resample_scheme("systematic"), ModelError);
  EXPECT_EQ(parse_filter_mode("enckf"), FilterMode::enckf);
  EXPECT_EQ(to_string(ResampleScheme::full), "full");
}

TEST(InitEnsemble, DegenerateCovarianceGivesCopies) {
  SystemModel model = build_spacecraft();
  model.param_cov = scalar(0.0);
  SeededRng rng(1, 1);
  const Vector x0 = (Vector(2) << 2.0, 1.0).finished();
  const AugmentedEnsemble e =
      init_ensemble(model, x0, Matrix::Zero(2, 2), config(5, FilterMode::enckf, false), rng);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(e.states.col(i), x0);
    EXPECT_EQ(e.params(0, i), 0.0);
  }
}

TEST(InitEnsemble, SpacecraftShapeAndParameterSpread) {
  const Scenario sc = build_scenario(ScenarioSpec::defaults(ScenarioName::spacecraft));
  SeededRng rng(4, 4);
  const AugmentedEnsemble e =
      init_ensemble(sc.model, sc.x0_mean, sc.p0, config(21, FilterMode::enckf), rng);
  EXPECT_EQ(e.states.cols(), 21);
  EXPECT_EQ(e.params.cols(), 21);
  const double mean = e.params.mean();
  const double sd = std::sqrt((e.params.array() - mean).square().sum() / 20.0);
  EXPECT_NEAR(sd, 0.5, 1e-12);  // recentering matches Q_b exactly

  SeededRng big(4, 5);
  const AugmentedEnsemble e2 =
      init_ensemble(sc.model, sc.x0_mean, sc.p0, config(100000, FilterMode::enckf, false), big);
  const double mean2 = e2.params.mean();
  const double sd2 = std::sqrt((e2.params.array() - mean2).square().sum() / 99999.0);
  EXPECT_NEAR(sd2, 0.5, 0.01);
}

TEST(InitEnsemble, DeterministicAndRejectsBadP0) {
  const Scenario sc = build_scenario(ScenarioSpec::defaults(ScenarioName::spacecraft));
  SeededRng a(8, 1), b(8, 1);
  const auto ea = init_ensemble(sc.model, sc.x0_mean, sc.p0, config(13, FilterMode::enckf), a);
  const auto eb = init_ensemble(sc.model, sc.x0_mean, sc.p0, config(13, FilterMode::enckf), b);
  EXPECT_EQ(ea.stacked(), eb.stacked());
  Matrix bad = sc.p0;
  bad(1, 1) = -1.0;
  EXPECT_THROW(init_ensemble(sc.model, sc.x0_mean, bad, config(13, FilterMode::enckf), a),
               ModelError);
}

TEST(Predict, IdentityDynamicsWithoutNoise) {
  const SystemModel model = identity_model(0.0, 1.0, 1.0);
  SeededRng rng(0, 0);
  const Matrix states = (Matrix(1, 4) << 0.5, -1.0, 2.0, 0.25).finished();
  const Prediction p =
      predict(model, ensemble_of(states, Matrix::Zero(1, 4)), rng, ParamCentering::ensemble_mean);
  EXPECT_EQ(p.ensemble.states, states);
  const double mean = states.mean();
  const double var = (states.array() - mean).square().sum() / 3.0;
  EXPECT_NEAR(p.cov.p_xx(0, 0), var, 1e-15);
  EXPECT_EQ(p.ensemble.epoch, 1);
}

TEST(Predict, TwoMemberHandExample) {
  const SystemModel model = identity_model(0.0, 1.0, 1.0);
  SeededRng rng(0, 0);
  const Prediction p = predict(model, ensemble_of((Matrix(1, 2) << 0.0, 2.0).finished(),
                                                  Matrix::Zero(1, 2)),
                               rng, ParamCentering::ensemble_mean);
  EXPECT_DOUBLE_EQ(p.mean(0), 1.0);
  EXPECT_EQ(p.deviations.m_x, (Matrix(1, 2) << -1.0, 1.0).finished());
  EXPECT_DOUBLE_EQ(p.cov.p_xx(0, 0), 2.0);
}

TEST(Predict, SpacecraftPinnedNoise) {
  SystemModel model = build_spacecraft();
  model.process_noise_cov.setZero();
  SeededRng rng(0, 0);
  const Matrix states = (Matrix(2, 3) << 2, 2, 2, 1, 1, 1).finished();
  const Prediction p =
      predict(model, ensemble_of(states, Matrix::Zero(1, 3)), rng, ParamCentering::reference);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(p.ensemble.states(0, i), 1.0);
    EXPECT_NEAR(p.ensemble.states(1, i), 0.0, 1e-15);
  }
  EXPECT_TRUE(p.cov.p_xx.isZero(1e-30));
}

TEST(Predict, DeviationIdentityAndCentering) {
  const Scenario sc = build_scenario(ScenarioSpec::defaults(ScenarioName::ungm));
  SeededRng init(3, 1), proc(3, 2);
  AugmentedEnsemble e = init_ensemble(sc.model, sc.x0_mean, sc.p0, config(13, FilterMode::enckf, false), init);
  const Prediction p = predict(sc.model, e, proc, ParamCentering::reference);
  const Matrix& mx = p.deviations.m_x;
  EXPECT_EQ(p.cov.p_xx * 12.0, mx * mx.transpose());
  EXPECT_LE(mx.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10 * 13 * (1 + mx.cwiseAbs().maxCoeff()));
  // Parameter deviations are about b_ref, not the ensemble mean.
  EXPECT_TRUE(p.deviations.m_b.isApprox((e.params.array() - 5.0).matrix(), 1e-15));
  EXPECT_GT(std::abs(p.deviations.m_b.sum()), 1e-6);
}

TEST(Predict, NonFiniteStateReportsEpochAndMember) {
  SystemModel model = identity_model(0.0, 1.0, 1.0);
  model.transition = [](const Vector& x, const Vector&, int) {
    return x(0) > 0 ? Vector::Constant(1, std::nan("")) : x;
  };
  SeededRng rng(0, 0);
  try {
    predict(model, ensemble_of((Matrix(1, 2) << -1.0, 1.0).finished(), Matrix::Zero(1, 2)), rng,
            ParamCentering::ensemble_mean);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("member 1"), std::string::npos) << e.what();
  }
}

TEST(MeasurementEnsemble, Examples) {
  const AugmentedEnsemble ung = ensemble_of((Matrix(1, 2) << 8.0, 8.0).finished(),
                                            (Matrix(1, 2) << 5.0, 5.0).finished());
  const MeasurementEnsemble z = measurement_ensemble(build_ungm(), ung);
  EXPECT_DOUBLE_EQ(z.members(0, 0), 8.2);
  EXPECT_TRUE(z.m_z.isZero(0.0));
  const AugmentedEnsemble sc = ensemble_of((Matrix(2, 2) << 1, 3, 0, 7).finished(), Matrix::Zero(1, 2));
  const MeasurementEnsemble zs = measurement_ensemble(build_spacecraft(), sc);
  EXPECT_DOUBLE_EQ(zs.members(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(zs.members(0, 1), 7.0);
}

TEST(Gains, ZeroMeasurementSpread) {
  const Matrix mx = (Matrix(1, 3) << -1, 0, 1).finished();
  const Gains g = gains_and_covariances(mx, mx, Matrix::Zero(1, 3), scalar(2.0));
  EXPECT_EQ(g.p_zz, scalar(2.0));
  EXPECT_TRUE(g.k_x.isZero(0.0));
}

TEST(Gains, ScalarHandExample) {
  // M_x = [-1, 1], M_z = [-2, 2], m = 2: P_xz = 4, P_zz = 8 + R = 9.
  const Gains g = gains_and_covariances((Matrix(1, 2) << -1, 1).finished(), Matrix::Zero(1, 2),
                                        (Matrix(1, 2) << -2, 2).finished(), scalar(1.0));
  EXPECT_DOUBLE_EQ(g.p_xz(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(g.p_zz(0, 0), 9.0);
  EXPECT_DOUBLE_EQ(g.k_x(0, 0), 4.0 / 9.0);
  EXPECT_TRUE(g.k_b.isZero(0.0));
}

TEST(Gains, GainOfFourFifths) {
  // M_x = M_z = [-sqrt2, sqrt2]: P_xz = 4, P_zz = 4 + 1 = 5, K_x = 0.8.
  const double s = std::sqrt(2.0);
  const Matrix dev = (Matrix(1, 2) << -s, s).finished();
  const Matrix m_b = (Matrix(1, 2) << 0.5, -0.5).finished();
  const Gains g = gains_and_covariances(dev, m_b, dev, scalar(1.0));
  EXPECT_NEAR(g.p_zz(0, 0), 5.0, 1e-15);
  EXPECT_NEAR(g.k_x(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(g.p_bz(0, 0), -s, 1e-15);
  EXPECT_NEAR(g.k_b(0, 0), -s / 5.0, 1e-15);
}

TEST(Gains, SingularInnovationCovarianceThrows) {
  EXPECT_THROW(gains_and_covariances(Matrix::Zero(1, 2), Matrix::Zero(1, 2), Matrix::Zero(1, 2),
                                     scalar(0.0)),
               NumericalError);
}

TEST(UpdateEnkf, ZeroGainLeavesEnsemble) {
  const AugmentedEnsemble prior = ensemble_of((Matrix(1, 3) << 1, 2, 3).finished(),
                                              (Matrix(1, 3) << 4, 5, 6).finished());
  MeasurementEnsemble meas{(Matrix(1, 3) << 1, 2, 3).finished(), scalar_vec(2.0),
                           (Matrix(1, 3) << -1, 0, 1).finished()};
  Gains g;
  g.k_x = scalar(0.0);
  g.k_b = scalar(0.0);
  SeededRng rng(0, 0);
  const UpdateResult u = update_enkf(prior, meas, scalar_vec(10.0), g, rng, scalar(1.0));
  EXPECT_EQ(u.ensemble.states, prior.states);
  EXPECT_EQ(u.ensemble.params, prior.params);
}

TEST(UpdateEnkf, ScalarArithmetic) {
  // R = 0 makes the perturbed observation equal z_actual exactly.
  const AugmentedEnsemble prior = ensemble_of((Matrix(1, 2) << 1, 2).finished(), Matrix::Zero(1, 2));
  MeasurementEnsemble meas{(Matrix(1, 2) << 1, 2).finished(), scalar_vec(1.5),
                           (Matrix(1, 2) << -0.5, 0.5).finished()};
  Gains g;
  g.k_x = scalar(0.8);
  g.k_b = scalar(0.0);
  SeededRng rng(0, 0);
  const UpdateResult u = update_enkf(prior, meas, scalar_vec(2.0), g, rng, scalar(0.0));
  EXPECT_DOUBLE_EQ(u.ensemble.states(0, 0), 1.8);
  EXPECT_DOUBLE_EQ(u.ensemble.states(0, 1), 2.0);  // zero innovation: unchanged
}

namespace {

Prediction scalar_prediction(double p_xx, double p_xb) {
  Prediction p;
  p.ensemble = ensemble_of((Matrix(1, 2) << 0.0, 1.0).finished(), Matrix::Zero(1, 2));
  p.mean = (Vector(2) << 0.5, 0.0).finished();
  p.cov.p_xx = scalar(p_xx);
  p.cov.p_xb = scalar(p_xb);
  p.cov.p_bb = scalar(1.0);
  return p;
}

}  // namespace

TEST(UpdateEnckf, CrossCovarianceArithmetic) {
  const Prediction pred = scalar_prediction(10.0, 1.0);
  MeasurementEnsemble meas{(Matrix(1, 2) << 0, 1).finished(), scalar_vec(0.5),
                           (Matrix(1, 2) << -0.5, 0.5).finished()};
  Gains g;
  g.k_x = scalar(0.8);
  g.k_b = scalar(0.3);
  g.p_zz = scalar(5.0);
  g.p_bz = scalar(0.5);
  SeededRng rng(0, 0);
  RepairLog log;
  const UpdateResult u = update_enckf(pred, meas, scalar_vec(1.0), g, rng, scalar(1.0),
                                      scalar(0.7), &log);
  EXPECT_DOUBLE_EQ(u.estimate.cov.p_xb(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(u.estimate.cov.p_xx(0, 0), 10.0 - 0.8 * 5.0 * 0.8);
  EXPECT_EQ(u.estimate.cov.p_bb, scalar(0.7));
  EXPECT_EQ(u.ensemble.params, pred.ensemble.params);  // K_b ignored
  EXPECT_EQ(u.estimate.mean_param, scalar_vec(0.0));
  EXPECT_EQ(log.count, 0);
}

TEST(UpdateEnckf, NegativePosteriorVarianceIsRepairedAndFlagged) {
  const Prediction pred = scalar_prediction(2.0, 1.0);
  MeasurementEnsemble meas{(Matrix(1, 2) << 0, 1).finished(), scalar_vec(0.5),
                           (Matrix(1, 2) << -0.5, 0.5).finished()};
  Gains g;
  g.k_x = scalar(0.8);
  g.k_b = scalar(0.0);
  g.p_zz = scalar(5.0);
  g.p_bz = scalar(0.5);
  SeededRng rng(0, 0);
  RepairLog log;
  const UpdateResult u =
      update_enckf(pred, meas, scalar_vec(1.0), g, rng, scalar(1.0), scalar(1.0), &log);
  EXPECT_EQ(log.count, 1);
  EXPECT_NEAR(log.most_negative_eigenvalue, -1.2, 1e-12);
  EXPECT_GE(u.estimate.cov.p_xx(0, 0), 0.0);
  EXPECT_LE(u.estimate.cov.p_xx(0, 0), 1e-12);
}

TEST(UpdateEnckf, MatchesEnkfWhenParametersAreFixed) {
  SystemModel model = build_ungm();
  model.param_cov = scalar(0.0);
  SeededRng init(5, 1), proc(5, 2);
  const Vector x0 = scalar_vec(0.0);
  const AugmentedEnsemble e =
      init_ensemble(model, x0, scalar(10.0), config(13, FilterMode::enckf, false), init);
  const Prediction pred = predict(model, e, proc, ParamCentering::reference);
  const MeasurementEnsemble meas = measurement_ensemble(model, pred.ensemble);
  const Gains g = gains_and_covariances(pred.deviations.m_x, pred.deviations.m_b, meas.m_z,
                                        model.meas_noise_cov);
  EXPECT_TRUE(g.k_b.isZero(0.0));
  SeededRng pa(5, 3), pb(5, 3);
  const UpdateResult a = update_enkf(pred.ensemble, meas, scalar_vec(9.0), g, pa, model.meas_noise_cov);
  const UpdateResult b = update_enckf(pred, meas, scalar_vec(9.0), g, pb, model.meas_noise_cov,
                                      model.param_cov);
  EXPECT_EQ(a.ensemble.states, b.ensemble.states);
  EXPECT_EQ(a.ensemble.params, b.ensemble.params);
  EXPECT_EQ(a.estimate.mean_state, b.estimate.mean_state);
}

namespace {

FilterEstimate estimate_of(const Vector& x, const Matrix& p_xx, const Matrix& p_xb) {
  FilterEstimate e;
  e.mean_state = x;
  e.mean_param = Vector::Zero(p_xb.cols());
  e.cov.p_xx = p_xx;
  e.cov.p_xb = p_xb;
  e.cov.p_bb = Matrix::Zero(p_xb.cols(), p_xb.cols());
  e.epoch = 3;
  return e;
}

}  // namespace

TEST(Resample, DegenerateCovarianceGivesCopies) {
  const Vector x = (Vector(2) << 1.0, -2.0).finished();
  const FilterEstimate est = estimate_of(x, Matrix::Zero(2, 2), Matrix::Zero(2, 1));
  AugmentedEnsemble posterior = ensemble_of(x.replicate(1, 6), Matrix::Zero(1, 6));
  for (ResampleScheme scheme : {ResampleScheme::conditional, ResampleScheme::full}) {
    for (bool recenter : {false, true}) {
      FilterConfig cfg = config(6, FilterMode::enckf, recenter);
      cfg.resample_scheme = scheme;
      SeededRng rng(1, 1);
      const AugmentedEnsemble out =
          resample(est, posterior, scalar_vec(3.0), scalar(0.0), cfg, rng);
      for (int i = 0; i < 6; ++i) {
        EXPECT_TRUE(out.states.col(i).isApprox(x, 1e-15));
        EXPECT_NEAR(out.params(0, i), 3.0, 1e-15);
      }
      EXPECT_EQ(out.epoch, 3);
    }
  }
}

TEST(Resample, RecenteringHitsTargetMean) {
  SeededRng gen(9, 9);
  for (ResampleScheme scheme : {ResampleScheme::conditional, ResampleScheme::full}) {
    const Matrix states = gen.standard_normal_matrix(2, 13);
    const Vector x = states.rowwise().mean();
    const Matrix dev = states.colwise() - x;
    const Matrix p_xx = dev * dev.transpose() / 12.0;
    const Matrix p_xb = (Matrix(2, 1) << 0.1, -0.05).finished();
    FilterConfig cfg = config(13, FilterMode::enckf, true);
    cfg.resample_scheme = scheme;
    SeededRng rng(2, 2);
    RepairLog log;
    const AugmentedEnsemble out = resample(estimate_of(x, p_xx, p_xb),
                                           ensemble_of(states, Matrix::Zero(1, 13)),
                                           scalar_vec(0.4), scalar(0.25), cfg, rng, &log);
    EXPECT_LE((out.states.rowwise().mean() - x).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(out.params.mean(), 0.4, 1e-12);
    ASSERT_TRUE(out.param_center.has_value());
    EXPECT_EQ((*out.param_center)(0), 0.4);
    const double var = (out.params.array() - 0.4).square().sum() / 12.0;
    EXPECT_NEAR(var, 0.25, 1e-12);
  }
}

TEST(Resample, UncorrelatedBlocksStayUncorrelated) {
  const int m = 100000;
  const double p_xx = 2.0, q_b = 0.5;
  for (ResampleScheme scheme : {ResampleScheme::conditional, ResampleScheme::full}) {
    SeededRng gen(12, 1);
    const Matrix states = std::sqrt(p_xx) * gen.standard_normal_matrix(1, m);
    const Vector x = states.rowwise().mean();
    const Matrix dev = states.colwise() - x;
    FilterConfig cfg = config(m, FilterMode::enckf, false);
    cfg.resample_scheme = scheme;
    SeededRng rng(12, 2);
    const AugmentedEnsemble out =
        resample(estimate_of(x, dev * dev.transpose() / (m - 1.0), Matrix::Zero(1, 1)),
                 ensemble_of(states, Matrix::Zero(1, m)), scalar_vec(0.0), scalar(q_b), cfg, rng);
    const Vector xm = out.states.rowwise().mean();
    const Vector bm = out.params.rowwise().mean();
    const double cross = ((out.states.colwise() - xm) * (out.params.colwise() - bm).transpose())(0, 0) /
                         (m - 1.0);
    EXPECT_LE(std::abs(cross), 0.02 * std::sqrt(p_xx * q_b)) << to_string(scheme);
  }
}

TEST(Resample, ConditionalSchemeReproducesCrossCovariance) {
  const int m = 200000;
  SeededRng gen(21, 1);
  const Matrix states = gen.standard_normal_matrix(1, m);
  const Vector x = states.rowwise().mean();
  const Matrix dev = states.colwise() - x;
  const double p_xx = (dev * dev.transpose())(0, 0) / (m - 1.0);
  FilterConfig cfg = config(m, FilterMode::enckf, false);
  SeededRng rng(21, 2);
  const AugmentedEnsemble out =
      resample(estimate_of(x, scalar(p_xx), scalar(0.3)), ensemble_of(states, Matrix::Zero(1, m)),
               scalar_vec(0.0), scalar(0.5), cfg, rng);
  EXPECT_EQ(out.states, states);
  const double cross = (dev * (out.params.array() - out.params.mean()).matrix().transpose())(0, 0) /
                       (m - 1.0);
  EXPECT_NEAR(cross, 0.3, 0.01);
  const double var = (out.params.array() - out.params.mean()).square().sum() / (m - 1.0);
  EXPECT_NEAR(var, 0.5, 0.01);
}

TEST(Step, SpacecraftNoiseFreeFirstStep) {
  SystemModel model = build_spacecraft();
  model.process_noise_cov.setZero();
  model.param_cov = scalar(0.0);
  const Vector x0 = (Vector(2) << 2.0, 1.0).finished();
  for (FilterMode mode : {FilterMode::enkf, FilterMode::enckf}) {
    EnsembleFilter f(model, config(13, mode), x0, Matrix::Zero(2, 2), FilterStreams::for_run(0, 0, 13));
    const FilterEstimate est = f.step(scalar_vec(0.0));
    EXPECT_NEAR(est.mean_state(0), 1.0, 1e-14);
    EXPECT_NEAR(est.mean_state(1), 0.0, 1e-14);
    EXPECT_EQ(f.epoch(), 1);
  }
}

TEST(Step, ReductionToEnkfWhenParameterIsCertain) {
  for (ScenarioName name : {ScenarioName::spacecraft, ScenarioName::ungm}) {
    ScenarioSpec spec = ScenarioSpec::defaults(name);
    spec.overrides["param_var"] = 0.0;
    spec.overrides["truth_param_var"] = name == ScenarioName::ungm ? 100.0 : 0.25;
    const Scenario sc = build_scenario(spec);
    const TruthTrajectory truth = generate_truth(sc, spec, 3);
    FilterConfig base = config(13, FilterMode::enkf, false);
    base.zero_param_gain = true;
    FilterConfig cons = config(13, FilterMode::enckf, false);
    EnsembleFilter a(sc.filter_model(FilterMode::enkf), base, sc.x0_mean, sc.p0,
                     FilterStreams::for_run(0, 3, 13));
    EnsembleFilter b(sc.filter_model(FilterMode::enckf), cons, sc.x0_mean, sc.p0,
                     FilterStreams::for_run(0, 3, 13));
    for (const Vector& z : truth.measurements) {
      const FilterEstimate ea = a.step(z);
      const FilterEstimate eb = b.step(z);
      ASSERT_EQ(ea.mean_state, eb.mean_state) << to_string(name) << " epoch " << ea.epoch;
    }
  }
}

TEST(Step, SpacecraftRunKeepsCovariancesHealthy) {
  const ScenarioSpec spec = ScenarioSpec::defaults(ScenarioName::spacecraft);
  const Scenario sc = build_scenario(spec);
  const TruthTrajectory truth = generate_truth(sc, spec, 0);
  for (FilterMode mode : {FilterMode::enkf, FilterMode::enckf}) {
    EnsembleFilter f(sc.filter_model(mode), config(13, mode), sc.x0_mean, sc.p0,
                     FilterStreams::for_run(0, 0, 13));
    for (const Vector& z : truth.measurements) {
      const FilterEstimate e = f.step(z);
      const Matrix joint = e.cov.joint();
      ASSERT_TRUE(joint.allFinite());
      ASSERT_TRUE(is_symmetric(e.cov.p_xx, 1e-10));
      ASSERT_TRUE(is_symmetric(e.cov.p_bb, 1e-10));
      if (mode == FilterMode::enckf) {
        ASSERT_EQ(e.cov.p_bb, sc.model.param_cov);
        ASSERT_EQ(e.mean_param, sc.model.param_reference);
      }
    }
    EXPECT_EQ(f.epoch(), 40);
    EXPECT_EQ(f.repairs().count, 0);
  }
}
