#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace mirrorkit;
using mktest::vec;

TEST(RiskCost, DocumentedExamples) {
  RngStream rng(61, 0);
  const Vector w = mktest::random_gaussian(3, rng);
  Dataset data;
  std::vector<double> z;
  for (int i = 0; i < 5; ++i) {
    const Vector x = mktest::random_gaussian(3, rng);
    data.push_back({x, x.dot(w) + rng.normal()});
    z.push_back(x.dot(w));
  }
  for (const LossFn& l : mktest::all_losses()) {
    EXPECT_EQ(risk_cost(z, w, data, l, ExponentMode::smd()), 1.0);
    EXPECT_EQ(risk_cost(z, w, data, l, ExponentMode::ssmd()), 1.0);
    EXPECT_EQ(risk_cost({}, w, {}, l, ExponentMode::smd()), 1.0);
  }
  const Dataset one{{vec({1.0}), 3.0}};
  EXPECT_NEAR(risk_cost({0.5}, vec({1.5}), one, LossFn::quadratic(), ExponentMode::smd()), std::exp(0.5), 1e-15);
  EXPECT_NEAR(risk_cost({0.5}, vec({1.5}), one, LossFn::quadratic(), ExponentMode::scaled_quadratic(1.0)),
              std::exp(1.0), 1e-15);
  EXPECT_THROW(risk_cost({0.5, 0.1}, vec({1.5}), one, LossFn::quadratic(), ExponentMode::smd()), ValidationError);
}

TEST(CausalEstimator, PredictMustPrecedeObserve) {
  const EstimatorSpec spec{"smd", EstimatorKind::Smd, 1.0, ExponentMode::smd(), false};
  const Potential p = Potential::squared_l2(2);
  const LossFn l = LossFn::quadratic();
  CausalEstimator est(spec, p, l, Vector::Zero(2), 0.1);
  const DataPoint d{vec({1, 1}), 1.0};
  EXPECT_THROW(est.observe(d), ConfigError);
  EXPECT_EQ(est.predict(d.x), 0.0);
  est.observe(d);
  EXPECT_NEAR(est.state()[0], 0.1, 1e-15);
  EXPECT_THROW(est.observe(d), ConfigError);
}

TEST(CausalEstimator, KindsFollowTheirRules) {
  const Potential p = Potential::squared_l2(1);
  const LossFn l = LossFn::quadratic();
  const DataPoint d{vec({1.0}), 1.0};
  const EstimatorSpec constant{"constant", EstimatorKind::Constant, 1.0, ExponentMode::smd(), true};
  const EstimatorSpec scaled{"scaled", EstimatorKind::ScaledSmd, 2.0, ExponentMode::smd(), true};
  CausalEstimator c(constant, p, l, vec({0.0}), 0.1), s(scaled, p, l, vec({0.0}), 0.1);
  c.predict(d.x);
  c.observe(d);
  s.predict(d.x);
  s.observe(d);
  EXPECT_EQ(c.state()[0], 0.0);
  EXPECT_NEAR(s.state()[0], 0.2, 1e-15);
}

TEST(Bootstrap, PercentileIntervalBracketsMean) {
  RngStream rng(62, 0);
  std::vector<double> xs(5000);
  for (double& x : xs) x = std::exp(rng.normal());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  const auto [lo, hi] = bootstrap_mean_ci(xs, 2000, RngStream(62, 1));
  EXPECT_LT(lo, mean);
  EXPECT_GT(hi, mean);
  EXPECT_LT(hi - lo, 0.2);
  const auto again = bootstrap_mean_ci(xs, 2000, RngStream(62, 1));
  EXPECT_EQ(again.first, lo);
  EXPECT_EQ(again.second, hi);
}

TEST(RiskCompare, GaussianSmallScaleDominance) {
  ExperimentConfig cfg;
  cfg.dim = 2;
  cfg.potential = Potential::squared_l2(2);
  cfg.schedule = StepSchedule::constant(0.2);
  cfg.T = 10;
  cfg.n_trials = 4000;
  cfg.seed = 3;
  const RiskReport rep = risk_compare(cfg);
  EXPECT_TRUE(rep.smd_minimal());
  const EstimatorResult& smd = rep.row("smd");
  EXPECT_GE(smd.mc_cost, 1.0);
  for (const EstimatorResult& r : rep.rows) {
    EXPECT_LE(r.ci_low, r.mc_cost);
    EXPECT_GE(r.ci_high, r.mc_cost);
    EXPECT_EQ(r.n_trials, 4000);
  }
  EXPECT_LT(smd.ci_high, rep.worst_baseline().ci_low);
  EXPECT_NO_THROW(rep.row("ssmd[ssmd_cost]"));
  EXPECT_NO_THROW(rep.row("scaled_smd(0.5)"));
}

TEST(RiskCompare, UncertifiedStepIsRejected) {
  ExperimentConfig cfg;
  cfg.schedule = StepSchedule::constant(5.0);
  cfg.T = 5;
  cfg.n_trials = 10;
  EXPECT_THROW(risk_compare(cfg), ConfigError);
  cfg.risk.allow_uncertified = true;
  const RiskReport rep = risk_compare(cfg);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(RiskCompare, RiskNeutralBaselineIsScalarOnly) {
  ExperimentConfig cfg;
  cfg.risk.risk_neutral = true;
  cfg.n_trials = 10;
  EXPECT_THROW(risk_compare(cfg), ConfigError);
  cfg.dim = 1;
  cfg.potential = Potential::squared_l2(1);
  cfg.T = 5;
  cfg.n_trials = 500;
  const RiskReport rep = risk_compare(cfg);
  EXPECT_GE(rep.row("risk_neutral").mc_cost, 1.0);
}

TEST(BlowupProbe, RunningMaxIsMonotone) {
  ExperimentConfig cfg;
  cfg.dim = 2;
  cfg.potential = Potential::squared_l2(2);
  cfg.schedule = StepSchedule::constant(0.2);
  cfg.n_trials = 500;
  const auto curve = blowup_probe(risk_setup_from(cfg, 30), 1.0, {10, 20, 30});
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_LE(curve[0].max_log_cost, curve[1].max_log_cost);
  EXPECT_LE(curve[1].max_log_cost, curve[2].max_log_cost);
  EXPECT_THROW(blowup_probe(risk_setup_from(cfg, 30), 1.0, {40}), ConfigError);
}

TEST(ImplicitOracle, DocumentedExamples) {
  Matrix X(1, 2);
  X << 1, 1;
  const OracleSolution a = implicit_reg_oracle(X, vec({1}), Potential::squared_l2(2), Vector::Zero(2));
  EXPECT_NEAR(a.w_star[0], 0.5, 1e-15);
  EXPECT_NEAR(a.w_star[1], 0.5, 1e-15);

  X << 1, 2;
  const OracleSolution b = implicit_reg_oracle(X, vec({1}), Potential::squared_l2(2), Vector::Zero(2));
  EXPECT_NEAR(b.w_star[0], 0.2, 1e-15);
  EXPECT_NEAR(b.w_star[1], 0.4, 1e-15);

  X << 1, 1;
  const OracleSolution c = implicit_reg_oracle(X, vec({1}), Potential::neg_entropy(2), Vector::Constant(2, 0.7));
  EXPECT_NEAR(c.w_star[0], 0.5, 1e-12);
  EXPECT_NEAR(c.w_star[1], 0.5, 1e-12);
  EXPECT_LE(c.kkt_residual, 1e-10);
  EXPECT_LE(c.constraint_residual, 1e-10);
}

TEST(ImplicitOracle, RankErrors) {
  Matrix square = Matrix::Identity(2, 2);
  EXPECT_THROW(implicit_reg_oracle(square, vec({1, 1}), Potential::squared_l2(2), Vector::Zero(2)), RankError);
  Matrix dup(2, 3);
  dup << 1, 2, 3, 2, 4, 6;
  EXPECT_THROW(implicit_reg_oracle(dup, vec({1, 2}), Potential::squared_l2(3), Vector::Zero(3)), RankError);
}

TEST(ImplicitOracle, SatisfiesKktForAllPotentials) {
  for (const Potential& p : {Potential::squared_l2(12), Potential::neg_entropy(12), Potential::separable_q(12, 1.5),
                             Potential::separable_q(12, 3.0)}) {
    RngStream rng(63, static_cast<std::uint64_t>(p.kind()));
    const ImplicitCase c = make_implicit_case(p, 4, 3, rng);
    const OracleSolution s = implicit_reg_oracle(c.X, c.y, p, c.w0);
    EXPECT_LE(s.kkt_residual, 1e-10) << p.name();
    EXPECT_LE(s.constraint_residual, 1e-10) << p.name();
  }
}

TEST(ImplicitExperiment, SquaredL2MatchesPseudoinverse) {
  ExperimentConfig cfg;
  cfg.dim = 20;
  cfg.potential = Potential::squared_l2(20);
  cfg.schedule = StepSchedule::constant(0.5);
  cfg.implicit.rows = 5;
  cfg.implicit.cases = 3;
  for (const ImplicitResult& r : implicit_reg_experiment(cfg)) {
    EXPECT_LE(r.gap, 1e-6);
    EXPECT_LT(r.feasibility, 1e-9);
  }
}

TEST(ImplicitExperiment, NegEntropyReachesMaxEntropySolution) {
  ExperimentConfig cfg;
  cfg.dim = 20;
  cfg.potential = Potential::neg_entropy(20);
  cfg.schedule = StepSchedule::constant(0.2);
  cfg.implicit.rows = 5;
  for (const ImplicitResult& r : implicit_reg_experiment(cfg)) EXPECT_LE(r.gap, 1e-6);
}

TEST(ImplicitExperiment, StepCapReportsDiagnostics) {
  ExperimentConfig cfg;
  cfg.dim = 20;
  cfg.potential = Potential::squared_l2(20);
  cfg.schedule = StepSchedule::constant(0.5);
  cfg.implicit.step_cap = 64;
  try {
    implicit_reg_experiment(cfg);
    FAIL() << "expected StepCapError";
  } catch (const StepCapError& e) {
    EXPECT_NE(std::string(e.what()).find("step 64"), std::string::npos);
  }
}

TEST(ImplicitExperiment, SupportRecovery) {
  EXPECT_TRUE(support_recovered(vec({0.01, 2.0, -0.02, -1.5}), vec({0, 1, 0, -1})));
  EXPECT_FALSE(support_recovered(vec({0.9, 2.0, -0.02, 0.1}), vec({0, 1, 0, -1})));
}

TEST(MsqConvergence, RejectsConstantSchedule) {
  ExperimentConfig cfg;
  EXPECT_THROW(msq_convergence(cfg), ConfigError);
}

TEST(MsqConvergence, ErrorDecreasesAcrossCheckpoints) {
  ExperimentConfig cfg;
  cfg.dim = 3;
  cfg.potential = Potential::squared_l2(3);
  cfg.schedule = StepSchedule::robbins_monro(1.0);
  cfg.converge.n_runs = 20;
  cfg.converge.checkpoints = {100, 1000};
  for (NoiseLaw law : {NoiseLaw::Gaussian, NoiseLaw::Uniform, NoiseLaw::Rademacher}) {
    cfg.converge.noise = law;
    const ConvergeReport r = msq_convergence(cfg);
    ASSERT_EQ(r.checkpoints.size(), 2u);
    EXPECT_LT(r.checkpoints[1].second, r.checkpoints[0].second) << to_string(law);
    EXPECT_TRUE(r.excitation.excited);
  }
}

TEST(WhiteNoise, UnitVarianceLaws) {
  for (NoiseLaw law : {NoiseLaw::Gaussian, NoiseLaw::Uniform, NoiseLaw::Rademacher}) {
    RngStream rng(64, static_cast<std::uint64_t>(law));
    double s1 = 0, s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double v = white_noise(law, 2.0, rng);
      s1 += v;
      s2 += v * v;
    }
    EXPECT_LE(std::abs(s1 / n), 4 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s2 / n, 2.0, 0.05);
  }
}

TEST(ParallelFor, SameResultForAnyWorkerCount) {
  std::vector<double> a(1000), b(1000);
  parallel_for(a.size(), [&](std::size_t i) { a[i] = RngStream(9, i).normal(); }, 1);
  parallel_for(b.size(), [&](std::size_t i) { b[i] = RngStream(9, i).normal(); }, 4);
  EXPECT_EQ(a, b);
}
