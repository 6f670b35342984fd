#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace mirrorkit;
using mktest::vec;

namespace {

ExperimentConfig small_config(const Potential& p, const LossFn& l, const Model& m, double eta, int T,
                              std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.dim = p.dim();
  cfg.potential = p;
  cfg.loss = l;
  cfg.model = m;
  cfg.schedule = StepSchedule::constant(eta);
  cfg.T = T;
  cfg.seed = seed;
  cfg.data.noise_std = 0.3;
  return cfg;
}

// Quartic loss has unbounded curvature; keep its trajectories bounded.
double step_for(const LossFn& l, double eta) { return l.kind() == LossKind::Quartic ? eta / 20 : eta; }

}  // namespace

TEST(LocalIdentity, HoldsOnRandomSteps) {
  RngStream rng(51, 0);
  for (const Potential& p : mktest::all_potentials(3)) {
    for (const LossFn& l : mktest::all_losses()) {
      for (const Model& m : {Model::linear(), Model::glm(Link::Tanh)}) {
        for (int trial = 0; trial < 30; ++trial) {
          const Vector wp = mktest::random_point(p, rng, 0.5);
          const Vector w = mktest::random_point(p, rng, 0.5);
          const Vector x = mktest::random_gaussian(3, rng, 0.5);
          const DataPoint d{x, m.predict(x, w) + 0.2 * rng.normal()};
          const Vector wn = smd_step(p, l, m, wp, d, 0.05);
          const AuditRecord r = local_identity(p, l, m, w, wp, wn, d, 0.05);
          EXPECT_LE(r.local_residual, 1e-9) << p.name() << " " << l.name() << " " << m.name();
        }
      }
    }
  }
}

TEST(LocalIdentity, DegenerateReferenceAndNoiselessStep) {
  const Potential p = Potential::neg_entropy(2);
  const Vector wp = vec({0.7, 1.3});
  const DataPoint d{vec({0.4, -0.2}), 0.4 * 0.7 - 0.2 * 1.3};
  const Vector wn = smd_step(p, LossFn::quartic(), Model::linear(), wp, d, 0.1);
  const AuditRecord r = local_identity(p, LossFn::quartic(), Model::linear(), wp, wp, wn, d, 0.1);
  EXPECT_EQ(r.loss_noise, 0.0);
  EXPECT_LE(r.local_residual, 1e-9);
}

TEST(LocalIdentity, QuadraticLossBregmanIsSquaredPredictionError) {
  const Vector w = vec({1, -1, 2}), wp = vec({0.5, 0.5, 0.5});
  const DataPoint d{vec({0.3, 1.1, -0.4}), 0.9};
  const Vector wn = smd_step(Potential::squared_l2(3), LossFn::quadratic(), Model::linear(), wp, d, 0.2);
  const AuditRecord r = local_identity(Potential::squared_l2(3), LossFn::quadratic(), Model::linear(), w, wp, wn, d, 0.2);
  const double e = d.x.dot(w - wp);
  EXPECT_NEAR(r.d_loss_bregman, 0.5 * e * e, 1e-14);
}

TEST(LocalIdentity, ETermNonnegativeUnderPremise) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const Potential& p : mktest::all_potentials(3)) {
      Trajectory t = run_trajectory(small_config(p, LossFn::logcosh(), Model::linear(), 0.05, 30, seed));
      audit_trajectory(t, *t.planted);
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double m = convexity_margin(p, t.loss, t.model, 0.05,
                                          {{t.iterate(i), t.data[i]}, {t.iterate(i + 1), t.data[i]}});
        if (m >= 0) EXPECT_GE(t.audits[i].e_term, -1e-12);
      }
    }
  }
}

TEST(GlobalIdentity, RandomFiftyStepTrajectories) {
  for (const Potential& p : mktest::all_potentials(4)) {
    for (const LossFn& l : mktest::all_losses()) {
      const Trajectory t = run_trajectory(small_config(p, l, Model::linear(), step_for(l, 0.05), 50, 7));
      const Vector& w = *t.planted;
      EXPECT_LE(global_identity(t, w, noises_for(t, w)), 1e-8) << p.name() << " " << l.name();
    }
  }
}

TEST(GlobalIdentity, EmptyTrajectoryIsExact) {
  const Trajectory t = run_trajectory(small_config(Potential::neg_entropy(2), LossFn::quadratic(), Model::linear(), 0.1, 0, 3));
  EXPECT_EQ(global_identity(t, vec({2.0, 0.5}), {}), 0.0);
}

TEST(GlobalIdentity, EqualsTelescopedLocalRecords) {
  Trajectory t = run_trajectory(small_config(Potential::separable_q(3, 3.0), LossFn::quartic(), Model::linear(), 0.02, 40, 9));
  const Vector& w = *t.planted;
  audit_trajectory(t, w);
  const GlobalIdentity g = global_identity_terms(t, w, noises_for(t, w));
  double lhs = 0, rhs = 0;
  for (const AuditRecord& r : t.audits) {
    lhs += r.d_psi_prev + 0.02 * r.loss_noise;
    rhs += r.d_psi_next + 0.02 * r.d_loss_bregman + r.e_term;
  }
  // Intermediate D(w, w_i) terms cancel in the telescoped sum.
  double middle = 0;
  for (std::size_t i = 1; i < t.size(); ++i) middle += bregman_value(t.potential, w, t.iterate(i));
  EXPECT_NEAR(lhs - middle, g.lhs, 1e-10 * (1 + std::abs(g.lhs)));
  EXPECT_NEAR(rhs - middle, g.rhs, 1e-10 * (1 + std::abs(g.rhs)));
}

TEST(GlobalIdentity, RejectsVanishingSchedule) {
  ExperimentConfig cfg = small_config(Potential::squared_l2(2), LossFn::quadratic(), Model::linear(), 0.1, 10, 1);
  cfg.schedule = StepSchedule::robbins_monro(0.1);
  const Trajectory t = run_trajectory(cfg);
  EXPECT_THROW(global_identity(t, *t.planted, noises_for(t, *t.planted)), ScheduleError);
}

TEST(AuditTrajectory, RejectsSsmd) {
  ExperimentConfig cfg = small_config(Potential::squared_l2(2), LossFn::quartic(), Model::linear(), 0.01, 5, 1);
  cfg.algorithm = Algorithm::Ssmd;
  Trajectory t = run_trajectory(cfg);
  EXPECT_THROW(audit_trajectory(t, *t.planted), ConfigError);
}

TEST(MinimaxRatio, BoundedOnCertifiedTrials) {
  int certified = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Potential p = mktest::all_potentials(3)[seed % 3];
    const LossFn l = mktest::all_losses()[(seed / 3) % 3];
    const Trajectory t = run_trajectory(small_config(p, l, Model::linear(), step_for(l, 0.02), 40, seed));
    const MinimaxReport r = minimax_ratio(t, *t.planted, noises_for(t, *t.planted));
    EXPECT_GT(r.denominator, 0.0);
    if (r.premise_certified) {
      ++certified;
      EXPECT_LE(r.ratio, 1.0 + 1e-9);
    }
  }
  EXPECT_GT(certified, 150);
}

TEST(MinimaxRatio, ApproachesOneForSmallStepNoiselessData) {
  double prev = 0.0;
  for (double eta : {1e-2, 1e-3, 1e-4, 1e-5}) {
    ExperimentConfig cfg = small_config(Potential::squared_l2(3), LossFn::quadratic(), Model::linear(), eta, 30, 4);
    cfg.data.noise_std = 0.0;
    const Trajectory t = run_trajectory(cfg);
    const MinimaxReport r = minimax_ratio(t, *t.planted, noises_for(t, *t.planted));
    EXPECT_LE(r.ratio, 1.0);
    EXPECT_GT(r.ratio, prev);
    prev = r.ratio;
  }
  EXPECT_GT(prev, 0.999);
}

TEST(MinimaxRatio, HInfinityFormForLms) {
  const Trajectory t = run_trajectory(small_config(Potential::squared_l2(3), LossFn::quadratic(), Model::linear(), 0.05, 25, 5));
  const Vector& w = *t.planted;
  const MinimaxReport r = minimax_ratio(t, w, noises_for(t, w));
  double num = 0.5 * (w - t.final_iterate()).squaredNorm(), den = 0.5 * (w - t.w0).squaredNorm();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = t.data[i].x.dot(w - t.iterate(i));
    const double v = t.data[i].y - t.data[i].x.dot(w);
    num += 0.05 * 0.5 * e * e;
    den += 0.05 * 0.5 * v * v;
  }
  EXPECT_NEAR(r.ratio, num / den, 1e-12);
}

TEST(MinimaxRatio, DegenerateDenominator) {
  ExperimentConfig cfg = small_config(Potential::squared_l2(2), LossFn::quadratic(), Model::linear(), 0.1, 5, 1);
  const Trajectory t = run_trajectory(cfg);
  EXPECT_THROW(minimax_ratio(t, t.w0, std::vector<double>(t.size(), 0.0)), DegenerateError);
}

TEST(Lemma3, HoldsForArbitraryPredictions) {
  RngStream rng(52, 0);
  for (const Potential& p : mktest::all_potentials(3)) {
    for (const LossFn& l : mktest::all_losses()) {
      for (int trial = 0; trial < 10; ++trial) {
        const Vector w0 = mktest::random_point(p, rng, 0.5);
        const Vector w = mktest::random_point(p, rng, 0.5);
        Dataset data;
        std::vector<double> z;
        for (int i = 0; i < 20; ++i) {
          const Vector x = mktest::random_gaussian(3, rng, 0.4);
          data.push_back({x, x.dot(w) + 0.3 * rng.normal()});
          z.push_back(0.5 * rng.normal());
        }
        const Trajectory t = prediction_driven_trajectory(p, l, w0, data, z, 0.05);
        const IdentitySides s = lemma3_sides(p, l, w, t, z, 0.05);
        EXPECT_LE(s.relative(), 1e-8) << p.name() << " " << l.name();
        double local = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          local += lemma3_local_residual(p, l, w, t.iterate(i), t.iterate(i + 1), t.data[i], z[i], 0.05);
        }
        double middle = 0;
        for (std::size_t i = 1; i < t.size(); ++i) middle += bregman_value(p, w, t.iterate(i)) / 0.05;
        EXPECT_NEAR(local, s.lhs - s.rhs, 1e-10 * (1 + std::abs(s.lhs) + middle));
      }
    }
  }
}

TEST(Lemma3, SmdPredictionsReproduceSmd) {
  const Trajectory t = run_trajectory(small_config(Potential::neg_entropy(3), LossFn::logcosh(), Model::linear(), 0.05, 30, 2));
  std::vector<double> z;
  for (std::size_t i = 0; i < t.size(); ++i) z.push_back(t.data[i].x.dot(t.iterate(i)));
  const Trajectory g = prediction_driven_trajectory(t.potential, t.loss, t.w0, t.data, z, 0.05);
  for (std::size_t i = 1; i <= t.size(); ++i) EXPECT_EQ(g.iterate(i), t.iterate(i));
}

TEST(Lemma3, HandExpandedScalarCase) {
  // psi = w^2/2, l = v^2/2, T = 1, x = 1: both sides equal
  // -(w-w0)^2/(2 eta) - (y-w)^2/2 + (z-w)^2/2.
  const double w0 = 0.3, w = -0.8, y = 1.7, z = 0.4, eta = 0.25;
  const Potential p = Potential::squared_l2(1);
  const Dataset data{{vec({1.0}), y}};
  const Trajectory t = prediction_driven_trajectory(p, LossFn::quadratic(), vec({w0}), data, {z}, eta);
  EXPECT_NEAR(t.final_iterate()[0], w0 + eta * (y - z), 1e-15);
  const IdentitySides s = lemma3_sides(p, LossFn::quadratic(), vec({w}), t, {z}, eta);
  const double expected = -(w - w0) * (w - w0) / (2 * eta) - 0.5 * (y - w) * (y - w) + 0.5 * (z - w) * (z - w);
  EXPECT_NEAR(s.lhs, expected, 1e-14);
  EXPECT_NEAR(s.rhs, expected, 1e-14);
}

TEST(Lemma4, HoldsOnPredictionDrivenSteps) {
  RngStream rng(53, 0);
  for (const Potential& p : mktest::all_potentials(4)) {
    for (const LossFn& l : mktest::all_losses()) {
      for (int trial = 0; trial < 50; ++trial) {
        const Vector wp = mktest::random_point(p, rng, 0.5);
        const Vector x = mktest::random_gaussian(4, rng, 0.4);
        const DataPoint d{x, rng.normal()};
        const double z = rng.normal();
        const Vector wi = prediction_step(p, l, wp, d, z, 0.1);
        EXPECT_LE(lemma4_residual(p, l, wi, wp, d, z, 0.1), 1e-9) << p.name() << " " << l.name();
      }
    }
  }
}

TEST(Lemma4, SmdPredictionZeroesTheLastTerm) {
  const Potential p = Potential::separable_q(2, 3.0);
  const Vector wp = vec({0.4, -0.9});
  const DataPoint d{vec({1.2, 0.3}), 0.7};
  const double z = d.x.dot(wp);
  EXPECT_EQ(loss_bregman_value(LossFn::logcosh(), d.y - d.x.dot(wp), d.y - z), 0.0);
  const Vector wi = prediction_step(p, LossFn::logcosh(), wp, d, z, 0.2);
  EXPECT_LE(lemma4_residual(p, LossFn::logcosh(), wi, wp, d, z, 0.2), 1e-12);
}

TEST(Lemma4, DegenerateStep) {
  const Potential p = Potential::neg_entropy(2);
  const Vector wp = vec({0.4, 0.9});
  const DataPoint d{vec({1.0, 1.0}), 2.0};
  const Vector wi = prediction_step(p, LossFn::quartic(), wp, d, 2.0, 0.3);
  EXPECT_EQ(wi, wp);
  EXPECT_EQ(lemma4_residual(p, LossFn::quartic(), wi, wp, d, 2.0, 0.3), 0.0);
}

TEST(Lemma4, PrintedSignIsOffByTwiceTheMirrorTerm) {
  // psi = w^2/2, l = v^2/2, x = y = 1, z = 0, eta = 0.5: w moves from 0 to 0.5.
  const Potential p = Potential::squared_l2(1);
  const DataPoint d{vec({1.0}), 1.0};
  const Vector wi = prediction_step(p, LossFn::quadratic(), vec({0.0}), d, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(wi[0], 0.5);
  EXPECT_EQ(lemma4_residual(p, LossFn::quadratic(), wi, vec({0.0}), d, 0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(lemma4_printed_gap(p, LossFn::quadratic(), wi, vec({0.0}), d, 0.0, 0.5), 2 * 0.5 * 0.5 / 0.5);
}
