#pragma once

// Mean-square convergence of SMD under white noise and persistently exciting
// inputs. Each run draws its own inputs and noise from stream (seed, run + 1);
// the planted weight vector is shared and comes from stream (seed, 0).

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mirrorkit/descent.hpp"
#include "mirrorkit/parallel.hpp"

namespace mirrorkit {

inline double white_noise(NoiseLaw law, double sigma2, RngStream& rng) {
  const double sd = std::sqrt(sigma2);
  switch (law) {
    case NoiseLaw::Gaussian: return sd * rng.normal();
    case NoiseLaw::Uniform: return rng.uniform(-std::sqrt(3.0) * sd, std::sqrt(3.0) * sd);
    case NoiseLaw::Rademacher: return sd * rng.rademacher();
  }
  return 0.0;
}

struct ConvergeSetup {
  Potential potential = Potential::squared_l2(1);
  LossFn loss;
  StepSchedule schedule = StepSchedule::robbins_monro(1.0);
  Vector planted;
  Vector w0;
  std::vector<long long> checkpoints{100, 1000, 10000};
  int n_runs = 100;
  NoiseLaw noise = NoiseLaw::Gaussian;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
};

struct ConvergeReport {
  std::vector<std::pair<long long, double>> checkpoints;  // (T, mean ||w_T - w||^2)
  ExcitationResult excitation;                            // of run 0's inputs
};

/// E||w_T - w||^2 over runs at each checkpoint, for any schedule.
inline ConvergeReport mean_square_error_curve(const ConvergeSetup& s, double delta_pe) {
  long long horizon = 0;
  for (long long c : s.checkpoints) horizon = std::max(horizon, c);
  const int dim = s.potential.dim();
  const std::size_t n_ck = s.checkpoints.size();
  std::vector<std::vector<double>> err(static_cast<std::size_t>(s.n_runs), std::vector<double>(n_ck));
  const Model linear = Model::linear();

  ConvergeReport report;
  {
    RngStream rng(s.seed, 1);
    Dataset xs;
    for (Vector& x : persistently_exciting_inputs(static_cast<std::size_t>(horizon), dim, rng)) {
      xs.push_back({std::move(x), 0.0});
    }
    report.excitation = persistent_excitation(xs, delta_pe);
  }
  if (!report.excitation.excited) {
    throw ConfigError("inputs are not persistently exciting at delta_pe = " + std::to_string(delta_pe));
  }

  parallel_for(err.size(), [&](std::size_t run) {
    RngStream rng(s.seed, run + 1);
    // Same generator order as the excitation check above for run 0.
    const std::vector<Vector> xs =
        persistently_exciting_inputs(static_cast<std::size_t>(horizon), dim, rng);
    RngStream noise_rng = rng.child(1);
    Vector w = s.w0;
    std::size_t next = 0;
    for (long long i = 1; i <= horizon; ++i) {
      const Vector& x = xs[static_cast<std::size_t>(i - 1)];
      const DataPoint d{x, x.dot(s.planted) + white_noise(s.noise, s.sigma2, noise_rng)};
      try {
        w = smd_step(s.potential, s.loss, linear, w, d, s.schedule.rate(i));
      } catch (const DomainError& e) {
        throw DomainError("run " + std::to_string(run) + ", step " + std::to_string(i) + ": " + e.what());
      }
      while (next < n_ck && s.checkpoints[next] == i) {
        err[run][next] = (w - s.planted).squaredNorm();
        ++next;
      }
    }
  });

  for (std::size_t k = 0; k < n_ck; ++k) {
    double sum = 0.0;
    for (const auto& e : err) sum += e[k];
    report.checkpoints.emplace_back(s.checkpoints[k], sum / static_cast<double>(s.n_runs));
  }
  return report;
}

inline ConvergeSetup converge_setup_from(const ExperimentConfig& cfg) {
  cfg.validate();
  ConvergeSetup s;
  s.potential = cfg.potential;
  s.loss = cfg.loss;
  s.schedule = cfg.schedule;
  RngStream rng(cfg.seed, 0);
  s.planted = planted_weights(cfg, rng);
  s.w0 = default_w0(cfg);
  s.checkpoints = cfg.converge.checkpoints;
  std::sort(s.checkpoints.begin(), s.checkpoints.end());
  s.n_runs = cfg.converge.n_runs;
  s.noise = cfg.converge.noise;
  s.sigma2 = cfg.converge.sigma2;
  s.seed = cfg.seed;
  return s;
}

/// Robbins-Monro runs only; a constant schedule is rejected.
inline ConvergeReport msq_convergence(const ExperimentConfig& cfg) {
  if (cfg.schedule.is_constant()) {
    throw ConfigError("converge requires a robbins_monro schedule");
  }
  return mean_square_error_curve(converge_setup_from(cfg), cfg.delta_pe);
}

/// Same runs with the constant learning rate cfg.converge.control_eta.
inline ConvergeReport msq_constant_control(const ExperimentConfig& cfg) {
  ConvergeSetup s = converge_setup_from(cfg);
  s.schedule = StepSchedule::constant(cfg.converge.control_eta);
  return mean_square_error_curve(s, cfg.delta_pe);
}

} // namespace mirrorkit
