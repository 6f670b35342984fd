#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mirrorkit/loss.hpp"
#include "mirrorkit/model.hpp"
#include "mirrorkit/potential.hpp"

namespace mirrorkit {

enum class Algorithm { Smd, Ssmd, Sgd };
enum class NoiseLaw { Gaussian, Uniform, Rademacher };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Smd: return "smd";
    case Algorithm::Ssmd: return "ssmd";
    case Algorithm::Sgd: return "sgd";
  }
  return "unknown";
}

inline std::string to_string(NoiseLaw n) {
  switch (n) {
    case NoiseLaw::Gaussian: return "gaussian";
    case NoiseLaw::Uniform: return "uniform";
    case NoiseLaw::Rademacher: return "rademacher";
  }
  return "unknown";
}

struct Tolerances {
  double identity = 1e-8;        // relative residual of conservation-law identities
  double minimax = 1e-9;         // slack on ratio <= 1
  double implicit_gap = 1e-6;    // SMD limit vs oracle, max-norm
  double feasibility = 1e-9;     // ||Xw - y||_inf at SMD termination
  double kkt = 1e-10;            // oracle KKT and constraint residuals
};

/// Synthetic data stream used by `run`, `audit` and `minimax`.
struct DataOptions {
  int n_points = 0;        // 0 = one point per step (no cycling)
  double noise_std = 0.1;
  bool shuffle = false;    // reshuffle each epoch when cycling
  std::optional<std::vector<double>> w0;
};

struct RiskOptions {
  std::vector<double> gammas{0.5, 2.0};
  int bootstrap_resamples = 2000;
  double alpha = 1.0;  // exponent of the ScaledQuadratic blow-up probe
  std::vector<int> blowup_horizons{10, 20, 30, 40, 50};
  bool allow_uncertified = false;
  bool risk_neutral = false;  // scalar posterior-mean baseline, reported only
};

struct ImplicitOptions {
  int rows = 5;
  int cases = 1;
  long long step_cap = 1000000;
  int sparsity = 3;  // planted support size for separable_q runs
};

struct ConvergeOptions {
  int n_runs = 100;
  std::vector<long long> checkpoints{100, 1000, 10000};
  NoiseLaw noise = NoiseLaw::Gaussian;
  double sigma2 = 1.0;
  double control_eta = 0.05;
};

struct SampleOptions {
  long long n_samples = 100000;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::Smd;
  Potential potential = Potential::squared_l2(4);
  LossFn loss = LossFn::quadratic();
  Model model = Model::linear();
  StepSchedule schedule = StepSchedule::constant(0.05);
  int dim = 4;
  int T = 100;
  int n_trials = 1000;
  std::uint64_t seed = 1;
  double delta_pe = 0.1;
  Tolerances tolerances;
  std::string output_dir = ".";

  DataOptions data;
  RiskOptions risk;
  ImplicitOptions implicit;
  ConvergeOptions converge;
  SampleOptions sample;

  /// Field names for which the default was applied while parsing.
  std::vector<std::string> applied_defaults;

  double eta() const {
    if (!schedule.is_constant()) throw ScheduleError("a constant learning rate is required");
    return schedule.parameter();
  }

  void validate() const {
    auto positive = [](bool ok, const std::string& field) {
      if (!ok) throw ValidationError(field + " must be > 0");
    };
    positive(dim > 0, "dim");
    if (T < 0) throw ValidationError("T must be >= 0");
    positive(n_trials > 0, "n_trials");
    positive(delta_pe > 0.0, "delta_pe");
    positive(tolerances.identity > 0 && tolerances.minimax > 0 && tolerances.implicit_gap > 0 &&
                 tolerances.feasibility > 0 && tolerances.kkt > 0,
             "tolerances.*");
    if (potential.dim() != dim) throw ValidationError("potential dimension differs from dim");
    if (algorithm == Algorithm::Sgd && potential.kind() != PotentialKind::SquaredL2) {
      throw ValidationError("algorithm sgd requires potential squared_l2");
    }
    if (algorithm == Algorithm::Ssmd && !model.is_linear()) {
      throw ValidationError("algorithm ssmd requires the linear model");
    }
    if (data.n_points < 0) throw ValidationError("data.n_points must be >= 0");
    if (!(data.noise_std >= 0.0)) throw ValidationError("data.noise_std must be >= 0");
    if (data.w0 && static_cast<int>(data.w0->size()) != dim) {
      throw ValidationError("data.w0 must have length dim");
    }
    positive(risk.bootstrap_resamples > 0, "risk.bootstrap_resamples");
    positive(risk.alpha > 0.0, "risk.alpha");
    for (double g : risk.gammas) positive(g > 0.0, "risk.gammas[]");
    for (int h : risk.blowup_horizons) positive(h > 0, "risk.blowup_horizons[]");
    positive(implicit.rows > 0, "implicit.rows");
    positive(implicit.cases > 0, "implicit.cases");
    positive(implicit.step_cap > 0, "implicit.step_cap");
    positive(implicit.sparsity > 0, "implicit.sparsity");
    positive(converge.n_runs > 0, "converge.n_runs");
    positive(converge.sigma2 > 0.0, "converge.sigma2");
    positive(converge.control_eta > 0.0, "converge.control_eta");
    if (converge.checkpoints.empty()) throw ValidationError("converge.checkpoints must be nonempty");
    for (long long c : converge.checkpoints) positive(c > 0, "converge.checkpoints[]");
    positive(sample.n_samples > 0, "sample.n_samples");
  }
};

} // namespace mirrorkit
