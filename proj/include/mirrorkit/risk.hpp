#pragma once

// Monte Carlo comparison of causal predictors under exponential (risk-
// sensitive) costs. The generative model is
//   w ~ exp(-(1/eta) D_psi(., w0)),  v_i ~ exp(-l(.)),  y_i = x_i^T w + v_i
// with a fixed input sequence {x_i}. Each estimator must commit to z_i before
// it is shown y_i.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mirrorkit/descent.hpp"
#include "mirrorkit/parallel.hpp"
#include "mirrorkit/samplers.hpp"

namespace mirrorkit {

enum class ExponentKind { SmdCost, SsmdCost, ScaledQuadratic };

struct ExponentMode {
  ExponentKind kind = ExponentKind::SmdCost;
  double alpha = 0.5;  // ScaledQuadratic only

  static ExponentMode smd() { return {ExponentKind::SmdCost, 0.5}; }
  static ExponentMode ssmd() { return {ExponentKind::SsmdCost, 0.5}; }
  static ExponentMode scaled_quadratic(double alpha) { return {ExponentKind::ScaledQuadratic, alpha}; }
};

/// Exponent of the cost for one realization of w:
///   SmdCost:          sum D_l(y_i - x_i^T w, y_i - z_i)
///   SsmdCost:         sum D_l(x_i^T w, z_i)
///   ScaledQuadratic:  alpha * sum (x_i^T w - z_i)^2
inline double risk_exponent(const std::vector<double>& z, const Vector& w, const Dataset& data,
                            const LossFn& l, ExponentMode mode, std::size_t horizon) {
  double s = 0.0;
  for (std::size_t i = 0; i < horizon; ++i) {
    const double pred = data[i].x.dot(w);
    switch (mode.kind) {
      case ExponentKind::SmdCost:
        s += loss_bregman_value(l, data[i].y - pred, data[i].y - z[i]);
        break;
      case ExponentKind::SsmdCost:
        s += loss_bregman_value(l, pred, z[i]);
        break;
      case ExponentKind::ScaledQuadratic: {
        const double e = pred - z[i];
        s += mode.alpha * e * e;
        break;
      }
    }
  }
  return s;
}

inline double risk_cost(const std::vector<double>& z, const Vector& w, const Dataset& data,
                        const LossFn& l, ExponentMode mode) {
  if (z.size() != data.size()) throw ValidationError("risk_cost: one prediction per data point");
  return std::exp(risk_exponent(z, w, data, l, mode, data.size()));
}

enum class EstimatorKind { Smd, Constant, ScaledSmd, Ssmd, RiskNeutral };

struct EstimatorSpec {
  std::string name;
  EstimatorKind kind = EstimatorKind::Smd;
  double gamma = 1.0;  // learning-rate multiplier for ScaledSmd
  ExponentMode mode = ExponentMode::smd();
  bool baseline = true;  // participates in the dominance comparison against SMD
};

/// Online predictor: predict(x) must be called before observe(d) for the
/// same step, and observe() is the only channel through which y reaches it.
class CausalEstimator {
public:
  CausalEstimator(const EstimatorSpec& spec, const Potential& p, const LossFn& l, const Vector& w0,
                  double eta)
      : spec_(spec), p_(p), l_(l), w_(w0), eta_(eta * (spec.kind == EstimatorKind::ScaledSmd ? spec.gamma : 1.0)) {}

  double predict(const Vector& x) {
    pending_ = true;
    return x.dot(w_);
  }

  void observe(const DataPoint& d) {
    if (!pending_) throw ConfigError("estimator observed y_i before predicting z_i");
    pending_ = false;
    switch (spec_.kind) {
      case EstimatorKind::Constant:
      case EstimatorKind::RiskNeutral:
        break;
      case EstimatorKind::Smd:
      case EstimatorKind::ScaledSmd:
        w_ = prediction_step(p_, l_, w_, d, d.x.dot(w_), eta_);
        break;
      case EstimatorKind::Ssmd:
        w_ = ssmd_step(p_, l_, w_, d, eta_);
        break;
    }
  }

  const Vector& state() const { return w_; }

private:
  const EstimatorSpec& spec_;
  const Potential& p_;
  const LossFn& l_;
  Vector w_;
  double eta_;
  bool pending_ = false;
};

/// Scalar posterior-mean predictor, z_i = x_i E[w | y_1..y_{i-1}], computed by
/// quadrature on the prior's grid. Minimizes the expected Bregman error (the
/// risk-neutral criterion); reported only, never part of the dominance test.
class PosteriorMeanPredictor {
public:
  PosteriorMeanPredictor(const WeightSampler& prior, const LossFn& l, int points = 1024) : l_(l) {
    const ExpFamilySpec& s = prior.spec();
    if (s.center.size() != 1) throw ConfigError("risk-neutral baseline is scalar only");
    double lo, hi;
    if (const TabulatedDensity* t = prior.table(0)) {
      lo = t->lower();
      hi = t->upper();
    } else {
      const double sd = std::sqrt(s.scale);
      lo = s.center[0] - 12.0 * sd;
      hi = s.center[0] + 12.0 * sd;
    }
    if (s.potential.kind() == PotentialKind::NegEntropy) lo = std::max(lo, 1e-12);
    grid_.resize(static_cast<std::size_t>(points));
    logw_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      grid_[k] = lo + (hi - lo) * static_cast<double>(k) / (points - 1);
      logw_[k] = -s.potential.bregman1(grid_[k], s.center[0]) / s.scale;
    }
  }

  double predict(double x) const {
    const double mx = *std::max_element(logw_.begin(), logw_.end());
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      const double wt = std::exp(logw_[k] - mx);
      num += wt * grid_[k];
      den += wt;
    }
    return x * num / den;
  }

  void observe(double x, double y) {
    for (std::size_t k = 0; k < grid_.size(); ++k) logw_[k] -= l_.value(y - x * grid_[k]);
  }

private:
  LossFn l_;
  std::vector<double> grid_;
  std::vector<double> logw_;
};

struct RiskSetup {
  Potential potential = Potential::squared_l2(1);
  LossFn loss;
  Vector w0;
  double eta = 0.1;
  std::vector<Vector> inputs;  // x_1..x_T, fixed across trials
  int n_trials = 10000;
  std::uint64_t seed = 1;
  std::vector<EstimatorSpec> estimators;
  int bootstrap_resamples = 2000;
  bool allow_uncertified = false;
  int certification_draws = 200;
};

struct EstimatorResult {
  std::string name;
  ExponentMode mode;
  bool baseline = true;
  double mc_cost = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_trials = 0;
  /// Paired percentile interval of mean(cost_smd - cost_this); empty for SMD.
  double diff_ci_low = 0.0;
  double diff_ci_high = 0.0;
};

struct RiskReport {
  std::vector<EstimatorResult> rows;
  double certified_margin = 0.0;
  std::vector<double> weight_normalizers;  // C, per coordinate
  double noise_normalizer = 0.0;           // C'
  std::vector<std::string> warnings;

  const EstimatorResult& row(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.name == name) return r;
    }
    throw ConfigError("no estimator named " + name);
  }

  /// SMD's point estimate is no larger than any SMD-cost baseline's.
  bool smd_minimal() const {
    const EstimatorResult& smd = row("smd");
    for (const auto& r : rows) {
      if (r.baseline && r.mode.kind == ExponentKind::SmdCost && r.mc_cost < smd.mc_cost) return false;
    }
    return true;
  }

  /// Baseline with the largest mean cost under the SMD exponent.
  const EstimatorResult& worst_baseline() const {
    const EstimatorResult* worst = nullptr;
    for (const auto& r : rows) {
      if (r.baseline && r.mode.kind == ExponentKind::SmdCost && (!worst || r.mc_cost > worst->mc_cost)) {
        worst = &r;
      }
    }
    if (!worst) throw ConfigError("risk report has no baselines");
    return *worst;
  }
};

/// Estimator list used by `risk`: SMD, the w0 predictor, SMD at gamma*eta for
/// each gamma, and SSMD together with SMD under the symmetric exponent.
inline std::vector<EstimatorSpec> default_estimators(const std::vector<double>& gammas) {
  std::vector<EstimatorSpec> e;
  e.push_back({"smd", EstimatorKind::Smd, 1.0, ExponentMode::smd(), false});
  e.push_back({"constant", EstimatorKind::Constant, 1.0, ExponentMode::smd(), true});
  for (double g : gammas) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "scaled_smd(%g)", g);
    e.push_back({buf, EstimatorKind::ScaledSmd, g, ExponentMode::smd(), true});
  }
  e.push_back({"ssmd[ssmd_cost]", EstimatorKind::Ssmd, 1.0, ExponentMode::ssmd(), false});
  e.push_back({"smd[ssmd_cost]", EstimatorKind::Smd, 1.0, ExponentMode::ssmd(), false});
  return e;
}

/// Percentile bootstrap interval of the mean; resamples are drawn from `rng`.
inline std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& xs, int resamples,
                                                   RngStream rng, double level = 0.95) {
  const std::size_t n = xs.size();
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += xs[static_cast<std::size_t>(rng.next_u64() % n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double a = (1.0 - level) / 2.0;
  const auto idx = [&](double q) {
    const auto k = static_cast<std::size_t>(std::floor(q * (resamples - 1) + 0.5));
    return means[std::min(k, means.size() - 1)];
  };
  return {idx(a), idx(1.0 - a)};
}

/// Convexity margin of psi - eta L_i over w0, prior draws and every input.
/// For losses with bounded curvature the residual is taken at its worst
/// case (zero); otherwise at a noise draw.
inline double certify_risk_margin(const RiskSetup& s, const WeightSampler& prior,
                                  const NoiseSampler& noise) {
  RngStream rng(s.seed, 0xCE57);
  std::vector<Vector> probes{s.w0};
  for (int k = 0; k < s.certification_draws; ++k) probes.push_back(prior.draw(rng));
  const bool bounded = std::isfinite(s.loss.curvature_bound());
  const Model linear = Model::linear();
  double margin = std::numeric_limits<double>::infinity();
  for (const Vector& w : probes) {
    for (const Vector& x : s.inputs) {
      const double v = bounded ? 0.0 : noise.draw(rng);
      margin = std::min(margin, convexity_margin(s.potential, s.loss, linear, s.eta, w,
                                                 DataPoint{x, x.dot(w) + v}));
    }
  }
  return margin;
}

inline RiskReport run_risk(const RiskSetup& s) {
  ExpFamilySpec prior_spec;
  prior_spec.potential = s.potential;
  prior_spec.center = s.w0;
  prior_spec.scale = s.eta;
  const WeightSampler prior(prior_spec);
  const NoiseSampler noise(s.loss);

  RiskReport report;
  report.weight_normalizers = prior.normalizers();
  report.noise_normalizer = noise.normalizer();
  report.certified_margin = certify_risk_margin(s, prior, noise);
  if (report.certified_margin < 0.0) {
    const std::string msg = "psi - eta L_i is not convex on the probe set (margin " +
                            std::to_string(report.certified_margin) + ")";
    if (!s.allow_uncertified) throw ConfigError(msg);
    report.warnings.push_back(msg);
  }

  const std::size_t T = s.inputs.size();
  const std::size_t n_est = s.estimators.size();
  const auto n_trials = static_cast<std::size_t>(s.n_trials);
  std::vector<std::vector<double>> costs(n_est, std::vector<double>(n_trials));

  parallel_for(n_trials, [&](std::size_t trial) {
    RngStream rng(s.seed, trial + 1);
    const Vector w = prior.draw(rng);
    Dataset data(T);
    for (std::size_t i = 0; i < T; ++i) {
      data[i].x = s.inputs[i];
      data[i].y = s.inputs[i].dot(w) + noise.draw(rng);
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      const EstimatorSpec& spec = s.estimators[e];
      std::vector<double> z(T);
      if (spec.kind == EstimatorKind::RiskNeutral) {
        PosteriorMeanPredictor pm(prior, s.loss);
        for (std::size_t i = 0; i < T; ++i) {
          z[i] = pm.predict(data[i].x[0]);
          pm.observe(data[i].x[0], data[i].y);
        }
      } else {
        CausalEstimator est(spec, s.potential, s.loss, s.w0, s.eta);
        for (std::size_t i = 0; i < T; ++i) {
          z[i] = est.predict(data[i].x);
          est.observe(data[i]);
        }
      }
      costs[e][trial] = std::exp(risk_exponent(z, w, data, s.loss, spec.mode, T));
    }
  });

  std::size_t smd_index = n_est;
  for (std::size_t e = 0; e < n_est; ++e) {
    if (s.estimators[e].kind == EstimatorKind::Smd && s.estimators[e].mode.kind == ExponentKind::SmdCost) {
      smd_index = e;
      break;
    }
  }

  RngStream boot(s.seed, 0xB007);
  report.rows.resize(n_est);
  parallel_for(n_est, [&](std::size_t e) {
    EstimatorResult& r = report.rows[e];
    const EstimatorSpec& spec = s.estimators[e];
    r.name = spec.name;
    r.mode = spec.mode;
    r.baseline = spec.baseline;
    r.n_trials = s.n_trials;
    double sum = 0.0;
    for (double c : costs[e]) sum += c;
    r.mc_cost = sum / static_cast<double>(n_trials);
    std::tie(r.ci_low, r.ci_high) = bootstrap_mean_ci(costs[e], s.bootstrap_resamples, boot.child(e));
    if (smd_index < n_est && e != smd_index) {
      std::vector<double> diff(n_trials);
      for (std::size_t k = 0; k < n_trials; ++k) diff[k] = costs[smd_index][k] - costs[e][k];
      std::tie(r.diff_ci_low, r.diff_ci_high) =
          bootstrap_mean_ci(diff, s.bootstrap_resamples, boot.child(1000 + e));
    }
  });
  return report;
}

struct BlowupPoint {
  int horizon = 0;
  double max_log_cost = 0.0;  // running max over trials of the exponent
  double mean_cost = 0.0;
};

/// Running maximum over trials of exp(alpha sum_{i<=h} (x_i^T w - z_i)^2) for
/// the SMD predictor, per horizon h. Diagnostic only: a divergent expectation
/// cannot be confirmed by a finite sample.
inline std::vector<BlowupPoint> blowup_probe(const RiskSetup& s, double alpha,
                                             const std::vector<int>& horizons) {
  ExpFamilySpec prior_spec;
  prior_spec.potential = s.potential;
  prior_spec.center = s.w0;
  prior_spec.scale = s.eta;
  const WeightSampler prior(prior_spec);
  const NoiseSampler noise(s.loss);
  const std::size_t T = s.inputs.size();
  for (int h : horizons) {
    if (h <= 0 || static_cast<std::size_t>(h) > T) throw ConfigError("blow-up horizon exceeds the input sequence");
  }
  const auto n_trials = static_cast<std::size_t>(s.n_trials);
  std::vector<std::vector<double>> exps(horizons.size(), std::vector<double>(n_trials));
  const EstimatorSpec smd{"smd", EstimatorKind::Smd, 1.0, ExponentMode::smd(), false};
  const ExponentMode mode = ExponentMode::scaled_quadratic(alpha);

  parallel_for(n_trials, [&](std::size_t trial) {
    RngStream rng(s.seed, trial + 1);
    const Vector w = prior.draw(rng);
    Dataset data(T);
    for (std::size_t i = 0; i < T; ++i) {
      data[i].x = s.inputs[i];
      data[i].y = s.inputs[i].dot(w) + noise.draw(rng);
    }
    CausalEstimator est(smd, s.potential, s.loss, s.w0, s.eta);
    std::vector<double> z(T);
    for (std::size_t i = 0; i < T; ++i) {
      z[i] = est.predict(data[i].x);
      est.observe(data[i]);
    }
    for (std::size_t k = 0; k < horizons.size(); ++k) {
      exps[k][trial] = risk_exponent(z, w, data, s.loss, mode, static_cast<std::size_t>(horizons[k]));
    }
  });

  std::vector<BlowupPoint> curve;
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    BlowupPoint p;
    p.horizon = horizons[k];
    p.max_log_cost = *std::max_element(exps[k].begin(), exps[k].end());
    double sum = 0.0;
    for (double e : exps[k]) sum += std::exp(e);
    p.mean_cost = sum / static_cast<double>(n_trials);
    curve.push_back(p);
  }
  return curve;
}

/// Builds the risk setup described by cfg: persistently exciting inputs of
/// length T drawn from stream (seed, 0).
inline RiskSetup risk_setup_from(const ExperimentConfig& cfg, int T) {
  cfg.validate();
  RiskSetup s;
  s.potential = cfg.potential;
  s.loss = cfg.loss;
  s.w0 = default_w0(cfg);
  s.eta = cfg.eta();
  RngStream rng(cfg.seed, 0);
  s.inputs = persistently_exciting_inputs(static_cast<std::size_t>(T), cfg.dim, rng);
  s.n_trials = cfg.n_trials;
  s.seed = cfg.seed;
  s.estimators = default_estimators(cfg.risk.gammas);
  if (cfg.risk.risk_neutral) {
    if (cfg.dim != 1) throw ConfigError("risk.risk_neutral requires dim = 1");
    s.estimators.push_back({"risk_neutral", EstimatorKind::RiskNeutral, 1.0, ExponentMode::smd(), false});
  }
  s.bootstrap_resamples = cfg.risk.bootstrap_resamples;
  s.allow_uncertified = cfg.risk.allow_uncertified;
  return s;
}

inline RiskReport risk_compare(const ExperimentConfig& cfg) {
  return run_risk(risk_setup_from(cfg, cfg.T));
}

} // namespace mirrorkit
