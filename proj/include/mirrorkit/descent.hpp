#pragma once

// SMD / SSMD / SGD iteration engines.
//
// The update is carried out in the mirror domain,
//   grad psi(w_i) = grad psi(w_{i-1}) + eta_i * df/dw(x_i, w_{i-1}) * l'(y_i - f(x_i, w_{i-1})),
// which equals grad psi(w_{i-1}) - eta_i grad L_i(w_{i-1}) since
// grad L_i(w) = -df/dw * l'(residual).

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mirrorkit/experiment_config.hpp"
#include "mirrorkit/model.hpp"
#include "mirrorkit/rng.hpp"

namespace mirrorkit {

namespace detail {

/// grad psi(w) = grad psi(w_prev) + step, pulled back coordinatewise.
/// Coordinates with a zero step keep w_prev bit for bit.
inline Vector mirror_step(const Potential& p, const Vector& w_prev, const Vector& step) {
  Vector u = potential_grad(p, w_prev);
  for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = u[j] + step[j];
  Vector w = mirror_inverse(p, u);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (step[j] == 0.0) w[j] = w_prev[j];
  }
  check_domain(p, w, "updated iterate");
  return w;
}

} // namespace detail

inline Vector smd_step(const Potential& p, const LossFn& l, const Model& m, const Vector& w_prev,
                       const DataPoint& d, double eta) {
  if (!(eta > 0.0)) throw ValidationError("smd_step: eta must be > 0");
  const double r = d.y - m.predict(d.x, w_prev);
  const double dl = l.derivative(r);
  const Vector jac = m.jacobian(d.x, w_prev);
  Vector step(jac.size());
  for (Eigen::Index j = 0; j < step.size(); ++j) step[j] = eta * jac[j] * dl;
  return detail::mirror_step(p, w_prev, step);
}

/// Symmetric SMD, linear model: mirror step eta * x * (l'(y) - l'(x^T w_prev)).
inline Vector ssmd_step(const Potential& p, const LossFn& l, const Vector& w_prev,
                        const DataPoint& d, double eta) {
  if (!(eta > 0.0)) throw ValidationError("ssmd_step: eta must be > 0");
  const double dl = l.derivative(d.y) - l.derivative(d.x.dot(w_prev));
  Vector step(d.x.size());
  for (Eigen::Index j = 0; j < step.size(); ++j) step[j] = eta * d.x[j] * dl;
  return detail::mirror_step(p, w_prev, step);
}

/// Mirror step driven by an arbitrary prediction z:
/// grad psi(w_i) = grad psi(w_{i-1}) + eta x l'(y - z). With z = x^T w_{i-1}
/// this is SMD on the linear model.
inline Vector prediction_step(const Potential& p, const LossFn& l, const Vector& w_prev,
                              const DataPoint& d, double z, double eta) {
  const double dl = l.derivative(d.y - z);
  Vector step(d.x.size());
  for (Eigen::Index j = 0; j < step.size(); ++j) step[j] = eta * d.x[j] * dl;
  return detail::mirror_step(p, w_prev, step);
}

struct AuditRecord {
  long long step = 0;
  double d_psi_prev = 0.0;
  double d_psi_next = 0.0;
  double d_loss_bregman = 0.0;
  double e_term = 0.0;
  double loss_noise = 0.0;
  double local_residual = 0.0;
};

struct Trajectory {
  Potential potential = Potential::squared_l2(1);
  LossFn loss;
  Model model = Model::linear();
  StepSchedule schedule = StepSchedule::constant(1.0);
  Algorithm algorithm = Algorithm::Smd;

  Vector w0;
  std::vector<Vector> iterates;  // w_1 .. w_T
  Dataset data;                  // the point consumed at each step
  std::vector<AuditRecord> audits;

  std::optional<Vector> planted;  // generating weight vector, when synthetic
  std::vector<std::string> warnings;
  long long warning_count = 0;

  std::size_t size() const { return iterates.size(); }
  const Vector& iterate(std::size_t i) const { return i == 0 ? w0 : iterates[i - 1]; }
  const Vector& final_iterate() const { return iterates.empty() ? w0 : iterates.back(); }
};

/// Smallest eigenvalue over the probes of  Hess psi(w) - eta Hess L_i(w).
/// For SeparableQ with q < 2, coordinates with |w_j| < 1e-8 (where the
/// curvature of psi is unbounded) are dropped from the probe.
inline double convexity_margin(const Potential& p, const LossFn& l, const Model& m, double eta,
                               const std::vector<std::pair<Vector, DataPoint>>& probes) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& [w, d] : probes) {
    const Vector h = potential_hessian_diag(p, w);
    const Eigen::Index n = w.size();
    Matrix hl(n, n);
    if (m.is_linear()) {
      const double r = d.y - d.x.dot(w);
      hl = l.second_derivative(r) * d.x * d.x.transpose();
    } else {
      const InstantLoss li{l, m, d};
      constexpr double step = 1e-5;
      for (Eigen::Index j = 0; j < n; ++j) {
        Vector wp = w, wm = w;
        wp[j] += step;
        wm[j] -= step;
        hl.col(j) = (li.gradient(wp) - li.gradient(wm)) / (2.0 * step);
      }
      hl = 0.5 * (hl + hl.transpose()).eval();
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool singular = p.kind() == PotentialKind::SeparableQ && p.q() < 2.0 &&
                            std::abs(w[j]) < 1e-8;
      if (!singular) keep.push_back(j);
    }
    if (keep.empty()) continue;
    const auto k = static_cast<Eigen::Index>(keep.size());
    Matrix a(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) {
        a(r, c) = -eta * hl(keep[r], keep[c]);
      }
      a(r, r) += h[keep[r]];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    margin = std::min(margin, es.eigenvalues().minCoeff());
  }
  return margin;
}

inline double convexity_margin(const Potential& p, const LossFn& l, const Model& m, double eta,
                               const Vector& w, const DataPoint& d) {
  return convexity_margin(p, l, m, eta, {{w, d}});
}

struct ExcitationResult {
  bool excited = false;
  long long T_found = 0;
};

/// Smallest T with lambda_min(sum_{i<=T} x_i x_i^T) >= delta.
inline ExcitationResult persistent_excitation(const Dataset& data, double delta) {
  if (!(delta > 0.0)) throw ValidationError("persistent_excitation: delta must be > 0");
  if (data.empty()) return {};
  const Eigen::Index m = data.front().x.size();
  Matrix gram = Matrix::Zero(m, m);
  for (std::size_t t = 0; t < data.size(); ++t) {
    gram.noalias() += data[t].x * data[t].x.transpose();
    if (static_cast<Eigen::Index>(t + 1) < m) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() >= delta * (1.0 - 1e-12)) {
      return {true, static_cast<long long>(t + 1)};
    }
  }
  return {};
}

/// Basis sweep e_1..e_m followed by i.i.d. standard Gaussian inputs.
inline std::vector<Vector> persistently_exciting_inputs(std::size_t n, int dim, RngStream& rng) {
  std::vector<Vector> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(dim);
    if (i < static_cast<std::size_t>(dim)) {
      x.setZero();
      x[static_cast<Eigen::Index>(i)] = 1.0;
    } else {
      for (int j = 0; j < dim; ++j) x[j] = rng.normal();
    }
    xs.push_back(std::move(x));
  }
  return xs;
}

inline Vector default_w0(const ExperimentConfig& cfg) {
  if (cfg.data.w0) return Eigen::Map<const Vector>(cfg.data.w0->data(), cfg.dim);
  if (cfg.potential.kind() == PotentialKind::SquaredL2) return Vector::Zero(cfg.dim);
  return Vector::Ones(cfg.dim);
}

inline Vector planted_weights(const ExperimentConfig& cfg, RngStream& rng) {
  Vector w(cfg.dim);
  for (int j = 0; j < cfg.dim; ++j) {
    w[j] = cfg.potential.kind() == PotentialKind::NegEntropy ? rng.uniform(0.5, 1.5) : rng.normal();
  }
  return w;
}

struct SyntheticStream {
  Vector planted;
  Dataset points;  // the base dataset (cycled when shorter than T)
};

inline SyntheticStream make_stream(const ExperimentConfig& cfg, RngStream& rng) {
  SyntheticStream s;
  s.planted = planted_weights(cfg, rng);
  const std::size_t n = cfg.data.n_points > 0 ? static_cast<std::size_t>(cfg.data.n_points)
                                              : static_cast<std::size_t>(cfg.T);
  for (Vector& x : persistently_exciting_inputs(n, cfg.dim, rng)) {
    DataPoint d;
    d.y = cfg.model.predict(x, s.planted) + cfg.data.noise_std * rng.normal();
    d.x = std::move(x);
    s.points.push_back(std::move(d));
  }
  return s;
}

/// Order in which a base dataset is consumed over T steps: fixed cycling,
/// or a fresh seeded permutation per epoch.
inline std::vector<std::size_t> stream_order(std::size_t n, long long T, bool shuffle,
                                             RngStream& rng) {
  std::vector<std::size_t> order;
  if (n == 0) return order;
  order.reserve(static_cast<std::size_t>(T));
  std::vector<std::size_t> perm(n);
  while (static_cast<long long>(order.size()) < T) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (shuffle) {
      for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(perm[i - 1], perm[j]);
      }
    }
    for (std::size_t k = 0; k < n && static_cast<long long>(order.size()) < T; ++k) {
      order.push_back(perm[k]);
    }
  }
  return order;
}

/// Runs the configured engine over an explicit data stream.
inline Trajectory run_on_data(const ExperimentConfig& cfg, const Vector& w0, const Dataset& stream) {
  Trajectory traj;
  traj.potential = cfg.potential;
  traj.loss = cfg.loss;
  traj.model = cfg.model;
  traj.schedule = cfg.schedule;
  traj.algorithm = cfg.algorithm;
  check_domain(cfg.potential, w0, "w0");
  traj.w0 = w0;
  traj.iterates.reserve(stream.size());
  traj.data.reserve(stream.size());

  Vector w = w0;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const long long i = static_cast<long long>(t) + 1;
    const double eta = cfg.schedule.rate(i);
    const DataPoint& d = stream[t];
    if (convexity_margin(cfg.potential, cfg.loss, cfg.model, eta, w, d) < 0.0) {
      ++traj.warning_count;
      if (traj.warnings.size() < 10) {
        traj.warnings.push_back("step " + std::to_string(i) +
                                ": psi - eta L_i is not convex at the current iterate");
      }
    }
    try {
      w = cfg.algorithm == Algorithm::Ssmd ? ssmd_step(cfg.potential, cfg.loss, w, d, eta)
                                           : smd_step(cfg.potential, cfg.loss, cfg.model, w, d, eta);
    } catch (const DomainError& e) {
      throw DomainError("step " + std::to_string(i) + ": " + e.what());
    }
    traj.iterates.push_back(w);
    traj.data.push_back(d);
  }
  return traj;
}

/// Generates the synthetic stream described by cfg and runs the engine on it.
inline Trajectory run_trajectory(const ExperimentConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed, 0);
  const SyntheticStream s = make_stream(cfg, rng);
  RngStream order_rng = rng.child(1);
  Dataset stream;
  for (std::size_t k : stream_order(s.points.size(), cfg.T, cfg.data.shuffle, order_rng)) {
    stream.push_back(s.points[k]);
  }
  Trajectory traj = run_on_data(cfg, default_w0(cfg), stream);
  traj.planted = s.planted;
  return traj;
}

} // namespace mirrorkit
