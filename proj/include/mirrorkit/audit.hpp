#pragma once

// Step-level and trajectory-level checks of the SMD conservation laws.
//
// Local law, for any reference w and v_i = y_i - f(x_i, w):
//   D_psi(w, w_{i-1}) + eta l(v_i) = D_psi(w, w_i) + eta D_{L_i}(w, w_{i-1}) + E_i
// with E_i = D_{psi - eta L_i}(w_i, w_{i-1}) + eta L_i(w_i). Summing over i
// gives the global law.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mirrorkit/descent.hpp"

namespace mirrorkit {

inline double relative_residual(double lhs, double rhs) {
  return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

inline AuditRecord local_identity(const Potential& p, const LossFn& l, const Model& m,
                                  const Vector& w, const Vector& w_prev, const Vector& w_next,
                                  const DataPoint& d, double eta) {
  const InstantLoss li{l, m, d};
  AuditRecord r;
  r.d_psi_prev = bregman_value(p, w, w_prev);
  r.d_psi_next = bregman_value(p, w, w_next);
  r.d_loss_bregman = li.bregman(w, w_prev);
  // D_{psi - eta L}(a, b) = D_psi(a, b) - eta D_L(a, b)
  r.e_term = bregman_value(p, w_next, w_prev) - eta * li.bregman(w_next, w_prev) +
             eta * li.value(w_next);
  r.loss_noise = l.value(li.residual(w));
  const double lhs = r.d_psi_prev + eta * r.loss_noise;
  const double rhs = r.d_psi_next + eta * r.d_loss_bregman + r.e_term;
  r.local_residual = relative_residual(lhs, rhs);
  return r;
}

/// Fills traj.audits with one record per step against reference w.
inline void audit_trajectory(Trajectory& traj, const Vector& w) {
  if (traj.algorithm == Algorithm::Ssmd) {
    throw ConfigError("conservation-law audit applies to SMD/SGD trajectories, not SSMD");
  }
  traj.audits.clear();
  traj.audits.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const long long i = static_cast<long long>(t) + 1;
    AuditRecord r = local_identity(traj.potential, traj.loss, traj.model, w, traj.iterate(t),
                                   traj.iterate(t + 1), traj.data[t], traj.schedule.rate(i));
    r.step = i;
    traj.audits.push_back(r);
  }
}

/// Noise sequence v_i = y_i - f(x_i, w) seen by reference w.
inline std::vector<double> noises_for(const Trajectory& traj, const Vector& w) {
  std::vector<double> v;
  v.reserve(traj.data.size());
  for (const DataPoint& d : traj.data) v.push_back(d.y - traj.model.predict(d.x, w));
  return v;
}

struct GlobalIdentity {
  double d_psi_initial = 0.0;    // D_psi(w, w0)
  double sum_loss_noise = 0.0;   // sum l(v_i)
  double d_psi_final = 0.0;      // D_psi(w, w_T)
  double sum_d_loss = 0.0;       // sum D_{L_i}(w, w_{i-1})
  double sum_e = 0.0;            // sum E_i
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;         // |lhs - rhs| / (1 + |lhs|)
};

inline GlobalIdentity global_identity_terms(const Trajectory& traj, const Vector& w,
                                            const std::vector<double>& noises) {
  if (!traj.schedule.is_constant()) {
    throw ScheduleError("the global conservation law is stated for a constant learning rate");
  }
  if (noises.size() != traj.size()) throw ValidationError("one noise value per step is required");
  const double eta = traj.schedule.parameter();
  GlobalIdentity g;
  g.d_psi_initial = bregman_value(traj.potential, w, traj.w0);
  g.d_psi_final = bregman_value(traj.potential, w, traj.final_iterate());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const InstantLoss li{traj.loss, traj.model, traj.data[t]};
    const Vector& prev = traj.iterate(t);
    const Vector& next = traj.iterate(t + 1);
    g.sum_loss_noise += traj.loss.value(noises[t]);
    g.sum_d_loss += li.bregman(w, prev);
    g.sum_e += bregman_value(traj.potential, next, prev) - eta * li.bregman(next, prev) +
               eta * li.value(next);
  }
  g.lhs = g.d_psi_initial + eta * g.sum_loss_noise;
  g.rhs = g.d_psi_final + eta * g.sum_d_loss + g.sum_e;
  g.residual = relative_residual(g.lhs, g.rhs);
  return g;
}

inline double global_identity(const Trajectory& traj, const Vector& w,
                              const std::vector<double>& noises) {
  return global_identity_terms(traj, w, noises).residual;
}

/// Minimum convexity margin of psi - eta_i L_i over each step's endpoints and
/// midpoint.
inline double trajectory_margin(const Trajectory& traj) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const double eta = traj.schedule.rate(static_cast<long long>(t) + 1);
    const Vector& a = traj.iterate(t);
    const Vector& b = traj.iterate(t + 1);
    const DataPoint& d = traj.data[t];
    margin = std::min(margin, convexity_margin(traj.potential, traj.loss, traj.model, eta,
                                               {{a, d}, {b, d}, {0.5 * (a + b), d}}));
  }
  return margin;
}

struct MinimaxReport {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  bool premise_certified = false;
};

/// (D_psi(w, w_T) + eta sum D_{L_i}(w, w_{i-1})) / (D_psi(w, w0) + eta sum l(v_i)).
inline MinimaxReport minimax_ratio(const Trajectory& traj, const Vector& w,
                                   const std::vector<double>& noises) {
  const GlobalIdentity g = global_identity_terms(traj, w, noises);
  const double eta = traj.schedule.parameter();
  MinimaxReport r;
  r.numerator = g.d_psi_final + eta * g.sum_d_loss;
  r.denominator = g.lhs;
  if (r.denominator < 1e-14) {
    throw DegenerateError("minimax ratio undefined: reference equals w0 and all noises vanish");
  }
  r.ratio = r.numerator / r.denominator;
  r.premise_certified = trajectory_margin(traj) >= 0.0;
  return r;
}

// ---- risk-sensitive proof identities (linear model) ---------------------

/// Iterates of grad psi(w_i) = grad psi(w_{i-1}) + eta x_i l'(y_i - z_i) for
/// an arbitrary prediction sequence z.
inline Trajectory prediction_driven_trajectory(const Potential& p, const LossFn& l,
                                               const Vector& w0, const Dataset& data,
                                               const std::vector<double>& z, double eta) {
  if (z.size() != data.size()) throw ValidationError("one prediction per data point is required");
  Trajectory traj;
  traj.potential = p;
  traj.loss = l;
  traj.model = Model::linear();
  traj.schedule = StepSchedule::constant(eta);
  check_domain(p, w0, "w0");
  traj.w0 = w0;
  Vector w = w0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    w = prediction_step(p, l, w, data[t], z[t], eta);
    traj.iterates.push_back(w);
    traj.data.push_back(data[t]);
  }
  return traj;
}

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double absolute() const { return std::abs(lhs - rhs); }
  double relative() const { return relative_residual(lhs, rhs); }
};

/// Both sides of the w-gathering identity
///   -(1/eta) D(w,w0) - sum l(y_i - x_i^T w) + sum D_l(y_i - x_i^T w, y_i - z_i)
/// = -(1/eta) D(w,w_T) - sum [(1/eta) D(w_i,w_{i-1}) + l(y_i - x_i^T w_i)
///                              - D_l(y_i - x_i^T w_i, y_i - z_i)].
inline IdentitySides lemma3_sides(const Potential& p, const LossFn& l, const Vector& w,
                                  const Trajectory& traj, const std::vector<double>& z,
                                  double eta) {
  if (z.size() != traj.size()) throw ValidationError("one prediction per step is required");
  IdentitySides s;
  s.lhs = -bregman_value(p, w, traj.w0) / eta;
  s.rhs = -bregman_value(p, w, traj.final_iterate()) / eta;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const DataPoint& d = traj.data[t];
    const double a = d.y - d.x.dot(w);
    const double c = d.y - z[t];
    s.lhs += -l.value(a) + loss_bregman_value(l, a, c);
    const Vector& wi = traj.iterate(t + 1);
    const double ai = d.y - d.x.dot(wi);
    s.rhs -= bregman_value(p, wi, traj.iterate(t)) / eta + l.value(ai) - loss_bregman_value(l, ai, c);
  }
  return s;
}

inline double lemma3_residual(const Potential& p, const LossFn& l, const Vector& w,
                              const Trajectory& traj, const std::vector<double>& z, double eta) {
  return lemma3_sides(p, l, w, traj, z, eta).absolute();
}

/// Signed residual (lhs - rhs) of the single-step identity that telescopes
/// into the one above.
inline double lemma3_local_residual(const Potential& p, const LossFn& l, const Vector& w,
                                    const Vector& w_prev, const Vector& w_i, const DataPoint& d,
                                    double z, double eta) {
  const double a = d.y - d.x.dot(w);
  const double ai = d.y - d.x.dot(w_i);
  const double c = d.y - z;
  const double lhs = -bregman_value(p, w, w_prev) / eta - l.value(a) + loss_bregman_value(l, a, c);
  const double rhs = -bregman_value(p, w, w_i) / eta - bregman_value(p, w_i, w_prev) / eta -
                     l.value(ai) + loss_bregman_value(l, ai, c);
  return lhs - rhs;
}

/// |l(a_i) - D_l(a_i, c) - l(a_{i-1}) + (1/eta)(grad psi(w_i) - grad psi(w_{i-1}))^T (w_i - w_{i-1})
///  + D_l(a_{i-1}, c)|, with a_k = y - x^T w_k and c = y - z.
///
/// Under grad psi(w_i) = grad psi(w_{i-1}) + eta x l'(c) the mirror-step term
/// enters with a minus sign on the right-hand side (it equals l'(c) x^T(w_i - w_{i-1})).
inline double lemma4_residual(const Potential& p, const LossFn& l, const Vector& w_i,
                              const Vector& w_prev, const DataPoint& d, double z, double eta) {
  const double ai = d.y - d.x.dot(w_i);
  const double ap = d.y - d.x.dot(w_prev);
  const double c = d.y - z;
  const double mirror = (potential_grad(p, w_i) - potential_grad(p, w_prev)).dot(w_i - w_prev) / eta;
  const double lhs = l.value(ai) - loss_bregman_value(l, ai, c);
  const double rhs = l.value(ap) - mirror - loss_bregman_value(l, ap, c);
  return std::abs(lhs - rhs);
}

/// The same identity with the mirror-step term added instead of subtracted.
/// It is off by exactly (2/eta)(grad psi(w_i) - grad psi(w_{i-1}))^T (w_i - w_{i-1}).
inline double lemma4_printed_gap(const Potential& p, const LossFn& l, const Vector& w_i,
                                 const Vector& w_prev, const DataPoint& d, double z, double eta) {
  const double ai = d.y - d.x.dot(w_i);
  const double ap = d.y - d.x.dot(w_prev);
  const double c = d.y - z;
  const double mirror = (potential_grad(p, w_i) - potential_grad(p, w_prev)).dot(w_i - w_prev) / eta;
  const double lhs = l.value(ai) - loss_bregman_value(l, ai, c);
  const double rhs = l.value(ap) + mirror - loss_bregman_value(l, ap, c);
  return std::abs(lhs - rhs);
}

} // namespace mirrorkit
