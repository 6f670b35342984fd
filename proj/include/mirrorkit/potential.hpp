#pragma once

// Separable mirror-map generators and their Bregman divergences.
//
// Every built-in potential is a sum of identical one-dimensional pieces,
// psi(w) = sum_j phi(w_j), so gradients, inverse gradients and Hessians are
// all computed coordinate by coordinate in closed form.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mirrorkit/errors.hpp"

namespace mirrorkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class PotentialKind { SquaredL2, NegEntropy, SeparableQ };
enum class Domain { AllReals, PositiveOrthant };

class Potential {
public:
  /// psi(w) = 1/2 ||w||^2; its mirror map is the identity, so SMD is SGD.
  static Potential squared_l2(int dim) { return Potential(PotentialKind::SquaredL2, dim, 2.0); }

  /// psi(w) = sum_j w_j ln w_j on the positive orthant (exponentiated gradient).
  static Potential neg_entropy(int dim) { return Potential(PotentialKind::NegEntropy, dim, 0.0); }

  /// psi(w) = sum_j |w_j|^q / q, q > 1.
  static Potential separable_q(int dim, double q) {
    if (!(q > 1.0) || !std::isfinite(q)) {
      throw ValidationError("separable_q exponent must be > 1, got " + std::to_string(q));
    }
    return Potential(PotentialKind::SeparableQ, dim, q);
  }

  PotentialKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double q() const { return q_; }
  Domain domain() const {
    return kind_ == PotentialKind::NegEntropy ? Domain::PositiveOrthant : Domain::AllReals;
  }

  /// Same generator in a different dimension.
  Potential with_dim(int dim) const { return Potential(kind_, dim, q_); }

  std::string name() const {
    switch (kind_) {
      case PotentialKind::SquaredL2: return "squared_l2";
      case PotentialKind::NegEntropy: return "neg_entropy";
      case PotentialKind::SeparableQ: {
        std::ostringstream os;
        os << "separable_q(" << q_ << ")";
        return os.str();
      }
    }
    return "unknown";
  }

  bool in_domain(double w) const {
    if (!std::isfinite(w)) return false;
    return kind_ != PotentialKind::NegEntropy || w > 0.0;
  }

  // ---- one-dimensional pieces -------------------------------------------

  double value1(double w) const {
    switch (kind_) {
      case PotentialKind::SquaredL2: return 0.5 * w * w;
      case PotentialKind::NegEntropy: return w * std::log(w);
      case PotentialKind::SeparableQ: return std::pow(std::abs(w), q_) / q_;
    }
    return 0.0;
  }

  double grad1(double w) const {
    switch (kind_) {
      case PotentialKind::SquaredL2: return w;
      case PotentialKind::NegEntropy: return 1.0 + std::log(w);
      case PotentialKind::SeparableQ: return std::copysign(std::pow(std::abs(w), q_ - 1.0), w);
    }
    return 0.0;
  }

  double inverse1(double u) const {
    switch (kind_) {
      case PotentialKind::SquaredL2: return u;
      case PotentialKind::NegEntropy: return std::exp(u - 1.0);
      case PotentialKind::SeparableQ:
        return std::copysign(std::pow(std::abs(u), 1.0 / (q_ - 1.0)), u);
    }
    return 0.0;
  }

  /// phi''(w). Infinite at w = 0 for SeparableQ with q < 2.
  double curvature1(double w) const {
    switch (kind_) {
      case PotentialKind::SquaredL2: return 1.0;
      case PotentialKind::NegEntropy: return 1.0 / w;
      case PotentialKind::SeparableQ:
        if (w == 0.0) {
          if (q_ < 2.0) return std::numeric_limits<double>::infinity();
          return q_ == 2.0 ? 1.0 : 0.0;
        }
        return (q_ - 1.0) * std::pow(std::abs(w), q_ - 2.0);
    }
    return 0.0;
  }

  /// d(w, w') = phi(w) - phi(w') - phi'(w')(w - w'), in the form with the
  /// least cancellation for each kind.
  double bregman1(double w, double wp) const {
    switch (kind_) {
      case PotentialKind::SquaredL2: {
        const double d = w - wp;
        return 0.5 * d * d;
      }
      case PotentialKind::NegEntropy: return w * std::log(w / wp) - w + wp;
      case PotentialKind::SeparableQ:
        return value1(w) - value1(wp) - grad1(wp) * (w - wp);
    }
    return 0.0;
  }

private:
  Potential(PotentialKind kind, int dim, double q) : kind_(kind), dim_(dim), q_(q) {
    if (dim <= 0) throw ValidationError("potential dimension must be positive");
  }

  PotentialKind kind_;
  int dim_;
  double q_;
};

inline void check_domain(const Potential& p, const Vector& w, const char* what = "w") {
  if (w.size() != p.dim()) {
    std::ostringstream os;
    os << what << " has length " << w.size() << ", potential " << p.name() << " expects "
       << p.dim();
    throw DomainError(os.str());
  }
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (!p.in_domain(w[j])) {
      std::ostringstream os;
      os << what << "[" << j << "] = " << w[j] << " is outside the domain of " << p.name();
      throw DomainError(os.str());
    }
  }
}

inline double potential_value(const Potential& p, const Vector& w) {
  check_domain(p, w);
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) s += p.value1(w[j]);
  return s;
}

inline Vector potential_grad(const Potential& p, const Vector& w) {
  check_domain(p, w);
  Vector g(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) g[j] = p.grad1(w[j]);
  return g;
}

/// Inverse of the mirror map. The built-in gradients are onto R^dim, so this
/// never fails for finite input.
inline Vector mirror_inverse(const Potential& p, const Vector& u) {
  if (u.size() != p.dim()) throw DomainError("mirror_inverse: dimension mismatch");
  Vector w(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (!std::isfinite(u[j])) throw DomainError("mirror_inverse: non-finite mirror coordinate");
    w[j] = p.inverse1(u[j]);
  }
  return w;
}

/// Diagonal of the Hessian of psi at w.
inline Vector potential_hessian_diag(const Potential& p, const Vector& w) {
  check_domain(p, w);
  Vector h(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) h[j] = p.curvature1(w[j]);
  return h;
}

struct BregmanValue {
  double value = 0.0;
  bool first_arg_ok = true;  ///< both arguments were inside the domain
};

/// D_psi(w, w') = psi(w) - psi(w') - grad psi(w')^T (w - w').
inline BregmanValue bregman(const Potential& p, const Vector& w, const Vector& wp) {
  check_domain(p, w, "w");
  check_domain(p, wp, "w'");
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) s += p.bregman1(w[j], wp[j]);
  return {s, true};
}

/// Non-throwing variant: reports out-of-domain arguments through the flag.
inline BregmanValue bregman_checked(const Potential& p, const Vector& w, const Vector& wp) noexcept {
  if (w.size() != p.dim() || wp.size() != p.dim()) {
    return {std::numeric_limits<double>::quiet_NaN(), false};
  }
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (!p.in_domain(w[j]) || !p.in_domain(wp[j])) {
      return {std::numeric_limits<double>::quiet_NaN(), false};
    }
  }
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) s += p.bregman1(w[j], wp[j]);
  return {s, true};
}

inline double bregman_value(const Potential& p, const Vector& w, const Vector& wp) {
  return bregman(p, w, wp).value;
}

/// |D(w,w') - D(w,w'') - D(w'',w') + (grad psi(w') - grad psi(w''))^T (w - w'')|.
inline double law_of_cosines_residual(const Potential& p, const Vector& w, const Vector& wp,
                                      const Vector& wpp) {
  const double lhs = bregman_value(p, w, wp);
  const double d1 = bregman_value(p, w, wpp);
  const double d2 = bregman_value(p, wpp, wp);
  const double cross = (potential_grad(p, wp) - potential_grad(p, wpp)).dot(w - wpp);
  return std::abs(lhs - d1 - d2 + cross);
}

} // namespace mirrorkit
