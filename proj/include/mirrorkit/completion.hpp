#pragma once

// Bregman completion of squares: for strictly convex psi1, psi2
//   D1(w,w1) + D2(w,w2) = D1(w*,w1) + D2(w*,w2) + D_{psi1+psi2}(w,w*)
// where grad(psi1+psi2)(w*) = grad psi1(w1) + grad psi2(w2).

#include <cmath>
#include <optional>
#include <sstream>

#include "mirrorkit/potential.hpp"

namespace mirrorkit {

struct CompletionOptions {
  std::optional<Vector> initial;  ///< defaults to w1
  int max_iterations = 100;
  int max_halvings = 30;
  double tolerance = 1e-10;  ///< on |residual_j| / max(1, |rhs_j|)
};

struct CompletionResult {
  Vector w_star;
  double residual = 0.0;  ///< max-norm of grad(psi1+psi2)(w*) - rhs
  int iterations = 0;
  bool closed_form = false;
};

namespace detail {

inline bool same_generator(const Potential& a, const Potential& b) {
  return a.kind() == b.kind() && (a.kind() != PotentialKind::SeparableQ || a.q() == b.q());
}

inline bool in_both(const Potential& a, const Potential& b, const Vector& w) {
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (!a.in_domain(w[j]) || !b.in_domain(w[j])) return false;
  }
  return true;
}

} // namespace detail

inline CompletionResult complete_squares_detailed(const Potential& p1, const Potential& p2,
                                                  const Vector& w1, const Vector& w2,
                                                  const CompletionOptions& opt = {}) {
  if (p1.dim() != p2.dim()) throw DomainError("complete_squares: potentials differ in dimension");
  check_domain(p1, w1, "w1");
  check_domain(p2, w2, "w2");

  const Vector rhs = potential_grad(p1, w1) + potential_grad(p2, w2);
  const auto sum_grad = [&](double w) { return p1.grad1(w) + p2.grad1(w); };

  CompletionResult out;
  if (detail::same_generator(p1, p2)) {
    // psi1 + psi2 = 2 psi, so w* = (grad psi)^{-1}(rhs / 2).
    out.w_star = mirror_inverse(p1, rhs / 2.0);
    out.closed_form = true;
  } else {
    Vector w;
    if (opt.initial) {
      w = *opt.initial;
      if (w.size() != p1.dim() || !detail::in_both(p1, p2, w)) {
        throw DomainError("complete_squares: initial point outside the joint domain");
      }
    } else if (detail::in_both(p1, p2, w1)) {
      w = w1;
    } else if (detail::in_both(p1, p2, w2)) {
      w = w2;
    } else {
      w = Vector::Ones(p1.dim());
    }

    // The sum is separable, so the Newton system is diagonal and each
    // coordinate is damped independently.
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      const double scale = std::max(1.0, std::abs(rhs[j]));
      double x = w[j];
      double r = sum_grad(x) - rhs[j];
      int it = 0;
      for (; it < opt.max_iterations && std::abs(r) > opt.tolerance * scale; ++it) {
        double h = p1.curvature1(x) + p2.curvature1(x);
        if (!std::isfinite(h)) h = 1e12;
        if (h < 1e-12) h = 1e-12;
        double step = -r / h;
        bool accepted = false;
        for (int k = 0; k <= opt.max_halvings; ++k, step *= 0.5) {
          const double cand = x + step;
          if (!p1.in_domain(cand) || !p2.in_domain(cand)) continue;
          const double rc = sum_grad(cand) - rhs[j];
          if (std::abs(rc) < std::abs(r)) {
            x = cand;
            r = rc;
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
      }
      if (std::abs(r) > opt.tolerance * scale) {
        std::ostringstream os;
        os << "complete_squares: Newton failed on coordinate " << j << " after " << it
           << " iterations (residual " << r << ")";
        throw ConvergenceError(os.str());
      }
      out.iterations = std::max(out.iterations, it);
      w[j] = x;
    }
    out.w_star = w;
  }

  double res = 0.0;
  for (Eigen::Index j = 0; j < rhs.size(); ++j) {
    res = std::max(res, std::abs(sum_grad(out.w_star[j]) - rhs[j]));
  }
  out.residual = res;
  return out;
}

inline Vector complete_squares(const Potential& p1, const Potential& p2, const Vector& w1,
                               const Vector& w2, const CompletionOptions& opt = {}) {
  return complete_squares_detailed(p1, p2, w1, w2, opt).w_star;
}

/// Signed residual of the completion-of-squares identity at w.
inline double completion_identity_residual(const Potential& p1, const Potential& p2,
                                           const Vector& w1, const Vector& w2,
                                           const Vector& w_star, const Vector& w) {
  const double lhs = bregman_value(p1, w, w1) + bregman_value(p2, w, w2);
  const double d_sum = bregman_value(p1, w, w_star) + bregman_value(p2, w, w_star);
  const double rhs = bregman_value(p1, w_star, w1) + bregman_value(p2, w_star, w2) + d_sum;
  return lhs - rhs;
}

} // namespace mirrorkit
