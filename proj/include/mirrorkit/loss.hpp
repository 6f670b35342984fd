#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "mirrorkit/potential.hpp"

namespace mirrorkit {

enum class LossKind { Quadratic, Quartic, LogCosh };

/// Scalar convex loss with a unique root at zero.
class LossFn {
public:
  constexpr LossFn() = default;
  constexpr explicit LossFn(LossKind kind) : kind_(kind) {}

  static constexpr LossFn quadratic() { return LossFn(LossKind::Quadratic); }
  static constexpr LossFn quartic() { return LossFn(LossKind::Quartic); }
  static constexpr LossFn logcosh() { return LossFn(LossKind::LogCosh); }

  constexpr LossKind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case LossKind::Quadratic: return "quadratic";
      case LossKind::Quartic: return "quartic";
      case LossKind::LogCosh: return "logcosh";
    }
    return "unknown";
  }

  double value(double v) const {
    switch (kind_) {
      case LossKind::Quadratic: return 0.5 * v * v;
      case LossKind::Quartic: {
        const double v2 = v * v;
        return 0.25 * v2 * v2;
      }
      case LossKind::LogCosh: {
        // ln cosh v = |v| + ln(1 + e^{-2|v|}) - ln 2, finite for any v
        const double a = std::abs(v);
        return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
      }
    }
    return 0.0;
  }

  double derivative(double v) const {
    switch (kind_) {
      case LossKind::Quadratic: return v;
      case LossKind::Quartic: return v * v * v;
      case LossKind::LogCosh: return std::tanh(v);
    }
    return 0.0;
  }

  double second_derivative(double v) const {
    switch (kind_) {
      case LossKind::Quadratic: return 1.0;
      case LossKind::Quartic: return 3.0 * v * v;
      case LossKind::LogCosh: {
        const double c = std::cosh(v);
        return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
      }
    }
    return 0.0;
  }

  /// sup_v l''(v), or infinity when unbounded.
  double curvature_bound() const {
    return kind_ == LossKind::Quartic ? std::numeric_limits<double>::infinity() : 1.0;
  }

private:
  LossKind kind_ = LossKind::Quadratic;
};

/// D_l(a, b) = l(a) - l(b) - l'(b)(a - b).
inline BregmanValue loss_bregman(const LossFn& l, double a, double b) {
  if (l.kind() == LossKind::Quadratic) {
    const double d = a - b;
    return {0.5 * d * d, true};
  }
  return {l.value(a) - l.value(b) - l.derivative(b) * (a - b), true};
}

inline double loss_bregman_value(const LossFn& l, double a, double b) {
  return loss_bregman(l, a, b).value;
}

} // namespace mirrorkit
