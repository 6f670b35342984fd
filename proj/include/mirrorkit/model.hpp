#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mirrorkit/loss.hpp"
#include "mirrorkit/potential.hpp"

namespace mirrorkit {

struct DataPoint {
  Vector x;
  double y = 0.0;
};

using Dataset = std::vector<DataPoint>;

enum class ModelKind { Linear, GeneralizedLinear };
enum class Link { Tanh, Softplus };

/// f(x, w) = g(x^T w), with g the identity for the linear model.
class Model {
public:
  static Model linear() { return Model(ModelKind::Linear, Link::Tanh); }
  static Model glm(Link link) { return Model(ModelKind::GeneralizedLinear, link); }

  ModelKind kind() const { return kind_; }
  Link link() const { return link_; }
  bool is_linear() const { return kind_ == ModelKind::Linear; }

  std::string name() const {
    if (is_linear()) return "linear";
    return link_ == Link::Tanh ? "glm(tanh)" : "glm(softplus)";
  }

  double link_value(double s) const {
    if (is_linear()) return s;
    if (link_ == Link::Tanh) return std::tanh(s);
    // softplus, stable for large |s|
    return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  }

  double link_derivative(double s) const {
    if (is_linear()) return 1.0;
    if (link_ == Link::Tanh) {
      const double t = std::tanh(s);
      return 1.0 - t * t;
    }
    return 1.0 / (1.0 + std::exp(-s));
  }

  double predict(const Vector& x, const Vector& w) const { return link_value(x.dot(w)); }

  /// Partial derivatives of f(x, w) with respect to w (a p-vector).
  Vector jacobian(const Vector& x, const Vector& w) const {
    if (is_linear()) return x;
    return x * link_derivative(x.dot(w));
  }

private:
  Model(ModelKind kind, Link link) : kind_(kind), link_(link) {}
  ModelKind kind_;
  Link link_;
};

/// Instantaneous loss L_i(w) = l(y_i - f(x_i, w)) and its derived quantities.
struct InstantLoss {
  const LossFn& loss;
  const Model& model;
  const DataPoint& d;

  double residual(const Vector& w) const { return d.y - model.predict(d.x, w); }
  double value(const Vector& w) const { return loss.value(residual(w)); }
  Vector gradient(const Vector& w) const {
    return -model.jacobian(d.x, w) * loss.derivative(residual(w));
  }
  /// D_{L_i}(w, w'); may be negative when L_i is not convex.
  double bregman(const Vector& w, const Vector& wp) const {
    if (model.is_linear() && loss.kind() == LossKind::Quadratic) {
      const double e = d.x.dot(w - wp);
      return 0.5 * e * e;
    }
    return value(w) - value(wp) - gradient(wp).dot(w - wp);
  }
};

enum class ScheduleKind { Constant, RobbinsMonro };

class StepSchedule {
public:
  static StepSchedule constant(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("schedule.constant.eta must be > 0");
    return StepSchedule(ScheduleKind::Constant, eta);
  }
  static StepSchedule robbins_monro(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("schedule.robbins_monro.c must be > 0");
    return StepSchedule(ScheduleKind::RobbinsMonro, c);
  }

  ScheduleKind kind() const { return kind_; }
  bool is_constant() const { return kind_ == ScheduleKind::Constant; }
  double parameter() const { return param_; }

  /// Step size for the i-th update, i >= 1.
  double rate(long long i) const {
    return is_constant() ? param_ : param_ / static_cast<double>(i);
  }

private:
  StepSchedule(ScheduleKind kind, double p) : kind_(kind), param_(p) {}
  ScheduleKind kind_;
  double param_;
};

struct NoiseSpec {
  double variance = 1.0;

  explicit NoiseSpec(double var = 1.0) : variance(var) {
    if (!(var > 0.0)) throw ValidationError("noise variance must be > 0");
  }
};

} // namespace mirrorkit
