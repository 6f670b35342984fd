#pragma once

// Draws from the exponential-family laws
//   w ~ exp(-(1/eta) D_psi(w, w0))      (weights)
//   v ~ exp(-l(v))                      (noise)
// For the separable potentials both densities factor per coordinate, so each
// coordinate is sampled by inverting a tabulated 1-D CDF. Quadratic cases are
// Gaussian and short-circuit to Box-Muller unless a tabulated draw is forced.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include "mirrorkit/loss.hpp"
#include "mirrorkit/potential.hpp"
#include "mirrorkit/rng.hpp"

namespace mirrorkit {

struct GridSpec {
  double half_width = 12.0;  // in units of the local scale sqrt(eta / curvature)
  int points = 4096;
};

/// Inverse-CDF sampler for a 1-D log-concave density known up to a constant.
class TabulatedDensity {
public:
  static constexpr double kBoundaryRatio = 1e-16;
  static constexpr double kMaxTailMass = 1e-8;

  /// log_density must peak at `center` with value 0. `lower_bound` (if finite)
  /// is a hard edge of the support; the grid never extends past it.
  TabulatedDensity(std::function<double(double)> log_density,
                   std::function<double(double)> log_density_slope, double center,
                   double initial_half_width, int points,
                   double lower_bound = -std::numeric_limits<double>::infinity())
      : log_density_(std::move(log_density)) {
    if (points < 16) throw GridError("tabulated density needs at least 16 grid points");
    const double cutoff = std::log(kBoundaryRatio);

    double lo = center - initial_half_width;
    double hi = center + initial_half_width;
    bool lo_is_edge = false;
    int expansions = 0;
    for (;;) {
      if (lo <= lower_bound) {
        lo = lower_bound;
        lo_is_edge = true;
      }
      const bool lo_ok = lo_is_edge || log_density_(lo) < cutoff;
      const bool hi_ok = log_density_(hi) < cutoff;
      if (lo_ok && hi_ok) break;
      if (++expansions > 60) {
        std::ostringstream os;
        os << "density still above " << kBoundaryRatio << " of its peak at [" << lo << ", " << hi
           << "]";
        throw GridError(os.str());
      }
      if (!lo_ok) lo = center - 2.0 * (center - lo);
      if (!hi_ok) hi = center + 2.0 * (hi - center);
    }

    nodes_.resize(static_cast<std::size_t>(points));
    cdf_.resize(nodes_.size());
    const double h = (hi - lo) / (points - 1);
    std::vector<double> f(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      nodes_[k] = k + 1 == nodes_.size() ? hi : lo + h * static_cast<double>(k);
      f[k] = std::exp(log_density_(nodes_[k]));
    }
    cdf_[0] = 0.0;
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      cdf_[k] = cdf_[k - 1] + 0.5 * (f[k - 1] + f[k]) * (nodes_[k] - nodes_[k - 1]);
    }
    normalizer_ = cdf_.back();
    if (!(normalizer_ > 0.0) || !std::isfinite(normalizer_)) {
      throw GridError("tabulated density has no mass on its grid");
    }
    for (double& c : cdf_) c /= normalizer_;

    // Log-concave tail bound: mass beyond b is at most f(b) / |(log f)'(b)|.
    tail_mass_ = 0.0;
    if (!lo_is_edge) tail_mass_ += f.front() / std::abs(log_density_slope(lo));
    tail_mass_ += f.back() / std::abs(log_density_slope(hi));
    tail_mass_ /= normalizer_;
    if (!(tail_mass_ < kMaxTailMass)) {
      std::ostringstream os;
      os << "tail mass " << tail_mass_ << " outside the grid exceeds " << kMaxTailMass;
      throw GridError(os.str());
    }
  }

  double draw(RngStream& rng) const { return quantile(rng.uniform()); }

  /// Piecewise-linear inverse of the tabulated CDF.
  double quantile(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return nodes_.front();
    if (it == cdf_.end()) return nodes_.back();
    const auto k = static_cast<std::size_t>(it - cdf_.begin());
    const double c0 = cdf_[k - 1], c1 = cdf_[k];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return nodes_[k - 1] + t * (nodes_[k] - nodes_[k - 1]);
  }

  double normalizer() const { return normalizer_; }
  double tail_mass() const { return tail_mass_; }
  double cdf_end() const { return cdf_.back(); }
  double lower() const { return nodes_.front(); }
  double upper() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& cdf() const { return cdf_; }

private:
  std::function<double(double)> log_density_;
  std::vector<double> nodes_;
  std::vector<double> cdf_;
  double normalizer_ = 0.0;
  double tail_mass_ = 0.0;
};

struct ExpFamilySpec {
  Potential potential = Potential::squared_l2(1);
  Vector center;      // w0
  double scale = 1.0; // eta
  GridSpec grid;
  bool force_tabulated = false;  // bypass the Gaussian short-circuit
};

/// Sampler for w ~ exp(-(1/eta) D_psi(w, w0)); tables are built once.
class WeightSampler {
public:
  explicit WeightSampler(ExpFamilySpec spec) : spec_(std::move(spec)) {
    check_domain(spec_.potential, spec_.center, "center");
    if (!(spec_.scale > 0.0)) throw ValidationError("exponential-family scale must be > 0");
    gaussian_ = spec_.potential.kind() == PotentialKind::SquaredL2 && !spec_.force_tabulated;
    if (gaussian_) return;

    const Potential& p = spec_.potential;
    const double eta = spec_.scale;
    std::map<double, std::size_t> built;
    for (Eigen::Index j = 0; j < spec_.center.size(); ++j) {
      const double c = spec_.center[j];
      if (auto it = built.find(c); it != built.end()) {
        table_of_.push_back(it->second);
        continue;
      }
      auto logf = [p, c, eta](double w) {
        if (p.kind() == PotentialKind::NegEntropy && w <= 0.0) return -c / eta;
        return -p.bregman1(w, c) / eta;
      };
      auto slope = [p, c, eta](double w) { return -(p.grad1(w) - p.grad1(c)) / eta; };
      const double curv = p.curvature1(c);
      const double unit =
          std::isfinite(curv) && curv > 0.0 ? std::sqrt(eta / curv) : std::sqrt(eta);
      const double lower = p.kind() == PotentialKind::NegEntropy
                               ? 0.0
                               : -std::numeric_limits<double>::infinity();
      tables_.push_back(std::make_shared<TabulatedDensity>(
          logf, slope, c, spec_.grid.half_width * unit, spec_.grid.points, lower));
      built.emplace(c, tables_.size() - 1);
      table_of_.push_back(tables_.size() - 1);
    }
  }

  Vector draw(RngStream& rng) const {
    const Eigen::Index n = spec_.center.size();
    Vector w(n);
    if (gaussian_) {
      const double sd = std::sqrt(spec_.scale);
      for (Eigen::Index j = 0; j < n; ++j) w[j] = spec_.center[j] + sd * rng.normal();
      return w;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      w[j] = tables_[table_of_[static_cast<std::size_t>(j)]]->draw(rng);
    }
    return w;
  }

  bool gaussian() const { return gaussian_; }
  const ExpFamilySpec& spec() const { return spec_; }

  /// Per-coordinate normalizing constants of the unnormalized density
  /// (sqrt(2 pi eta) in the Gaussian case).
  std::vector<double> normalizers() const {
    std::vector<double> z;
    for (Eigen::Index j = 0; j < spec_.center.size(); ++j) {
      z.push_back(gaussian_ ? std::sqrt(2.0 * std::numbers::pi * spec_.scale)
                            : tables_[table_of_[static_cast<std::size_t>(j)]]->normalizer());
    }
    return z;
  }

  const TabulatedDensity* table(Eigen::Index j) const {
    return gaussian_ ? nullptr : tables_[table_of_[static_cast<std::size_t>(j)]].get();
  }

private:
  ExpFamilySpec spec_;
  bool gaussian_ = false;
  std::vector<std::shared_ptr<const TabulatedDensity>> tables_;
  std::vector<std::size_t> table_of_;
};

/// Sampler for v ~ exp(-l(v)).
class NoiseSampler {
public:
  explicit NoiseSampler(LossFn loss, bool force_tabulated = false, GridSpec grid = {})
      : loss_(loss), gaussian_(loss.kind() == LossKind::Quadratic && !force_tabulated) {
    if (gaussian_) return;
    auto logf = [loss](double v) { return -loss.value(v); };
    auto slope = [loss](double v) { return -loss.derivative(v); };
    table_ = std::make_shared<TabulatedDensity>(logf, slope, 0.0, grid.half_width, grid.points);
  }

  double draw(RngStream& rng) const { return gaussian_ ? rng.normal() : table_->draw(rng); }
  bool gaussian() const { return gaussian_; }
  const LossFn& loss() const { return loss_; }
  double normalizer() const {
    return gaussian_ ? std::sqrt(2.0 * std::numbers::pi) : table_->normalizer();
  }
  const TabulatedDensity* table() const { return table_.get(); }

private:
  LossFn loss_;
  bool gaussian_;
  std::shared_ptr<const TabulatedDensity> table_;
};

inline Vector sample_weight(const ExpFamilySpec& spec, RngStream& rng) {
  return WeightSampler(spec).draw(rng);
}

inline double sample_noise(const LossFn& l, RngStream& rng) { return NoiseSampler(l).draw(rng); }

struct MirrorMeanReport {
  Vector mc_estimate;
  Vector target;
  Vector sigma_bound;
  bool pass = false;
};

namespace detail {

/// Accumulates per-coordinate mean and sd of mirror-mapped draws and compares
/// the mean with `target` at 3 standard errors.
template <typename Draw>
MirrorMeanReport mirror_mean(Eigen::Index n_coords, long long n_samples, const Vector& target,
                             Draw&& draw) {
  if (n_samples < 10000) throw ValidationError("mirror-mean check needs n_samples >= 10000");
  Vector sum = Vector::Zero(n_coords);
  Vector sum_sq = Vector::Zero(n_coords);
  for (long long s = 0; s < n_samples; ++s) {
    const Vector g = draw();
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const double n = static_cast<double>(n_samples);
  MirrorMeanReport r;
  r.mc_estimate = sum / n;
  r.target = target;
  r.sigma_bound.resize(n_coords);
  r.pass = true;
  for (Eigen::Index j = 0; j < n_coords; ++j) {
    const double var = std::max(0.0, (sum_sq[j] - n * r.mc_estimate[j] * r.mc_estimate[j]) / (n - 1.0));
    r.sigma_bound[j] = 3.0 * std::sqrt(var) / std::sqrt(n);
    if (!(std::abs(r.mc_estimate[j] - target[j]) <= r.sigma_bound[j])) r.pass = false;
  }
  return r;
}

} // namespace detail

/// E grad psi(w) = grad psi(w0) for w ~ exp(-(1/eta) D_psi(., w0)).
inline MirrorMeanReport mirror_mean_check(const ExpFamilySpec& spec, long long n_samples,
                                          RngStream& rng) {
  const WeightSampler sampler(spec);
  const Potential& p = spec.potential;
  return detail::mirror_mean(spec.center.size(), n_samples, potential_grad(p, spec.center), [&] {
    return potential_grad(p, sampler.draw(rng));
  });
}

/// The noise law exp(-l) is the same family with psi = l, w0 = 0, eta = 1,
/// so E l'(v) = l'(0) = 0.
inline MirrorMeanReport noise_mirror_mean_check(const LossFn& l, long long n_samples,
                                                RngStream& rng) {
  const NoiseSampler sampler(l);
  Vector target(1);
  target[0] = l.derivative(0.0);
  return detail::mirror_mean(1, n_samples, target, [&] {
    Vector g(1);
    g[0] = l.derivative(sampler.draw(rng));
    return g;
  });
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return 1.628 * std::sqrt((nn + mm) / (nn * mm));
}

} // namespace mirrorkit
