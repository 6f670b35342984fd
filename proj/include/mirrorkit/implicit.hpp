#pragma once

// Implicit regularization: on a consistent underdetermined linear system,
// SMD started at w0 converges to argmin_{Xw = y} D_psi(w, w0). The oracle
// solves the KKT system
//   grad psi(w) - grad psi(w0) = X^T lambda,   X w = y
// independently of the SMD iteration.

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mirrorkit/descent.hpp"
#include "mirrorkit/parallel.hpp"

namespace mirrorkit {

struct OracleSolution {
  Vector w_star;
  Vector lambda;
  double kkt_residual = 0.0;         // ||grad psi(w) - grad psi(w0) - X^T lambda||_inf
  double constraint_residual = 0.0;  // ||X w - y||_inf
  int iterations = 0;
};

inline OracleSolution implicit_reg_oracle(const Matrix& X, const Vector& y, const Potential& p,
                                          const Vector& w0) {
  if (X.rows() != y.size() || X.cols() != p.dim()) {
    throw ValidationError("implicit_reg_oracle: X, y and potential dimensions disagree");
  }
  if (X.rows() >= X.cols()) throw RankError("implicit_reg_oracle: system is not underdetermined");
  check_domain(p, w0, "w0");
  Eigen::FullPivLU<Matrix> lu(X);
  if (lu.rank() < X.rows()) throw RankError("implicit_reg_oracle: X is not full row rank");

  OracleSolution sol;
  const Vector g0 = potential_grad(p, w0);
  if (p.kind() == PotentialKind::SquaredL2) {
    // w0 + X^+ (y - X w0)
    const Matrix gram = X * X.transpose();
    sol.lambda = gram.ldlt().solve(y - X * w0);
    sol.w_star = w0 + X.transpose() * sol.lambda;
  } else {
    // Newton on lambda with w eliminated through the mirror map:
    // w(lambda) = (grad psi)^{-1}(g0 + X^T lambda), F(lambda) = X w(lambda) - y.
    const auto w_of = [&](const Vector& lam) { return mirror_inverse(p, g0 + X.transpose() * lam); };
    const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
    Vector lam = Vector::Zero(X.rows());
    Vector w = w_of(lam);
    Vector F = X * w - y;
    int it = 0;
    for (; it < 200 && F.lpNorm<Eigen::Infinity>() > 1e-13 * scale; ++it) {
      Vector dwdu(w.size());
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        // dw/du is 0 or infinite at w_j = 0 for separable_q; clip so the
        // Newton matrix stays invertible and let the line search do the rest.
        const double c = p.curvature1(w[j]);
        dwdu[j] = std::clamp(1.0 / c, 1e-8, 1e8);
      }
      const Matrix J = X * dwdu.asDiagonal() * X.transpose();
      const Vector step = J.colPivHouseholderQr().solve(-F);
      double t = 1.0;
      bool accepted = false;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Vector cand_lam = lam + t * step;
        Vector cand_w;
        try {
          cand_w = w_of(cand_lam);
        } catch (const DomainError&) {
          continue;
        }
        bool ok = true;
        for (Eigen::Index j = 0; j < cand_w.size() && ok; ++j) ok = p.in_domain(cand_w[j]);
        if (!ok) continue;
        const Vector cand_F = X * cand_w - y;
        if (cand_F.lpNorm<Eigen::Infinity>() < F.lpNorm<Eigen::Infinity>()) {
          lam = cand_lam;
          w = cand_w;
          F = cand_F;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    sol.iterations = it;
    sol.lambda = lam;
    sol.w_star = w;
  }

  sol.kkt_residual =
      (potential_grad(p, sol.w_star) - g0 - X.transpose() * sol.lambda).lpNorm<Eigen::Infinity>();
  sol.constraint_residual = (X * sol.w_star - y).lpNorm<Eigen::Infinity>();
  if (!(sol.constraint_residual <= 1e-10)) {
    std::ostringstream os;
    os << "implicit_reg_oracle: KKT Newton stalled at constraint residual " << sol.constraint_residual
       << " after " << sol.iterations << " iterations";
    throw ConvergenceError(os.str());
  }
  return sol;
}

struct SmdLimit {
  Vector w;
  long long steps = 0;
  double feasibility = 0.0;
  std::vector<std::pair<long long, double>> log;  // (step, ||Xw - y||_inf) at steps 2^k
};

/// Cycles SMD through the rows of (X, y) until ||Xw - y||_inf < tol.
inline SmdLimit smd_until_feasible(const Potential& p, const LossFn& l, const Matrix& X,
                                   const Vector& y, const Vector& w0, double eta, double tol,
                                   long long step_cap) {
  Dataset rows(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) rows[static_cast<std::size_t>(r)] = {X.row(r).transpose(), y[r]};
  const Model linear = Model::linear();
  SmdLimit out;
  out.w = w0;
  out.feasibility = (X * w0 - y).lpNorm<Eigen::Infinity>();
  long long next_log = 1;
  while (out.feasibility >= tol) {
    if (out.steps >= step_cap) {
      std::ostringstream os;
      os << "SMD did not reach ||Xw - y||_inf < " << tol << " within " << step_cap
         << " steps; last feasibility " << out.feasibility;
      for (const auto& [s, f] : out.log) os << "\n  step " << s << ": " << f;
      throw StepCapError(os.str());
    }
    for (std::size_t r = 0; r < rows.size() && out.steps < step_cap; ++r) {
      out.w = smd_step(p, l, linear, out.w, rows[r], eta);
      ++out.steps;
      if (out.steps == next_log) {
        out.log.emplace_back(out.steps, (X * out.w - y).lpNorm<Eigen::Infinity>());
        next_log *= 2;
      }
    }
    out.feasibility = (X * out.w - y).lpNorm<Eigen::Infinity>();
  }
  return out;
}

struct ImplicitCase {
  Matrix X;
  Vector y;
  Vector w0;
  Vector planted;
};

/// Random consistent system for the configured potential. Entries of X are
/// N(0, 1/cols) so rows have unit expected norm.
///   squared_l2:   Gaussian planted vector, w0 = 0
///   neg_entropy:  positive planted vector, w0 = argmin psi = e^{-1}
///   separable_q:  sparse planted vector, w0 = argmin psi = 0
inline ImplicitCase make_implicit_case(const Potential& p, int rows, int sparsity, RngStream& rng) {
  const int cols = p.dim();
  if (rows >= cols) throw ValidationError("implicit.rows must be smaller than dim");
  ImplicitCase c;
  c.X.resize(rows, cols);
  const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < cols; ++j) c.X(r, j) = sd * rng.normal();
  }
  c.planted = Vector::Zero(cols);
  switch (p.kind()) {
    case PotentialKind::SquaredL2:
      for (int j = 0; j < cols; ++j) c.planted[j] = rng.normal();
      c.w0 = Vector::Zero(cols);
      break;
    case PotentialKind::NegEntropy:
      for (int j = 0; j < cols; ++j) c.planted[j] = rng.uniform(0.5, 1.5);
      c.w0 = Vector::Constant(cols, std::exp(-1.0));
      break;
    case PotentialKind::SeparableQ: {
      std::vector<int> idx(static_cast<std::size_t>(cols));
      std::iota(idx.begin(), idx.end(), 0);
      const int k = std::min(sparsity, cols);
      for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cols - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        c.planted[idx[static_cast<std::size_t>(i)]] = rng.uniform(1.0, 2.0) * rng.rademacher();
      }
      c.w0 = Vector::Zero(cols);
      break;
    }
  }
  c.y = c.X * c.planted;
  return c;
}

/// Indices of the k largest |w_j| coincide with the planted support.
inline bool support_recovered(const Vector& w, const Vector& planted) {
  std::vector<Eigen::Index> support, order(static_cast<std::size_t>(w.size()));
  for (Eigen::Index j = 0; j < planted.size(); ++j) {
    if (planted[j] != 0.0) support.push_back(j);
  }
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(w[a]) > std::abs(w[b]); });
  std::vector<Eigen::Index> top(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(support.size()));
  std::sort(top.begin(), top.end());
  return top == support;
}

struct ImplicitResult {
  int case_index = 0;
  Vector w_smd;
  Vector w_oracle;
  double gap = 0.0;          // ||w_smd - w_oracle||_inf
  double feasibility = 0.0;  // ||X w_smd - y||_inf
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  double margin = 0.0;       // convexity margin over w0, w_oracle and w_smd
  long long steps = 0;
  bool support_recovered = false;
  std::vector<std::pair<long long, double>> log;
};

inline ImplicitResult run_implicit_case(const Potential& p, const LossFn& l, const ImplicitCase& c,
                                        double eta, double tol, long long step_cap) {
  ImplicitResult r;
  const OracleSolution oracle = implicit_reg_oracle(c.X, c.y, p, c.w0);
  std::vector<std::pair<Vector, DataPoint>> probes;
  for (Eigen::Index row = 0; row < c.X.rows(); ++row) {
    const Vector x = c.X.row(row).transpose();
    probes.push_back({c.w0, {x, x.dot(c.w0)}});
    probes.push_back({oracle.w_star, {x, c.y[row]}});
  }
  r.margin = convexity_margin(p, l, Model::linear(), eta, probes);
  if (r.margin < 0.0) {
    throw ConfigError("learning rate is not certified: psi - eta L_i fails to be convex (margin " +
                      std::to_string(r.margin) + ")");
  }
  const SmdLimit lim = smd_until_feasible(p, l, c.X, c.y, c.w0, eta, tol, step_cap);
  r.w_smd = lim.w;
  r.w_oracle = oracle.w_star;
  r.gap = (lim.w - oracle.w_star).lpNorm<Eigen::Infinity>();
  r.feasibility = lim.feasibility;
  r.kkt_residual = oracle.kkt_residual;
  r.constraint_residual = oracle.constraint_residual;
  r.steps = lim.steps;
  r.log = lim.log;
  r.support_recovered = support_recovered(lim.w, c.planted);
  return r;
}

/// One result per case; case k draws its system from stream (seed, k + 1).
inline std::vector<ImplicitResult> implicit_reg_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const double eta = cfg.eta();
  std::vector<ImplicitResult> out(static_cast<std::size_t>(cfg.implicit.cases));
  parallel_for(out.size(), [&](std::size_t k) {
    RngStream rng(cfg.seed, k + 1);
    const ImplicitCase c = make_implicit_case(cfg.potential, cfg.implicit.rows, cfg.implicit.sparsity, rng);
    out[k] = run_implicit_case(cfg.potential, cfg.loss, c, eta, cfg.tolerances.feasibility,
                               cfg.implicit.step_cap);
    out[k].case_index = static_cast<int>(k);
  });
  return out;
}

} // namespace mirrorkit
