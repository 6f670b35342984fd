#pragma once

// Subcommand dispatch. Each subcommand runs one pipeline, writes its CSV into
// the output directory and returns 0 (pass), 2 (assertion failed) or 1 (error).

#include <algorithm>
#include <array>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mirrorkit/audit.hpp"
#include "mirrorkit/convergence.hpp"
#include "mirrorkit/csv.hpp"
#include "mirrorkit/implicit.hpp"
#include "mirrorkit/parallel.hpp"
#include "mirrorkit/risk.hpp"
#include "mirrorkit/samplers.hpp"

namespace mirrorkit {

enum ExitCode : int { kExitPass = 0, kExitError = 1, kExitFail = 2 };

inline constexpr std::array<const char*, 7> kSubcommands{
    "run", "audit", "minimax", "risk", "implicit", "converge", "sample-check"};

struct DispatchOptions {
  std::optional<std::string> out_dir;
  bool strict = false;
  std::ostream* log = &std::cerr;
};

namespace detail {

class Session {
public:
  Session(const ExperimentConfig& cfg, const DispatchOptions& opt)
      : cfg_(cfg), opt_(opt), dir_(opt.out_dir.value_or(cfg.output_dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::ostream& log() { return *opt_.log; }

  void warn(const std::string& msg) {
    if (opt_.strict) throw Error("warning raised under --strict: " + msg);
    log() << "[mirrorkit] warning: " << msg << "\n";
  }

  void emit(const CsvTable& t, const std::string& name) {
    const auto path = dir_ / name;
    t.write(path);
    log() << "[mirrorkit] wrote " << path.string() << " (" << t.size() << " rows)\n";
  }

  int verdict(bool pass, const std::string& what) {
    log() << "[mirrorkit] " << what << ": " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitPass : kExitFail;
  }

  void forward(const Trajectory& t) {
    for (const auto& w : t.warnings) warn(w);
    if (t.warning_count > static_cast<long long>(t.warnings.size())) {
      warn(std::to_string(t.warning_count - static_cast<long long>(t.warnings.size())) +
           " further convexity warnings suppressed");
    }
  }

  const ExperimentConfig& cfg() const { return cfg_; }

private:
  const ExperimentConfig& cfg_;
  const DispatchOptions& opt_;
  std::filesystem::path dir_;
};

inline int cmd_run(Session& s) {
  const Trajectory traj = run_trajectory(s.cfg());
  s.forward(traj);
  std::vector<std::string> header{"step"};
  for (int j = 1; j <= s.cfg().dim; ++j) header.push_back("w" + std::to_string(j));
  CsvTable t(header);
  for (std::size_t i = 0; i <= traj.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    const Vector& w = traj.iterate(i);
    for (Eigen::Index j = 0; j < w.size(); ++j) row.push_back(format_real(w[j]));
    t.row(std::move(row));
  }
  s.emit(t, "trajectory.csv");
  return kExitPass;
}

inline int cmd_audit(Session& s) {
  const ExperimentConfig& cfg = s.cfg();
  Trajectory traj = run_trajectory(cfg);
  s.forward(traj);
  const Vector& w = *traj.planted;
  audit_trajectory(traj, w);
  CsvTable t({"step", "d_psi_prev", "d_psi_next", "d_loss_bregman", "e_term", "loss_noise",
              "local_residual"});
  double worst = 0.0;
  for (const AuditRecord& r : traj.audits) {
    worst = std::max(worst, r.local_residual);
    t.row({std::to_string(r.step), format_real(r.d_psi_prev), format_real(r.d_psi_next),
           format_real(r.d_loss_bregman), format_real(r.e_term), format_real(r.loss_noise),
           format_real(r.local_residual)});
  }
  s.emit(t, "audit.csv");
  bool pass = worst <= cfg.tolerances.identity;
  s.log() << "[mirrorkit] max local residual " << format_real(worst) << "\n";
  if (cfg.schedule.is_constant()) {
    const double g = global_identity(traj, w, noises_for(traj, w));
    s.log() << "[mirrorkit] global residual " << format_real(g) << "\n";
    pass = pass && g <= cfg.tolerances.identity;
  }
  return s.verdict(pass, "conservation-law audit");
}

inline int cmd_minimax(Session& s) {
  const ExperimentConfig& cfg = s.cfg();
  cfg.validate();
  cfg.eta();
  std::vector<MinimaxReport> reports(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(reports.size(), [&](std::size_t k) {
    RngStream rng(cfg.seed, k + 1);
    const SyntheticStream st = make_stream(cfg, rng);
    RngStream order_rng = rng.child(1);
    Dataset stream;
    for (std::size_t i : stream_order(st.points.size(), cfg.T, cfg.data.shuffle, order_rng)) {
      stream.push_back(st.points[i]);
    }
    const Trajectory traj = run_on_data(cfg, default_w0(cfg), stream);
    reports[k] = minimax_ratio(traj, st.planted, noises_for(traj, st.planted));
  });
  CsvTable t({"trial", "numerator", "denominator", "ratio", "premise_certified"});
  bool pass = true;
  long long certified = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const MinimaxReport& r = reports[k];
    t.row({std::to_string(k), format_real(r.numerator), format_real(r.denominator),
           format_real(r.ratio), format_bool(r.premise_certified)});
    if (r.premise_certified) {
      ++certified;
      worst = std::max(worst, r.ratio);
      if (!(r.ratio <= 1.0 + cfg.tolerances.minimax)) pass = false;
    }
  }
  s.emit(t, "minimax.csv");
  if (certified < static_cast<long long>(reports.size())) {
    s.warn(std::to_string(reports.size() - static_cast<std::size_t>(certified)) +
           " trials lack a certified convexity premise and are excluded from the bound");
  }
  if (certified == 0) {
    s.log() << "[mirrorkit] no premise-certified trials\n";
    pass = false;
  }
  s.log() << "[mirrorkit] max certified ratio " << format_real(worst) << "\n";
  return s.verdict(pass, "minimax bound");
}

inline int cmd_risk(Session& s) {
  const ExperimentConfig& cfg = s.cfg();
  const RiskReport rep = risk_compare(cfg);
  for (const auto& w : rep.warnings) s.warn(w);
  CsvTable t({"estimator", "mc_cost", "ci_low", "ci_high", "n_trials"});
  for (const EstimatorResult& r : rep.rows) {
    t.row({r.name, format_real(r.mc_cost), format_real(r.ci_low), format_real(r.ci_high),
           std::to_string(r.n_trials)});
  }
  s.emit(t, "risk.csv");

  if (!cfg.risk.blowup_horizons.empty()) {
    const int h = *std::max_element(cfg.risk.blowup_horizons.begin(), cfg.risk.blowup_horizons.end());
    const auto curve = blowup_probe(risk_setup_from(cfg, h), cfg.risk.alpha, cfg.risk.blowup_horizons);
    CsvTable b({"horizon", "max_log_cost", "mean_cost"});
    for (const BlowupPoint& p : curve) {
      b.row({std::to_string(p.horizon), format_real(p.max_log_cost), format_real(p.mean_cost)});
    }
    s.emit(b, "blowup.csv");
  }

  const EstimatorResult& smd = rep.row("smd");
  const EstimatorResult& worst = rep.worst_baseline();
  const bool minimal = rep.smd_minimal();
  const bool separated = smd.ci_high < worst.ci_low;
  s.log() << "[mirrorkit] smd cost " << format_real(smd.mc_cost) << ", worst baseline " << worst.name
          << " " << format_real(worst.mc_cost) << "\n";
  return s.verdict(minimal && separated, "risk-sensitive optimality");
}

inline int cmd_implicit(Session& s) {
  const ExperimentConfig& cfg = s.cfg();
  const auto results = implicit_reg_experiment(cfg);
  CsvTable t({"case", "gap", "feasibility", "kkt_residual"});
  bool pass = true;
  for (const ImplicitResult& r : results) {
    t.row({std::to_string(r.case_index), format_real(r.gap), format_real(r.feasibility),
           format_real(r.kkt_residual)});
    pass = pass && r.gap <= cfg.tolerances.implicit_gap && r.feasibility < cfg.tolerances.feasibility &&
           r.kkt_residual <= cfg.tolerances.kkt && r.constraint_residual <= cfg.tolerances.kkt;
  }
  s.emit(t, "implicit.csv");
  return s.verdict(pass, "implicit regularization");
}

inline int cmd_converge(Session& s) {
  const ExperimentConfig& cfg = s.cfg();
  const ConvergeReport rm = msq_convergence(cfg);
  const ConvergeReport ctl = msq_constant_control(cfg);
  const auto table = [](const ConvergeReport& r) {
    CsvTable t({"checkpoint_T", "mean_sq_error"});
    for (const auto& [T, mse] : r.checkpoints) t.row({std::to_string(T), format_real(mse)});
    return t;
  };
  s.emit(table(rm), "converge.csv");
  s.emit(table(ctl), "converge_control.csv");
  const double first = rm.checkpoints.front().second;
  const double last = rm.checkpoints.back().second;
  const double plateau = ctl.checkpoints.back().second;
  s.log() << "[mirrorkit] E||w_T - w||^2: " << format_real(first) << " -> " << format_real(last)
          << " (constant-eta control " << format_real(plateau) << ")\n";
  return s.verdict(last <= 0.1 * first && last < plateau, "mean-square convergence");
}

inline int cmd_sample_check(Session& s) {
  const ExperimentConfig& cfg = s.cfg();
  ExpFamilySpec spec;
  spec.potential = cfg.potential;
  spec.center = default_w0(cfg);
  spec.scale = cfg.schedule.parameter();
  RngStream rng(cfg.seed, 0);
  RngStream weight_rng = rng.child(1);
  RngStream noise_rng = rng.child(2);
  const MirrorMeanReport wr = mirror_mean_check(spec, cfg.sample.n_samples, weight_rng);
  const MirrorMeanReport nr = noise_mirror_mean_check(cfg.loss, cfg.sample.n_samples, noise_rng);
  CsvTable t({"quantity", "coordinate", "mc_estimate", "target", "sigma_bound", "pass"});
  const auto add = [&](const std::string& q, const MirrorMeanReport& r) {
    for (Eigen::Index j = 0; j < r.mc_estimate.size(); ++j) {
      const bool ok = std::abs(r.mc_estimate[j] - r.target[j]) <= r.sigma_bound[j];
      t.row({q, std::to_string(j), format_real(r.mc_estimate[j]), format_real(r.target[j]),
             format_real(r.sigma_bound[j]), format_bool(ok)});
    }
  };
  add("weight", wr);
  add("noise", nr);
  s.emit(t, "sample_check.csv");
  return s.verdict(wr.pass && nr.pass, "sampler mirror-mean check");
}

} // namespace detail

inline int dispatch(const ExperimentConfig& cfg, const std::string& subcommand,
                    const DispatchOptions& opt = {}) {
  std::ostream& log = *opt.log;
  try {
    detail::Session s(cfg, opt);
    if (subcommand == "run") return detail::cmd_run(s);
    if (subcommand == "audit") return detail::cmd_audit(s);
    if (subcommand == "minimax") return detail::cmd_minimax(s);
    if (subcommand == "risk") return detail::cmd_risk(s);
    if (subcommand == "implicit") return detail::cmd_implicit(s);
    if (subcommand == "converge") return detail::cmd_converge(s);
    if (subcommand == "sample-check") return detail::cmd_sample_check(s);
    log << "[mirrorkit] error: unknown subcommand \"" << subcommand << "\"\n";
    return kExitError;
  } catch (const std::exception& e) {
    log << "[mirrorkit] error: " << e.what() << "\n";
    return kExitError;
  }
}

} // namespace mirrorkit
