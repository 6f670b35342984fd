#pragma once

// Strict JSON reader for ExperimentConfig. Unknown keys are rejected at every
// level, and every default that gets applied is reported to the log.
//
// Tagged unions are single-key objects; parameterless variants may also be
// given as a bare string:
//   "potential": "neg_entropy"  |  {"separable_q": {"q": 1.5}}
//   "model":     "linear"       |  {"glm": {"link": "tanh"}}
//   "schedule":  {"constant": {"eta": 0.1}}  |  {"robbins_monro": {"c": 1}}

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mirrorkit/experiment_config.hpp"

namespace mirrorkit {

namespace detail {

using json = nlohmann::json;

class ConfigReader {
public:
  explicit ConfigReader(std::vector<std::string>& defaults) : defaults_(defaults) {}

  static void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path + ": expected an object");
  }

  static void reject_unknown(const json& j, const std::string& path,
                             std::initializer_list<const char*> allowed) {
    require_object(j, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
      if (!ok.count(key)) {
        throw ParseError("unknown key \"" + key + "\"" + (path.empty() ? "" : " in " + path));
      }
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  bool has(const json& j, const std::string& path, const std::string& key) {
    if (j.contains(key)) return true;
    defaults_.push_back(join(path, key));
    return false;
  }

  double real(const json& j, const std::string& path, const std::string& key, double fallback) {
    if (!has(j, path, key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ParseError(join(path, key) + ": expected a number");
    return v.get<double>();
  }

  long long integer(const json& j, const std::string& path, const std::string& key, long long fallback) {
    if (!has(j, path, key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ParseError(join(path, key) + ": expected an integer");
    return v.get<long long>();
  }

  bool boolean(const json& j, const std::string& path, const std::string& key, bool fallback) {
    if (!has(j, path, key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ParseError(join(path, key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const json& j, const std::string& path, const std::string& key,
                     const std::string& fallback) {
    if (!has(j, path, key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) throw ParseError(join(path, key) + ": expected a string");
    return v.get<std::string>();
  }

  template <typename T>
  std::vector<T> list(const json& j, const std::string& path, const std::string& key,
                      const std::vector<T>& fallback) {
    if (!has(j, path, key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_array()) throw ParseError(join(path, key) + ": expected an array");
    std::vector<T> out;
    for (const json& e : v) {
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw ParseError(join(path, key) + ": expected integers");
      } else {
        if (!e.is_number()) throw ParseError(join(path, key) + ": expected numbers");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  /// Splits a tagged union into (tag, payload).
  static std::pair<std::string, json> variant(const json& v, const std::string& path) {
    if (v.is_string()) return {v.get<std::string>(), json::object()};
    if (!v.is_object() || v.size() != 1) {
      throw ParseError(path + ": expected a string or a single-key object");
    }
    return {v.begin().key(), v.begin().value()};
  }

private:
  std::vector<std::string>& defaults_;
};

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text, std::ostream* log = nullptr) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at " + detail::line_col(text, e.byte) + ": " + e.what());
  }

  ExperimentConfig cfg;
  detail::ConfigReader rd(cfg.applied_defaults);
  detail::ConfigReader::reject_unknown(
      root, "",
      {"algorithm", "potential", "loss", "model", "schedule", "dim", "T", "n_trials", "seed",
       "delta_pe", "tolerances", "output_dir", "data", "risk", "implicit", "converge", "sample"});

  const std::string alg = rd.string(root, "", "algorithm", "smd");
  if (alg == "smd") cfg.algorithm = Algorithm::Smd;
  else if (alg == "ssmd") cfg.algorithm = Algorithm::Ssmd;
  else if (alg == "sgd") cfg.algorithm = Algorithm::Sgd;
  else throw ValidationError("algorithm must be one of smd, ssmd, sgd (got \"" + alg + "\")");

  const long long dim = rd.integer(root, "", "dim", 4);
  if (dim <= 0 || dim > 1000000) throw ValidationError("dim must be > 0");
  cfg.dim = static_cast<int>(dim);

  if (rd.has(root, "", "potential")) {
    const auto [tag, body] = detail::ConfigReader::variant(root.at("potential"), "potential");
    if (tag == "squared_l2" || tag == "neg_entropy") {
      if (!body.empty()) throw ParseError("potential." + tag + " takes no parameters");
      cfg.potential = tag == "squared_l2" ? Potential::squared_l2(cfg.dim) : Potential::neg_entropy(cfg.dim);
    } else if (tag == "separable_q") {
      detail::ConfigReader::reject_unknown(body, "potential.separable_q", {"q"});
      if (!body.contains("q") || !body.at("q").is_number()) {
        throw ParseError("potential.separable_q.q: expected a number");
      }
      const double q = body.at("q").get<double>();
      if (!(q > 1.0)) throw ValidationError("potential.separable_q.q must be > 1");
      cfg.potential = Potential::separable_q(cfg.dim, q);
    } else {
      throw ValidationError("potential must be squared_l2, neg_entropy or separable_q (got \"" + tag + "\")");
    }
  } else {
    cfg.potential = Potential::squared_l2(cfg.dim);
  }

  const std::string loss = rd.string(root, "", "loss", "quadratic");
  if (loss == "quadratic") cfg.loss = LossFn::quadratic();
  else if (loss == "quartic") cfg.loss = LossFn::quartic();
  else if (loss == "logcosh") cfg.loss = LossFn::logcosh();
  else throw ValidationError("loss must be one of quadratic, quartic, logcosh (got \"" + loss + "\")");

  if (rd.has(root, "", "model")) {
    const auto [tag, body] = detail::ConfigReader::variant(root.at("model"), "model");
    if (tag == "linear") {
      if (!body.empty()) throw ParseError("model.linear takes no parameters");
      cfg.model = Model::linear();
    } else if (tag == "glm") {
      detail::ConfigReader::reject_unknown(body, "model.glm", {"link"});
      const std::string link = body.value("link", std::string("tanh"));
      if (link == "tanh") cfg.model = Model::glm(Link::Tanh);
      else if (link == "softplus") cfg.model = Model::glm(Link::Softplus);
      else throw ValidationError("model.glm.link must be tanh or softplus");
    } else {
      throw ValidationError("model must be linear or glm (got \"" + tag + "\")");
    }
  }

  if (rd.has(root, "", "schedule")) {
    const auto [tag, body] = detail::ConfigReader::variant(root.at("schedule"), "schedule");
    if (tag == "constant") {
      detail::ConfigReader::reject_unknown(body, "schedule.constant", {"eta"});
      if (!body.contains("eta") || !body.at("eta").is_number()) {
        throw ParseError("schedule.constant.eta: expected a number");
      }
      cfg.schedule = StepSchedule::constant(body.at("eta").get<double>());
    } else if (tag == "robbins_monro") {
      detail::ConfigReader::reject_unknown(body, "schedule.robbins_monro", {"c"});
      if (!body.contains("c") || !body.at("c").is_number()) {
        throw ParseError("schedule.robbins_monro.c: expected a number");
      }
      cfg.schedule = StepSchedule::robbins_monro(body.at("c").get<double>());
    } else {
      throw ValidationError("schedule must be constant or robbins_monro (got \"" + tag + "\")");
    }
  }

  const long long T = rd.integer(root, "", "T", cfg.T);
  if (T < 0 || T > 100000000) throw ValidationError("T must be >= 0");
  cfg.T = static_cast<int>(T);
  const long long n_trials = rd.integer(root, "", "n_trials", cfg.n_trials);
  if (n_trials <= 0 || n_trials > 100000000) throw ValidationError("n_trials must be > 0");
  cfg.n_trials = static_cast<int>(n_trials);
  if (rd.has(root, "", "seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned()) throw ParseError("seed: expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.delta_pe = rd.real(root, "", "delta_pe", cfg.delta_pe);
  cfg.output_dir = rd.string(root, "", "output_dir", cfg.output_dir);

  if (rd.has(root, "", "tolerances")) {
    const json& t = root.at("tolerances");
    detail::ConfigReader::reject_unknown(t, "tolerances", {"identity", "minimax", "implicit_gap", "feasibility", "kkt"});
    cfg.tolerances.identity = rd.real(t, "tolerances", "identity", cfg.tolerances.identity);
    cfg.tolerances.minimax = rd.real(t, "tolerances", "minimax", cfg.tolerances.minimax);
    cfg.tolerances.implicit_gap = rd.real(t, "tolerances", "implicit_gap", cfg.tolerances.implicit_gap);
    cfg.tolerances.feasibility = rd.real(t, "tolerances", "feasibility", cfg.tolerances.feasibility);
    cfg.tolerances.kkt = rd.real(t, "tolerances", "kkt", cfg.tolerances.kkt);
  }

  if (rd.has(root, "", "data")) {
    const json& d = root.at("data");
    detail::ConfigReader::reject_unknown(d, "data", {"n_points", "noise_std", "shuffle", "w0"});
    cfg.data.n_points = static_cast<int>(rd.integer(d, "data", "n_points", cfg.data.n_points));
    cfg.data.noise_std = rd.real(d, "data", "noise_std", cfg.data.noise_std);
    cfg.data.shuffle = rd.boolean(d, "data", "shuffle", cfg.data.shuffle);
    if (d.contains("w0")) cfg.data.w0 = rd.list<double>(d, "data", "w0", {});
  }

  if (rd.has(root, "", "risk")) {
    const json& r = root.at("risk");
    detail::ConfigReader::reject_unknown(r, "risk", {"gammas", "bootstrap_resamples", "alpha", "blowup_horizons",
                                                     "allow_uncertified", "risk_neutral"});
    cfg.risk.gammas = rd.list<double>(r, "risk", "gammas", cfg.risk.gammas);
    cfg.risk.bootstrap_resamples = static_cast<int>(rd.integer(r, "risk", "bootstrap_resamples", cfg.risk.bootstrap_resamples));
    cfg.risk.alpha = rd.real(r, "risk", "alpha", cfg.risk.alpha);
    cfg.risk.blowup_horizons = rd.list<int>(r, "risk", "blowup_horizons", cfg.risk.blowup_horizons);
    cfg.risk.allow_uncertified = rd.boolean(r, "risk", "allow_uncertified", cfg.risk.allow_uncertified);
    cfg.risk.risk_neutral = rd.boolean(r, "risk", "risk_neutral", cfg.risk.risk_neutral);
  }

  if (rd.has(root, "", "implicit")) {
    const json& m = root.at("implicit");
    detail::ConfigReader::reject_unknown(m, "implicit", {"rows", "cases", "step_cap", "sparsity"});
    cfg.implicit.rows = static_cast<int>(rd.integer(m, "implicit", "rows", cfg.implicit.rows));
    cfg.implicit.cases = static_cast<int>(rd.integer(m, "implicit", "cases", cfg.implicit.cases));
    cfg.implicit.step_cap = rd.integer(m, "implicit", "step_cap", cfg.implicit.step_cap);
    cfg.implicit.sparsity = static_cast<int>(rd.integer(m, "implicit", "sparsity", cfg.implicit.sparsity));
  }

  if (rd.has(root, "", "converge")) {
    const json& c = root.at("converge");
    detail::ConfigReader::reject_unknown(c, "converge", {"n_runs", "checkpoints", "noise", "sigma2", "control_eta"});
    cfg.converge.n_runs = static_cast<int>(rd.integer(c, "converge", "n_runs", cfg.converge.n_runs));
    cfg.converge.checkpoints = rd.list<long long>(c, "converge", "checkpoints", cfg.converge.checkpoints);
    const std::string noise = rd.string(c, "converge", "noise", "gaussian");
    if (noise == "gaussian") cfg.converge.noise = NoiseLaw::Gaussian;
    else if (noise == "uniform") cfg.converge.noise = NoiseLaw::Uniform;
    else if (noise == "rademacher") cfg.converge.noise = NoiseLaw::Rademacher;
    else throw ValidationError("converge.noise must be gaussian, uniform or rademacher");
    cfg.converge.sigma2 = rd.real(c, "converge", "sigma2", cfg.converge.sigma2);
    cfg.converge.control_eta = rd.real(c, "converge", "control_eta", cfg.converge.control_eta);
  }

  if (rd.has(root, "", "sample")) {
    const json& s = root.at("sample");
    detail::ConfigReader::reject_unknown(s, "sample", {"n_samples"});
    cfg.sample.n_samples = rd.integer(s, "sample", "n_samples", cfg.sample.n_samples);
  }

  cfg.validate();
  if (log) {
    for (const std::string& f : cfg.applied_defaults) *log << "[mirrorkit] default applied: " << f << "\n";
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path, std::ostream* log = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str(), log);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

} // namespace mirrorkit
