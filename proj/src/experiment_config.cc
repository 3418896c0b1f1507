#include "sparse_lq/experiment_config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "sparse_lq/errors.h"
#include "sparse_lq/riccati.h"
#include "sparse_lq/rng.h"

namespace sparse_lq {

namespace {

using nlohmann::json;

constexpr int kMaxDimension = 10;
constexpr int kMaxSparsity = 3;
constexpr std::int64_t kMaxHorizon = 1000000;

// Seed-stream tags for derived quantities that are not per-trial.
constexpr std::uint64_t kProfileStream = 0xE11;
constexpr std::uint64_t kJStarStream = 0x5117;

void RejectUnknown(const json& obj, const std::set<std::string>& allowed,
                   const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

// Integer, or the string "paper" / "auto" meaning "derive it".
std::optional<std::int64_t> ReadCount(const json& obj, const char* key,
                                      const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (v.is_string()) {
    if (v == "paper" || v == "auto") return std::nullopt;
    throw ConfigError(where + "." + key + ": expected an integer or \"paper\"");
  }
  if (!v.is_number_integer()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return v.get<std::int64_t>();
}

}  // namespace

json MatrixToJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw ConfigError(what + ": expected a nonempty array of rows");
  }
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ConfigError(what + ": rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw ConfigError(what + ": entries must be numbers");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

ExperimentConfig ConfigFromJson(const json& doc) {
  ExperimentConfig c;
  RejectUnknown(doc, {"system", "cost", "initial_gain", "algorithm", "run",
                      "estimation"},
                "config");
  if (doc.contains("system")) {
    const json& s = doc["system"];
    RejectUnknown(s, {"p", "r", "k", "spectral_target", "generation_seed", "a", "b"},
                  "system");
    Read(s, "p", c.system.p, "system");
    Read(s, "r", c.system.r, "system");
    Read(s, "k", c.system.k, "system");
    Read(s, "spectral_target", c.system.spectral_target, "system");
    Read(s, "generation_seed", c.system.generation_seed, "system");
    if (s.contains("a") != s.contains("b")) {
      throw ConfigError("system: give both a and b or neither");
    }
    if (s.contains("a")) {
      c.system.a = MatrixFromJson(s["a"], "system.a");
      c.system.b = MatrixFromJson(s["b"], "system.b");
      c.system.p = static_cast<int>(c.system.a->rows());
      c.system.r = static_cast<int>(c.system.b->cols());
    }
  }
  if (doc.contains("cost")) {
    const json& s = doc["cost"];
    RejectUnknown(s, {"q", "r"}, "cost");
    if (s.contains("q")) c.q_mat = MatrixFromJson(s["q"], "cost.q");
    if (s.contains("r")) c.r_mat = MatrixFromJson(s["r"], "cost.r");
  }
  if (doc.contains("initial_gain")) {
    const json& s = doc["initial_gain"];
    RejectUnknown(s, {"source", "scale", "l"}, "initial_gain");
    Read(s, "source", c.initial_gain.source, "initial_gain");
    Read(s, "scale", c.initial_gain.scale, "initial_gain");
    if (s.contains("l")) c.initial_gain.l = MatrixFromJson(s["l"], "initial_gain.l");
  }
  if (doc.contains("algorithm")) {
    const json& s = doc["algorithm"];
    RejectUnknown(s, {"eps", "delta", "ell", "profile_samples", "n0", "n1", "ofu"},
                  "algorithm");
    Read(s, "eps", c.eps, "algorithm");
    Read(s, "delta", c.delta, "algorithm");
    if (s.contains("ell")) {
      if (s["ell"].is_string()) {
        if (s["ell"] != "auto") throw ConfigError("algorithm.ell: number or \"auto\"");
      } else {
        double ell = 0.0;
        Read(s, "ell", ell, "algorithm");
        c.ell = ell;
      }
    }
    Read(s, "profile_samples", c.profile_samples, "algorithm");
    c.n0 = ReadCount(s, "n0", "algorithm");
    c.n1 = ReadCount(s, "n1", "algorithm");
    if (s.contains("ofu")) {
      const json& o = s["ofu"];
      RejectUnknown(o, {"starts", "iterations", "initial_step_fraction",
                        "max_halvings", "finite_difference"},
                    "algorithm.ofu");
      Read(o, "starts", c.ofu.starts, "algorithm.ofu");
      Read(o, "iterations", c.ofu.iterations, "algorithm.ofu");
      Read(o, "initial_step_fraction", c.ofu.initial_step_fraction, "algorithm.ofu");
      Read(o, "max_halvings", c.ofu.max_halvings, "algorithm.ofu");
      Read(o, "finite_difference", c.ofu.finite_difference, "algorithm.ofu");
    }
  }
  if (doc.contains("run")) {
    const json& s = doc["run"];
    RejectUnknown(s, {"horizon", "horizons", "trials", "seed", "mode", "out_dir",
                      "threads", "allow_large", "allow_uncertified",
                      "j_star_source", "j_star_steps"},
                  "run");
    Read(s, "horizon", c.horizon, "run");
    Read(s, "horizons", c.horizons, "run");
    Read(s, "trials", c.trials, "run");
    Read(s, "seed", c.seed, "run");
    if (s.contains("mode")) {
      std::string mode;
      Read(s, "mode", mode, "run");
      c.mode = ParseControlMode(mode);
    }
    Read(s, "out_dir", c.out_dir, "run");
    Read(s, "threads", c.threads, "run");
    Read(s, "allow_large", c.allow_large, "run");
    Read(s, "allow_uncertified", c.allow_uncertified, "run");
    Read(s, "j_star_source", c.j_star_source, "run");
    Read(s, "j_star_steps", c.j_star_steps, "run");
  }
  if (doc.contains("estimation")) {
    const json& s = doc["estimation"];
    RejectUnknown(s, {"n_grid", "eps"}, "estimation");
    Read(s, "n_grid", c.estimation.n_grid, "estimation");
    if (s.contains("eps")) {
      double eps = 0.0;
      Read(s, "eps", eps, "estimation");
      c.estimation.eps = eps;
    }
  }
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return ConfigFromJson(doc);
}

json ConfigToJson(const ExperimentConfig& c) {
  json doc;
  json system = {{"p", c.system.p},
                 {"r", c.system.r},
                 {"k", c.system.k},
                 {"spectral_target", c.system.spectral_target},
                 {"generation_seed", c.system.generation_seed}};
  if (c.system.a) {
    system["a"] = MatrixToJson(*c.system.a);
    system["b"] = MatrixToJson(*c.system.b);
  }
  doc["system"] = system;
  json cost = json::object();
  if (c.q_mat) cost["q"] = MatrixToJson(*c.q_mat);
  if (c.r_mat) cost["r"] = MatrixToJson(*c.r_mat);
  doc["cost"] = cost;
  json gain = {{"source", c.initial_gain.source}, {"scale", c.initial_gain.scale}};
  if (c.initial_gain.l) gain["l"] = MatrixToJson(*c.initial_gain.l);
  doc["initial_gain"] = gain;
  doc["algorithm"] = {
      {"eps", c.eps},
      {"delta", c.delta},
      {"ell", c.ell ? json(*c.ell) : json("auto")},
      {"profile_samples", c.profile_samples},
      {"n0", c.n0 ? json(*c.n0) : json("paper")},
      {"n1", c.n1 ? json(*c.n1) : json("paper")},
      {"ofu",
       {{"starts", c.ofu.starts},
        {"iterations", c.ofu.iterations},
        {"initial_step_fraction", c.ofu.initial_step_fraction},
        {"max_halvings", c.ofu.max_halvings},
        {"finite_difference", c.ofu.finite_difference}}}};
  doc["run"] = {{"horizon", c.horizon},
                {"horizons", c.horizons},
                {"trials", c.trials},
                {"seed", c.seed},
                {"mode", ToString(c.mode)},
                {"out_dir", c.out_dir},
                {"threads", c.threads},
                {"allow_large", c.allow_large},
                {"allow_uncertified", c.allow_uncertified},
                {"j_star_source", c.j_star_source},
                {"j_star_steps", c.j_star_steps}};
  json estimation = {{"n_grid", c.estimation.n_grid}};
  if (c.estimation.eps) estimation["eps"] = *c.estimation.eps;
  doc["estimation"] = estimation;
  return doc;
}

void ValidateConfig(const ExperimentConfig& c) {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const SystemSpec& s = c.system;
  check(s.p >= 1 && s.r >= 1, "system: p and r must be positive");
  check(s.k >= 1 && s.k <= s.p + s.r, "system: need 1 <= k <= p + r");
  if (s.a) {
    check(s.a->rows() == s.a->cols(), "system.a must be square");
    check(s.b->rows() == s.a->rows(), "system.b must have p rows");
  } else {
    check(s.spectral_target > 0.0 && s.spectral_target < 1.0,
          "system.spectral_target must lie in (0, 1)");
  }
  check(c.eps > 0.0, "algorithm.eps must be positive");
  check(c.delta > 0.0 && c.delta < 1.0, "algorithm.delta must lie in (0, 1)");
  check(!c.ell || *c.ell >= 1.0, "algorithm.ell must be at least 1");
  check(c.profile_samples >= 0, "algorithm.profile_samples must be >= 0");
  check(!c.n0 || *c.n0 >= 1, "algorithm.n0 must be at least 1");
  check(!c.n1 || *c.n1 >= 1, "algorithm.n1 must be at least 1");
  check(c.ofu.starts >= 1 && c.ofu.iterations >= 0 && c.ofu.max_halvings >= 0,
        "algorithm.ofu: starts >= 1, iterations >= 0, max_halvings >= 0");
  check(c.ofu.initial_step_fraction > 0.0,
        "algorithm.ofu.initial_step_fraction must be positive");
  check(c.horizon >= 1, "run.horizon must be at least 1");
  for (std::int64_t h : c.horizons) {
    check(h >= 1 && h <= c.horizon, "run.horizons must lie in [1, horizon]");
  }
  check(c.trials >= 1, "run.trials must be at least 1");
  check(c.threads >= 0, "run.threads must be >= 0");
  check(c.j_star_source == "riccati" || c.j_star_source == "simulated",
        "run.j_star_source must be \"riccati\" or \"simulated\"");
  check(c.j_star_steps >= 1, "run.j_star_steps must be positive");
  check(c.initial_gain.source == "optimal" || c.initial_gain.source == "zero" ||
            c.initial_gain.source == "matrix",
        "initial_gain.source must be optimal, zero or matrix");
  check(c.initial_gain.source != "matrix" || c.initial_gain.l.has_value(),
        "initial_gain.source = matrix needs initial_gain.l");
  for (std::int64_t n : c.estimation.n_grid) {
    check(n >= 2, "estimation.n_grid entries must be at least 2");
  }
  check(!c.estimation.eps || *c.estimation.eps > 0.0,
        "estimation.eps must be positive");
  if (!c.allow_large) {
    std::ostringstream msg;
    msg << "exceeds desk-scale limits (p <= " << kMaxDimension
        << ", k <= " << kMaxSparsity << ", T <= " << kMaxHorizon
        << "); pass --allow-large to override";
    check(s.p <= kMaxDimension, "system.p " + msg.str());
    check(s.k <= kMaxSparsity, "system.k " + msg.str());
    check(c.horizon <= kMaxHorizon, "run.horizon " + msg.str());
  }
}

AdaptiveConfig ResolvedExperiment::ToAdaptiveConfig() const {
  AdaptiveConfig a;
  a.theta0 = theta0;
  a.cost = cost;
  a.initial_gain = initial_gain;
  a.k = config.system.k;
  a.eps = config.eps;
  a.delta = config.delta;
  a.ell = ell;
  a.alpha = certificate.alpha > 0.0 ? std::min(certificate.alpha, 1.0) : 1.0;
  a.rho = certificate.rho < 1.0 ? certificate.rho : 0.0;
  a.horizon = config.horizon;
  a.n0 = n0;
  a.n1 = n1;
  a.mode = config.mode;
  a.ofu = config.ofu;
  a.j_star = j_star;
  return a;
}

ResolvedExperiment Resolve(const ExperimentConfig& config) {
  ValidateConfig(config);
  ResolvedExperiment out;
  out.config = config;
  const SystemSpec& s = config.system;

  if (s.a) {
    out.theta0 = InteractionMatrix(*s.a, *s.b);
    if (!out.theta0.IsKSparse(s.k)) {
      throw ConfigError("system: the given matrices are not k-sparse");
    }
  } else {
    CounterRng rng(s.generation_seed);
    out.theta0 = GenerateSparseSystem(s.p, s.r, s.k, s.spectral_target, rng);
  }
  const int p = out.theta0.p();
  const int r = out.theta0.r();
  out.cost = CostMatrices(config.q_mat.value_or(Eigen::MatrixXd::Identity(p, p)),
                          config.r_mat.value_or(Eigen::MatrixXd::Identity(r, r)));
  const RiccatiSolution optimal = SolveRiccati(out.theta0, out.cost);

  const InitialGainSpec& g = config.initial_gain;
  if (g.source == "optimal") {
    out.initial_gain = FeedbackGain(g.scale * optimal.gain.l);
  } else if (g.source == "zero") {
    out.initial_gain = FeedbackGain::Zero(r, p);
  } else {
    if (g.l->rows() != r || g.l->cols() != p) {
      throw ConfigError("initial_gain.l must be r x p");
    }
    out.initial_gain = FeedbackGain(*g.l);
  }

  out.certificate = Certify(out.theta0, out.initial_gain, s.k);
  const bool certified = out.certificate.valid();
  if (!certified) {
    std::ostringstream msg;
    msg << "initial gain is not identifiable (rho = " << out.certificate.rho
        << ", C_min = " << out.certificate.c_min
        << ", alpha = " << out.certificate.alpha << ")";
    if (!config.allow_uncertified) {
      throw ConfigError(msg.str() + "; set run.allow_uncertified to proceed");
    }
    out.warnings.push_back(msg.str());
  }

  out.ell0 = out.initial_gain.RowNormBound();
  if (config.ell) {
    out.ell = *config.ell;
  } else {
    CounterRng rng(DeriveSeed(config.seed, kProfileStream));
    const AssumptionProfile profile = ProfileAssumption(
        out.theta0, out.cost, config.eps, config.profile_samples, s.k, rng);
    out.ell = profile.ell_theta_eps;
    if (!profile.non_identifiable.empty()) {
      out.warnings.push_back(
          std::to_string(profile.non_identifiable.size()) +
          " sampled neighbors have non-identifiable optimal gains");
    }
  }

  if (!config.n0 || !config.n1) {
    if (!certified) {
      throw ConfigError("algorithm.n0/n1 = \"paper\" need a certified initial gain");
    }
    const auto& c = out.certificate;
    const int q = out.theta0.q();
    if (!config.n0) {
      out.n0 = InitialEpisodeLength(s.k, out.ell0, c.alpha, c.rho, c.c_min,
                                    config.eps, config.delta, q)
                   .n;
    }
    if (!config.n1) {
      out.n1 = SteadyEpisodeLength(s.k, out.ell, c.rho, c.c_min, config.eps,
                                   config.delta, q)
                   .n;
    }
  }
  if (config.n0) out.n0 = *config.n0;
  if (config.n1) out.n1 = *config.n1;
  if (config.horizon < out.n0) {
    out.warnings.push_back("horizon is shorter than n0; no estimation will run");
  }

  if (config.j_star_source == "riccati") {
    out.j_star = optimal.k_mat.trace();
  } else {
    GaussianNoise noise(DeriveSeed(config.seed, kJStarStream));
    const Trajectory traj = Rollout(out.theta0, optimal.gain, out.cost,
                                    config.j_star_steps, noise);
    out.j_star = traj.costs.mean();
  }
  return out;
}

}  // namespace sparse_lq
