#pragma once

// Scenario configuration (flat key = value text), presets for the Zachary
// experiments, and the runner that writes trajectory/control CSVs and a
// key=value summary.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hkgame/errors.hpp"
#include "hkgame/graph.hpp"
#include "hkgame/openloop.hpp"
#include "hkgame/receding.hpp"
#include "hkgame/verify.hpp"

namespace hkgame {

enum class ScenarioMode {
  kBaseline,
  kOpenLoopNonStubborn,
  kOpenLoopStubborn,
  kRecedingFixed,
  kRecedingComplete,
  kRecedingSecond,
};

inline const char* mode_name(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::kBaseline: return "baseline";
    case ScenarioMode::kOpenLoopNonStubborn: return "openloop-nonstubborn";
    case ScenarioMode::kOpenLoopStubborn: return "openloop-stubborn";
    case ScenarioMode::kRecedingFixed: return "rh-fixed";
    case ScenarioMode::kRecedingComplete: return "rh-complete";
    case ScenarioMode::kRecedingSecond: return "rh-second";
  }
  return "?";
}

inline std::optional<ScenarioMode> parse_mode(std::string_view s) {
  for (ScenarioMode m : {ScenarioMode::kBaseline, ScenarioMode::kOpenLoopNonStubborn,
                         ScenarioMode::kOpenLoopStubborn, ScenarioMode::kRecedingFixed,
                         ScenarioMode::kRecedingComplete, ScenarioMode::kRecedingSecond}) {
    if (s == mode_name(m)) return m;
  }
  return std::nullopt;
}

inline bool is_receding(ScenarioMode m) {
  return m == ScenarioMode::kBaseline || m == ScenarioMode::kRecedingFixed ||
         m == ScenarioMode::kRecedingComplete || m == ScenarioMode::kRecedingSecond;
}

inline NeighborMode neighbor_mode(ScenarioMode m) {
  if (m == ScenarioMode::kRecedingComplete) return NeighborMode::kComplete;
  if (m == ScenarioMode::kRecedingSecond) return NeighborMode::kSecondNeighborhood;
  return NeighborMode::kFixed;
}

inline std::optional<NeighborMode> parse_neighbor_mode(std::string_view s) {
  if (s == "fixed") return NeighborMode::kFixed;
  if (s == "complete") return NeighborMode::kComplete;
  if (s == "second") return NeighborMode::kSecondNeighborhood;
  return std::nullopt;
}

struct ScenarioConfig {
  std::string graph = "builtin:zachary";
  ScenarioMode mode = ScenarioMode::kBaseline;
  double t_f = 10.0;
  double tau = 0.0;
  double sigma = 1.0;
  double dt = 0.01;
  std::optional<double> total_time;  // default: t_f
  std::vector<double> r{1.0};
  std::vector<double> b{1.0};
  std::vector<double> omega{0.0};
  std::vector<double> eps{2.0};
  bool eps_minimal = false;  // eps = min
  std::string x0 = "uniform";  // uniform | comma list | file:PATH
  bool eps_autogrow = false;
  std::uint64_t seed = 1;
  std::string out = "out";
  double consensus_tol = kConsensusTol;
  double cluster_tol = kClusterTol;
  std::size_t verify_perturbations = 5;
  double verify_dt = 1e-3;

  double horizon_total() const { return total_time.value_or(t_f); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_number(const std::string& field, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(field, "not a number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(v)) throw ConfigError(field, "value must be finite");
  return v;
}

inline std::vector<double> parse_numbers(const std::string& field, std::string_view text) {
  std::vector<double> out;
  std::string normalized(text);
  std::replace(normalized.begin(), normalized.end(), '\t', ' ');
  std::replace(normalized.begin(), normalized.end(), '\n', ' ');
  if (normalized.find(',') != std::string::npos) {
    std::istringstream in(normalized);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(parse_number(field, tok));
    if (!normalized.empty() && normalized.back() == ',') parse_number(field, "");
    return out;
  }
  std::istringstream in(normalized);
  std::string tok;
  while (in >> tok) out.push_back(parse_number(field, tok));
  if (out.empty()) throw ConfigError(field, "expected at least one number");
  return out;
}

inline bool parse_bool(const std::string& field, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(field, "expected true or false");
}

inline std::size_t parse_count(const std::string& field, std::string_view text) {
  text = trim(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(field, "expected a non-negative integer");
  }
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("file", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// Sets one field from its textual value; used by the file parser and by
// command-line overrides.
inline void set_config_field(ScenarioConfig& cfg, const std::string& key,
                             std::string_view raw) {
  using namespace detail;
  const std::string_view value = trim(raw);
  if (key == "graph") {
    if (value.empty()) throw ConfigError(key, "empty graph source");
    cfg.graph = std::string(value);
  } else if (key == "mode") {
    const auto m = parse_mode(value);
    if (!m) throw ConfigError(key, "unknown mode '" + std::string(value) + "'");
    cfg.mode = *m;
  } else if (key == "t_f") {
    cfg.t_f = parse_number(key, value);
  } else if (key == "tau") {
    cfg.tau = parse_number(key, value);
  } else if (key == "sigma") {
    cfg.sigma = parse_number(key, value);
  } else if (key == "dt") {
    cfg.dt = parse_number(key, value);
  } else if (key == "total_time") {
    cfg.total_time = parse_number(key, value);
  } else if (key == "r") {
    cfg.r = parse_numbers(key, value);
  } else if (key == "b") {
    cfg.b = parse_numbers(key, value);
  } else if (key == "omega") {
    cfg.omega = parse_numbers(key, value);
  } else if (key == "eps") {
    if (value == "min") {
      cfg.eps_minimal = true;
    } else {
      cfg.eps = parse_numbers(key, value);
      cfg.eps_minimal = false;
    }
  } else if (key == "x0") {
    if (value.empty()) throw ConfigError(key, "empty x0 policy");
    if (value != "uniform" && value.substr(0, 5) != "file:") parse_numbers(key, value);
    cfg.x0 = std::string(value);
  } else if (key == "eps_autogrow") {
    cfg.eps_autogrow = parse_bool(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_count(key, value);
  } else if (key == "out") {
    if (value.empty()) throw ConfigError(key, "empty output directory");
    cfg.out = std::string(value);
  } else if (key == "consensus_tol") {
    cfg.consensus_tol = parse_number(key, value);
  } else if (key == "cluster_tol") {
    cfg.cluster_tol = parse_number(key, value);
  } else if (key == "verify_perturbations") {
    cfg.verify_perturbations = parse_count(key, value);
  } else if (key == "verify_dt") {
    cfg.verify_dt = parse_number(key, value);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

// Grammar: one "key = value" per line; '#' starts a comment; blank lines
// are ignored; later assignments win.
inline ScenarioConfig parse_config(std::string_view text, ScenarioConfig cfg = {}) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "missing key");
    set_config_field(cfg, key, line.substr(eq + 1));
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  return parse_config(detail::read_file(path));
}

// -1 + k s, s = round(200/n)/100 when that fits in [-1, 1), otherwise 2/n.
inline Eigen::VectorXd uniform_opinions(std::size_t n) {
  const double nd = static_cast<double>(n);
  double spacing = std::round(200.0 / nd) / 100.0;
  if (!(spacing >= 0.01) || !((nd - 1.0) * spacing < 2.0)) spacing = 2.0 / nd;
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i)) = -1.0 + static_cast<double>(i) * spacing;
  }
  return x;
}

// Smallest eps on the 0.01 grid in (0, 2] for which every agent keeps a
// neighbor at x0.
inline double min_connectivity_eps(const SocialGraph& g, const Eigen::VectorXd& x0,
                                   NeighborMode mode) {
  if (!x0.allFinite()) throw NonFiniteError("x0 has non-finite entries");
  for (int k = 1; k <= 200; ++k) {
    const double eps = k / 100.0;
    try {
      confidence_filter(g, x0, eps, mode);
      return eps;
    } catch (const EmptyNeighborhoodError&) {
    }
  }
  throw NoFeasibleEpsError("no eps <= 2 keeps every neighborhood non-empty");
}

struct ResolvedScenario {
  ScenarioConfig config;
  SocialGraph graph;
  GameParams params;
  HorizonConfig horizon;
};

inline SocialGraph load_graph_source(const std::string& source) {
  if (source == "builtin:zachary") return zachary();
  try {
    return load_edge_list(detail::read_file(source));
  } catch (const ConfigError& e) {
    throw ConfigError("graph", e.what());
  } catch (const Error& e) {
    throw ConfigError("graph", std::string(source) + ": " + e.what());
  }
}

namespace detail {

inline Eigen::VectorXd broadcast(const std::string& field, const std::vector<double>& v,
                                 std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  if (v.size() == 1) return Eigen::VectorXd::Constant(nn, v[0]);
  if (v.size() != n) {
    throw ConfigError(field, "expected 1 or " + std::to_string(n) + " values, got " +
                                 std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), nn);
}

}  // namespace detail

inline ResolvedScenario resolve_scenario(const ScenarioConfig& cfg) {
  SocialGraph g = load_graph_source(cfg.graph);
  const std::size_t n = g.size();

  Eigen::VectorXd x0;
  if (cfg.x0 == "uniform") {
    x0 = uniform_opinions(n);
  } else if (cfg.x0.rfind("file:", 0) == 0) {
    x0 = detail::broadcast("x0", detail::parse_numbers("x0", detail::read_file(cfg.x0.substr(5))), n);
  } else {
    x0 = detail::broadcast("x0", detail::parse_numbers("x0", cfg.x0), n);
  }
  if (static_cast<std::size_t>(x0.size()) != n) throw ConfigError("x0", "length mismatch");

  if (!(cfg.t_f > 0.0)) throw ConfigError("t_f", "must be > 0");
  if (!(cfg.tau >= 0.0 && cfg.tau < cfg.t_f)) throw ConfigError("tau", "must satisfy 0 <= tau < t_f");
  if (!(cfg.dt > 0.0 && cfg.dt <= cfg.t_f)) throw ConfigError("dt", "must satisfy 0 < dt <= t_f");
  if (!(cfg.consensus_tol > 0.0)) throw ConfigError("consensus_tol", "must be > 0");
  if (!(cfg.cluster_tol > 0.0)) throw ConfigError("cluster_tol", "must be > 0");
  if (!(cfg.verify_dt > 0.0)) throw ConfigError("verify_dt", "must be > 0");

  GameParams p;
  p.t_f = cfg.t_f;
  p.tau = cfg.tau;
  p.x0 = x0;
  p.r = detail::broadcast("r", cfg.r, n);
  p.b = detail::broadcast("b", cfg.b, n);
  p.omega = detail::broadcast("omega", cfg.omega, n);
  for (Eigen::Index i = 0; i < p.r.size(); ++i) {
    if (!(p.r(i) > 0.0)) throw ConfigError("r", "entries must be > 0");
    if (p.b(i) == 0.0) throw ConfigError("b", "entries must be nonzero");
    if (!(p.omega(i) >= 0.0 && p.omega(i) <= 1.0)) throw ConfigError("omega", "entries must lie in [0, 1]");
  }

  HorizonConfig h;
  h.sigma = cfg.sigma;
  h.mode = neighbor_mode(cfg.mode);
  h.total_time = cfg.horizon_total();
  h.dt = cfg.dt;
  h.eps_autogrow = cfg.eps_autogrow;
  h.controlled = cfg.mode != ScenarioMode::kBaseline;
  if (cfg.eps_minimal) {
    try {
      h.eps = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                        min_connectivity_eps(g, x0, h.mode));
    } catch (const NoFeasibleEpsError& e) {
      throw ConfigError("eps", e.what());
    }
  } else {
    h.eps = detail::broadcast("eps", cfg.eps, n);
  }
  for (Eigen::Index i = 0; i < h.eps.size(); ++i) {
    if (!(h.eps(i) > 0.0)) throw ConfigError("eps", "entries must be > 0");
  }

  if (is_receding(cfg.mode)) {
    if (h.controlled && !(cfg.sigma > cfg.tau && cfg.sigma <= cfg.t_f)) {
      throw ConfigError("sigma", "must satisfy tau < sigma <= t_f");
    }
    if (!h.controlled && !(cfg.sigma > 0.0)) throw ConfigError("sigma", "must be > 0");
    if (!(h.total_time >= cfg.sigma)) throw ConfigError("total_time", "must be >= sigma");
  }
  return {cfg, std::move(g), std::move(p), std::move(h)};
}

struct ScenarioResult {
  Trajectory trajectory;
  OutcomeClass outcome;
  std::vector<CostReport> costs;  // open-loop modes only
  std::string error;              // non-empty when the run aborted
};

inline Trajectory run_trajectory(const ResolvedScenario& rs, Trajectory* partial = nullptr) {
  const ScenarioMode mode = rs.config.mode;
  if (mode == ScenarioMode::kOpenLoopNonStubborn || mode == ScenarioMode::kOpenLoopStubborn) {
    const GameKind kind = mode == ScenarioMode::kOpenLoopStubborn ? GameKind::kStubborn
                                                                   : GameKind::kNonStubborn;
    const GameSetup s = build_setup(rs.graph, rs.params, kind);
    return sample_trajectory(s, rs.params, rs.config.dt);
  }
  HorizonConfig h = rs.horizon;
  GameParams p = rs.params;
  if (!h.controlled) {
    // No control is applied, so the delay plays no role; only sigma < t_f matters.
    p.tau = 0.0;
    p.t_f = std::max(p.t_f, h.sigma);
  }
  return rh_run(rs.graph, rs.params.x0, p, h, partial);
}

inline std::string trajectory_csv(const Trajectory& tr, bool controls) {
  std::string out = "t";
  const Eigen::Index n = tr.empty() ? 0 : tr.opinions.front().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    out += (controls ? ",u_" : ",x_") + std::to_string(i);
  }
  out += "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out += format_double(tr.times[k]);
    const Eigen::VectorXd& v = controls ? tr.controls[k] : tr.opinions[k];
    for (Eigen::Index i = 0; i < n; ++i) out += "," + format_double(v(i));
    out += "\n";
  }
  return out;
}

// Rows of a CSV written by trajectory_csv (header skipped).
inline std::vector<std::vector<double>> parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    const std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      row.push_back(detail::parse_number("csv", line.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string summary_text(const ResolvedScenario& rs, const ScenarioResult& res) {
  KeyValueReport rep;
  rep.add("mode", mode_name(rs.config.mode));
  rep.add("graph", rs.config.graph);
  rep.add("n", rs.graph.size());
  rep.add("t_f", rs.params.t_f);
  rep.add("tau", rs.params.tau);
  if (is_receding(rs.config.mode)) {
    rep.add("sigma", rs.horizon.sigma);
    rep.add("total_time", rs.horizon.total_time);
    rep.add("eps_min", rs.horizon.eps.minCoeff());
    rep.add("eps_max", rs.horizon.eps.maxCoeff());
  }
  rep.add("samples", res.trajectory.size());
  if (!res.error.empty()) rep.add("error", res.error);
  if (!res.trajectory.empty()) {
    rep.add("final_time", res.trajectory.times.back());
    rep.add("outcome", res.outcome.label());
    rep.add("clusters", res.outcome.clusters);
    rep.add("max_spread", res.outcome.max_spread);
    std::string centers;
    for (double c : res.outcome.centers) {
      centers += (centers.empty() ? "" : ",") + format_double(c);
    }
    rep.add("cluster_centers", centers);
  }
  for (std::size_t i = 0; i < res.costs.size(); ++i) {
    const std::string k = std::to_string(i);
    rep.add("cost_" + k, res.costs[i].total());
    rep.add("disagreement_" + k, res.costs[i].disagreement);
    rep.add("effort_" + k, res.costs[i].effort);
    if (rs.config.mode == ScenarioMode::kOpenLoopStubborn) {
      rep.add("prejudice_" + k, res.costs[i].prejudice);
    }
  }
  return rep.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline void write_artifacts(const ResolvedScenario& rs, const ScenarioResult& res) {
  const std::filesystem::path dir(rs.config.out);
  std::filesystem::create_directories(dir);
  write_text(dir / "trajectory.csv", trajectory_csv(res.trajectory, false));
  write_text(dir / "controls.csv", trajectory_csv(res.trajectory, true));
  write_text(dir / "summary.txt", summary_text(rs, res));
}

// Runs the scenario and writes its artifacts. Solver errors are rethrown
// after the partial trajectory and the error line have been written.
inline ScenarioResult run_scenario(const ResolvedScenario& rs) {
  ScenarioResult res;
  Trajectory partial;
  try {
    res.trajectory = run_trajectory(rs, &partial);
  } catch (const Error& e) {
    res.trajectory = partial;
    res.error = e.what();
    if (!res.trajectory.empty()) {
      res.outcome = classify_outcome(res.trajectory.opinions.back(),
                                     rs.config.consensus_tol, rs.config.cluster_tol);
    }
    write_artifacts(rs, res);
    throw;
  }
  res.outcome = classify_outcome(res.trajectory.opinions.back(), rs.config.consensus_tol,
                                 rs.config.cluster_tol);
  const ScenarioMode mode = rs.config.mode;
  if ((mode == ScenarioMode::kOpenLoopNonStubborn || mode == ScenarioMode::kOpenLoopStubborn) &&
      rs.config.dt <= rs.params.t_f / 10.0) {
    for (std::size_t i = 0; i < rs.graph.size(); ++i) {
      res.costs.push_back(evaluate_cost(res.trajectory, i, rs.params, rs.graph,
                                        mode == ScenarioMode::kOpenLoopStubborn));
    }
  }
  write_artifacts(rs, res);
  return res;
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  return run_scenario(resolve_scenario(cfg));
}

// Verification suite on the scenario's open-loop game (stubborn when the
// mode is, non-stubborn otherwise, on the unfiltered graph).
inline KeyValueReport verify_scenario(const ResolvedScenario& rs) {
  const GameKind kind = rs.config.mode == ScenarioMode::kOpenLoopStubborn
                            ? GameKind::kStubborn
                            : GameKind::kNonStubborn;
  const GameSetup s = build_setup(rs.graph, rs.params, kind);
  const double dt = rs.config.verify_dt;
  KeyValueReport rep;
  rep.add("game", kind == GameKind::kStubborn ? "stubborn" : "nonstubborn");
  rep.add("n", rs.graph.size());
  rep.add("dt", dt);

  const Trajectory closed = sample_trajectory(s, rs.params, dt);
  const TabulatedControl table =
      equilibrium_controls(s, s.flow_tau * rs.params.x0, rs.params.x0, 0.5 * dt);
  const Trajectory sim = simulate_forward(rs.graph, rs.params,
                                          [&](double t) { return table(t); }, dt);
  double forward_err = 0.0;
  for (std::size_t k = 0; k < closed.size(); ++k) {
    forward_err = std::max(forward_err,
                           (closed.opinions[k] - sim.opinions[k]).cwiseAbs().maxCoeff());
  }
  rep.add("forward_max_abs_error", forward_err);
  rep.add("forward_pass", forward_err <= 1e-6);

  bool all_dev = true;
  bool all_grad = true;
  for (std::size_t i = 0; i < rs.graph.size(); ++i) {
    const DeviationReport d =
        deviation_test(s, i, rs.config.verify_perturbations, rs.config.seed + i, dt);
    const GradientReport gr = cost_gradient(s, i, dt);
    const std::string k = std::to_string(i);
    rep.add("cost_" + k, d.cost);
    rep.add("deviation_margin_" + k, d.min_margin);
    rep.add("gradient_max_abs_" + k, gr.max_abs());
    all_dev = all_dev && d.pass;
    all_grad = all_grad && gr.pass();
  }
  rep.add("deviation_pass", all_dev);
  rep.add("gradient_pass", all_grad);
  rep.add("pass", forward_err <= 1e-6 && all_dev && all_grad);
  return rep;
}

struct PresetField {
  std::string key;
  std::string value;
  bool reported = false;  // stated by the experiment description
};

struct Preset {
  std::string name;
  std::string headline;  // e.g. "baseline eps=1.2"
  std::vector<PresetField> fields;

  ScenarioConfig config() const {
    ScenarioConfig cfg;
    for (const auto& f : fields) set_config_field(cfg, f.key, f.value);
    cfg.out = "out/" + name;
    return cfg;
  }
};

inline std::vector<Preset> list_presets() {
  auto common = [](const std::string& mode, bool receding) {
    std::vector<PresetField> f{
        {"graph", "builtin:zachary", true}, {"mode", mode, true},
        {"t_f", "10", true},                {"x0", "uniform", true},
        {"b", "1", true},                   {"r", "1", false},
        {"dt", "0.01", false},
    };
    if (receding) {
      f.push_back({"sigma", "1", false});
      f.push_back({"total_time", "40", false});
    }
    return f;
  };
  std::vector<Preset> out;

  const char* fig2_eps[] = {"1.2", "1.5", "2"};
  for (int k = 0; k < 3; ++k) {
    Preset p{std::string("fig2") + char('a' + k), "", common("baseline", true)};
    p.fields.push_back({"eps", fig2_eps[k], k == 0});
    p.fields.push_back({"tau", "0", false});
    p.headline = std::string("baseline eps=") + fig2_eps[k];
    out.push_back(std::move(p));
  }

  const char* fig3_omega[] = {"0.3", "0.7", "1"};
  for (int k = 0; k < 3; ++k) {
    Preset p{std::string("fig3") + char('a' + k), "", common("openloop-stubborn", false)};
    p.fields.push_back({"omega", fig3_omega[k], k == 2});
    p.fields.push_back({"tau", "0", false});
    p.headline = std::string("openloop-stubborn omega=") + fig3_omega[k];
    out.push_back(std::move(p));
  }

  const char* delays[] = {"0", "0.4", "0.6"};
  for (int k = 0; k < 3; ++k) {
    Preset p{std::string("fig4") + char('a' + k), "", common("rh-fixed", true)};
    p.fields.push_back({"tau", delays[k], true});
    p.fields.push_back({"eps", "min", k == 0});
    p.headline = std::string("rh-fixed tau=") + delays[k] + " eps=min";
    out.push_back(std::move(p));
  }

  for (int k = 0; k < 3; ++k) {
    Preset p{std::string("fig5") + char('a' + k), "", common("rh-complete", true)};
    p.fields.push_back({"tau", delays[k], k == 0});
    p.fields.push_back({"eps", "0.3", false});
    p.headline = std::string("rh-complete tau=") + delays[k] + " eps=0.3";
    out.push_back(std::move(p));
  }

  const char* fig6_eps[] = {"min", "0.7", "0.7"};
  for (int k = 0; k < 3; ++k) {
    Preset p{std::string("fig6") + char('a' + k), "", common("rh-second", true)};
    p.fields.push_back({"tau", delays[k], k == 0});
    p.fields.push_back({"eps", fig6_eps[k], k == 0});
    p.headline = std::string("rh-second tau=") + delays[k] + " eps=" + fig6_eps[k];
    out.push_back(std::move(p));
  }
  return out;
}

inline std::optional<Preset> find_preset(std::string_view name) {
  for (auto& p : list_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

inline std::string preset_catalog() {
  std::string out;
  for (const auto& p : list_presets()) {
    out += p.name + ": " + p.headline + "\n";
    for (const auto& f : p.fields) {
      out += "  " + f.key + "=" + f.value;
      if (f.key == "r") {
        out += " [defaulted=1.0 (not reported)]";
      } else {
        out += f.reported ? " [reported]" : " [defaulted]";
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace hkgame
