#pragma once

// Independent checks of the equilibrium: cost evaluation on sampled
// trajectories, RK4 forward simulation of the delayed plant, unilateral
// deviation and gradient probes, an Euler-discretized game solved as one
// stacked linear system, and final-opinion classification.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hkgame/errors.hpp"
#include "hkgame/graph.hpp"
#include "hkgame/matfun.hpp"
#include "hkgame/openloop.hpp"

namespace hkgame {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CostReport {
  double disagreement = 0.0;
  double effort = 0.0;
  double prejudice = 0.0;
  double total() const { return disagreement + effort + prejudice; }
};

// Terminal terms at the last sample, effort by the trapezoid rule over
// samples at or after tau (the recorded control is u(t - tau)).
inline CostReport evaluate_cost(const Trajectory& traj, std::size_t i,
                                const GameParams& p, const Neighborhoods& nbrs,
                                bool stubborn) {
  if (traj.size() < 2) throw GridTooCoarseError("trajectory needs at least two samples");
  if (i >= nbrs.size()) throw IndexError("agent " + std::to_string(i) + " out of range");
  for (std::size_t k = 1; k < traj.size(); ++k) {
    if (traj.times[k] - traj.times[k - 1] > p.t_f / 10.0 * (1.0 + 1e-12)) {
      throw GridTooCoarseError("sampling step exceeds t_f / 10");
    }
  }
  const auto ii = static_cast<Eigen::Index>(i);
  const Eigen::VectorXd& x = traj.opinions.back();

  CostReport c;
  double sum = 0.0;
  for (std::size_t j : nbrs[i]) {
    const double d = x(ii) - x(static_cast<Eigen::Index>(j));
    sum += d * d;
  }
  c.disagreement = sum / static_cast<double>(nbrs[i].size());
  if (stubborn) {
    const double w = p.omega(ii);
    c.disagreement *= 1.0 - w;
    const double d = x(ii) - p.x0(ii);
    c.prejudice = w * d * d;
  }

  const double r = p.r(ii);
  const double start = p.tau * (1.0 - 1e-12);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    if (traj.times[k - 1] < start) continue;
    const double a = traj.controls[k - 1](ii);
    const double b = traj.controls[k](ii);
    c.effort += 0.5 * (traj.times[k] - traj.times[k - 1]) * r * (a * a + b * b);
  }
  return c;
}

inline CostReport evaluate_cost(const Trajectory& traj, std::size_t i,
                                const GameParams& p, const SocialGraph& g,
                                bool stubborn) {
  return evaluate_cost(traj, i, p, g.neighborhoods(), stubborn);
}

// Issued control u(t), t in [0, t_f - tau].
using ControlFn = std::function<Eigen::VectorXd(double)>;

// Classical RK4 on the sample grid of (t_f, tau, dt). Grid intervals never
// straddle tau, so the control is 0 on intervals ending at or before tau and
// u(t - tau) on the others.
inline Trajectory simulate_forward(const Neighborhoods& nbrs, const GameParams& p,
                                   const ControlFn& controls, double dt) {
  p.validate(nbrs.size());
  const Eigen::MatrixXd lambda = dynamics_matrix(nbrs);
  const std::vector<double> grid = sample_grid(p.t_f, p.tau, dt);
  const auto nn = static_cast<Eigen::Index>(nbrs.size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nn);

  auto input = [&](double t, bool active) -> Eigen::VectorXd {
    if (!active) return zero;
    return p.b.cwiseProduct(controls(std::max(0.0, t - p.tau)));
  };

  Trajectory tr;
  Eigen::VectorXd x = p.x0;
  tr.push(grid[0], x, grid[0] >= p.tau ? controls(0.0) : zero);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double a = grid[k - 1];
    const double h = grid[k] - a;
    const bool active = a >= p.tau;
    const Eigen::VectorXd u_mid = input(a + 0.5 * h, active);
    const Eigen::VectorXd k1 = lambda * x + input(a, active);
    const Eigen::VectorXd k2 = lambda * (x + 0.5 * h * k1) + u_mid;
    const Eigen::VectorXd k3 = lambda * (x + 0.5 * h * k2) + u_mid;
    const Eigen::VectorXd k4 = lambda * (x + h * k3) + input(grid[k], active);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw NonFiniteError("forward simulation diverged");
    tr.push(grid[k], x, grid[k] >= p.tau ? controls(grid[k] - p.tau) : zero);
  }
  return tr;
}

inline Trajectory simulate_forward(const SocialGraph& g, const GameParams& p,
                                   const ControlFn& controls, double dt) {
  return simulate_forward(g.neighborhoods(), p, controls, dt);
}

// Piecewise-linear interpolation of equilibrium controls tabulated at
// 0, step, 2 step, ..., T.
class TabulatedControl {
 public:
  TabulatedControl() = default;
  TabulatedControl(std::vector<double> times, std::vector<Eigen::VectorXd> values)
      : times_(std::move(times)), values_(std::move(values)) {}

  Eigen::VectorXd operator()(double t) const {
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin());
    const double a = times_[k - 1];
    const double b = times_[k];
    const double w = (t - a) / (b - a);
    return (1.0 - w) * values_[k - 1] + w * values_[k];
  }

  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> values_;
};

inline TabulatedControl equilibrium_controls(const GameSetup& s,
                                             const Eigen::VectorXd& x_tau,
                                             const Eigen::VectorXd& x0,
                                             double step) {
  const double big_t = s.horizon();
  std::vector<double> t;
  for (std::size_t k = 0;; ++k) {
    const double v = static_cast<double>(k) * step;
    if (!(v < big_t - 1e-9 * step)) break;
    t.push_back(v);
  }
  t.push_back(big_t);
  EquilibriumPath path(s, x_tau, x0);
  auto samples = path.evaluate(t);
  return TabulatedControl(std::move(t), std::move(samples.controls));
}

// Hat-function perturbation on knots 0, T/(m-1), ..., T.
inline double hat_perturbation(const std::vector<double>& coef, double horizon,
                               double t) {
  const std::size_t m = coef.size();
  if (m == 0) return 0.0;
  if (m == 1) return coef[0];
  const double pos = std::clamp(t / horizon, 0.0, 1.0) * static_cast<double>(m - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(pos), m - 2);
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * coef[k] + w * coef[k + 1];
}

// J_i when agent i plays u*_i + delta and everyone else stays at u*.
inline double unilateral_cost(const GameSetup& s, const TabulatedControl& eq,
                              std::size_t i,
                              const std::function<double(double)>& delta,
                              double dt) {
  const auto ii = static_cast<Eigen::Index>(i);
  ControlFn u = [&](double t) {
    Eigen::VectorXd v = eq(t);
    v(ii) += delta(t);
    return v;
  };
  const Trajectory tr = simulate_forward(s.neighborhoods, s.params, u, dt);
  return evaluate_cost(tr, i, s.params, s.neighborhoods,
                       s.kind == GameKind::kStubborn)
      .total();
}

inline constexpr std::size_t kPerturbationKnots = 16;

struct DeviationReport {
  double cost = 0.0;  // J_i at the equilibrium
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> margins;
  bool pass = false;
};

inline DeviationReport deviation_test(const GameSetup& s, std::size_t i,
                                      std::size_t n_perturbations,
                                      std::uint64_t seed, double dt = 1e-3) {
  if (i >= s.size()) throw IndexError("agent " + std::to_string(i) + " out of range");
  const Eigen::VectorXd x_tau = s.flow_tau * s.params.x0;
  const TabulatedControl eq = equilibrium_controls(s, x_tau, s.params.x0, 0.5 * dt);
  const double horizon = s.horizon();

  DeviationReport rep;
  rep.cost = unilateral_cost(s, eq, i, [](double) { return 0.0; }, dt);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef_dist(-0.5, 0.5);
  for (std::size_t k = 0; k < n_perturbations; ++k) {
    std::vector<double> coef(kPerturbationKnots);
    for (double& c : coef) c = coef_dist(rng);
    const double j = unilateral_cost(
        s, eq, i, [&](double t) { return hat_perturbation(coef, horizon, t); }, dt);
    rep.margins.push_back(j - rep.cost);
    rep.min_margin = std::min(rep.min_margin, j - rep.cost);
  }
  if (n_perturbations == 0) rep.min_margin = 0.0;
  rep.pass = rep.min_margin >= -1e-8 * (1.0 + std::abs(rep.cost));
  return rep;
}

inline DeviationReport deviation_test(const SocialGraph& g, const GameParams& p,
                                      std::size_t i, std::size_t n_perturbations,
                                      std::uint64_t seed, bool stubborn = false,
                                      double dt = 1e-3) {
  const GameSetup s =
      build_setup(g, p, stubborn ? GameKind::kStubborn : GameKind::kNonStubborn);
  return deviation_test(s, i, n_perturbations, seed, dt);
}

struct GradientReport {
  double cost = 0.0;
  Eigen::VectorXd gradient;  // dJ_i / d(knot coefficient)
  double max_abs() const { return gradient.cwiseAbs().maxCoeff(); }
  bool pass() const { return max_abs() <= 1e-4 * (1.0 + std::abs(cost)); }
};

// Central differences of J_i along the hat-function knot directions.
inline GradientReport cost_gradient(const GameSetup& s, std::size_t i,
                                    double dt = 1e-3, double step = 1e-3) {
  if (i >= s.size()) throw IndexError("agent " + std::to_string(i) + " out of range");
  const Eigen::VectorXd x_tau = s.flow_tau * s.params.x0;
  const TabulatedControl eq = equilibrium_controls(s, x_tau, s.params.x0, 0.5 * dt);
  const double horizon = s.horizon();

  GradientReport rep;
  rep.cost = unilateral_cost(s, eq, i, [](double) { return 0.0; }, dt);
  rep.gradient.resize(static_cast<Eigen::Index>(kPerturbationKnots));
  for (std::size_t k = 0; k < kPerturbationKnots; ++k) {
    std::vector<double> coef(kPerturbationKnots, 0.0);
    coef[k] = step;
    const double up = unilateral_cost(
        s, eq, i, [&](double t) { return hat_perturbation(coef, horizon, t); }, dt);
    coef[k] = -step;
    const double down = unilateral_cost(
        s, eq, i, [&](double t) { return hat_perturbation(coef, horizon, t); }, dt);
    rep.gradient(static_cast<Eigen::Index>(k)) = (up - down) / (2.0 * step);
  }
  return rep;
}

struct DiscreteGame {
  double step = 0.0;
  std::vector<Eigen::VectorXd> controls;  // u_k, k = 0..N-1
  std::vector<Eigen::VectorXd> states;    // x_k, k = 0..N
};

// Euler game x_{k+1} = x_k + h (Lambda x_k + sum_i B_i u_{i,k}),
// J_i = x_N^T L_i x_N / |N_i| + h sum_k r_i u_{i,k}^2, solved from the
// stacked first-order conditions of all agents at once.
inline DiscreteGame discrete_game_oracle(const Neighborhoods& nbrs,
                                         const GameParams& p, std::size_t steps) {
  p.validate(nbrs.size());
  if (p.tau != 0.0) throw DomainError("discrete oracle requires tau = 0");
  if (steps == 0) throw DomainError("discrete oracle needs at least one step");
  const std::size_t n = nbrs.size();
  const auto nn = static_cast<Eigen::Index>(n);
  const auto nsteps = static_cast<Eigen::Index>(steps);
  const double h = p.t_f / static_cast<double>(steps);
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(nn, nn) + h * dynamics_matrix(nbrs);

  // G_j(:, k) = A^{N-1-k} h B_j
  std::vector<Eigen::MatrixXd> g(n, Eigen::MatrixXd(nn, nsteps));
  for (std::size_t j = 0; j < n; ++j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(nn);
    v(static_cast<Eigen::Index>(j)) = h * p.b(static_cast<Eigen::Index>(j));
    for (Eigen::Index k = nsteps - 1; k >= 0; --k) {
      g[j].col(k) = v;
      v = a * v;
    }
  }
  Eigen::VectorXd free = p.x0;
  for (std::size_t k = 0; k < steps; ++k) free = a * free;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nn * nsteps, nn * nsteps);
  Eigen::VectorXd rhs(nn * nsteps);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const AgentStructure st = agent_laplacian(nbrs, i);
    const Eigen::MatrixXd gl =
        g[i].transpose() * st.laplacian / static_cast<double>(st.degree);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      kkt.block(ii * nsteps, jj * nsteps, nsteps, nsteps) = gl * g[j];
    }
    kkt.block(ii * nsteps, ii * nsteps, nsteps, nsteps).diagonal().array() +=
        h * p.r(ii);
    rhs.segment(ii * nsteps, nsteps) = -gl * free;
  }
  const Eigen::VectorXd u = solve_linear(kkt, rhs);

  DiscreteGame out;
  out.step = h;
  Eigen::VectorXd x = p.x0;
  out.states.push_back(x);
  for (Eigen::Index k = 0; k < nsteps; ++k) {
    Eigen::VectorXd uk(nn);
    for (Eigen::Index i = 0; i < nn; ++i) uk(i) = u(i * nsteps + k);
    x = a * x + h * p.b.cwiseProduct(uk);
    out.controls.push_back(std::move(uk));
    out.states.push_back(x);
  }
  return out;
}

inline DiscreteGame discrete_game_oracle(const SocialGraph& g, const GameParams& p,
                                         std::size_t steps) {
  return discrete_game_oracle(g.neighborhoods(), p, steps);
}

enum class OutcomeKind { kConsensus, kClustered, kDisagreement };

struct OutcomeClass {
  OutcomeKind kind = OutcomeKind::kDisagreement;
  std::size_t clusters = 0;  // number of gap-separated groups
  std::vector<double> centers;
  double max_spread = 0.0;

  std::string label() const {
    switch (kind) {
      case OutcomeKind::kConsensus:
        return "Consensus";
      case OutcomeKind::kClustered:
        return "Clustered(" + std::to_string(clusters) + ")";
      case OutcomeKind::kDisagreement:
        break;
    }
    return "Disagreement";
  }
};

inline constexpr double kConsensusTol = 0.05;
inline constexpr double kClusterTol = 0.1;

// Sort, split at gaps > cluster_tol. Clustered(k) needs every group within
// cluster_tol and 2 <= k <= max_clusters (default n / 2).
inline OutcomeClass classify_outcome(const Eigen::VectorXd& x,
                                     double consensus_tol = kConsensusTol,
                                     double cluster_tol = kClusterTol,
                                     std::size_t max_clusters = 0) {
  if (!(consensus_tol > 0.0) || !(cluster_tol > 0.0)) {
    throw DomainError("classification tolerances must be > 0");
  }
  if (x.size() == 0) throw DomainError("cannot classify an empty opinion vector");
  if (!x.allFinite()) throw NonFiniteError("opinions have non-finite entries");
  const std::size_t n = static_cast<std::size_t>(x.size());
  if (max_clusters == 0) max_clusters = n / 2;

  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  OutcomeClass out;
  out.max_spread = v.back() - v.front();

  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [first, last]
  std::size_t first = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k == n || v[k] - v[k - 1] > cluster_tol) {
      groups.emplace_back(first, k - 1);
      first = k;
    }
  }
  bool tight = true;
  for (auto [a, b] : groups) {
    double sum = 0.0;
    for (std::size_t k = a; k <= b; ++k) sum += v[k];
    out.centers.push_back(sum / static_cast<double>(b - a + 1));
    if (v[b] - v[a] > cluster_tol) tight = false;
  }
  out.clusters = groups.size();

  if (out.max_spread <= consensus_tol) {
    out.kind = OutcomeKind::kConsensus;
  } else if (tight && out.clusters >= 2 && out.clusters <= max_clusters) {
    out.kind = OutcomeKind::kClustered;
  } else {
    out.kind = OutcomeKind::kDisagreement;
  }
  return out;
}

// Ordered key=value lines.
class KeyValueReport {
 public:
  void add(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
  }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace hkgame
