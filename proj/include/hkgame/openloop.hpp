#pragma once

// Open-loop Nash equilibrium of the input-delayed opinion game.
//
// Dynamics: xdot(t) = Lambda x(t) + sum_i B_i u_i(t - tau), u = 0 before 0.
// The change of variables y(t) = e^{-tau Lambda} x(t + tau) gives the
// delay-free game ydot = Lambda y + sum_i bhat_i u_i on [0, T], T = t_f - tau,
// with terminal weights in y(T). Agent i's terminal co-state is
//   lambda_i = Q_i y(T) - p_i,
// Q_i = Lhat_i / |N_i|                              (non-stubborn)
// Q_i = What_i + (1 - omega_i) Lhat_i / |N_i|,  p_i = e^{tau Lambda^T} W_i x0
//                                                   (stubborn)
// and y(T) solves (I + sum_i Psi_i(T) Q_i) y(T) = e^{T Lambda} y(0) + sum_i Psi_i(T) p_i.
// Then u_i(t) = -(1/r_i) bhat_i^T e^{(T-t) Lambda^T} lambda_i and
//   y(t) = e^{t Lambda} y(0) - sum_i Psi_i(t) e^{(T-t) Lambda^T} lambda_i.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hkgame/errors.hpp"
#include "hkgame/graph.hpp"
#include "hkgame/matfun.hpp"

namespace hkgame {

struct GameParams {
  double t_f = 10.0;
  double tau = 0.0;
  Eigen::VectorXd r;      // control weights, > 0
  Eigen::VectorXd b;      // input gains, != 0
  Eigen::VectorXd omega;  // stubbornness in [0, 1]
  Eigen::VectorXd x0;     // initial opinions (prejudices)

  // r = b = 1, omega = 0.
  static GameParams with_defaults(const Eigen::VectorXd& x0, double t_f = 10.0,
                                  double tau = 0.0) {
    GameParams p;
    p.t_f = t_f;
    p.tau = tau;
    p.x0 = x0;
    p.r = Eigen::VectorXd::Ones(x0.size());
    p.b = Eigen::VectorXd::Ones(x0.size());
    p.omega = Eigen::VectorXd::Zero(x0.size());
    return p;
  }

  std::size_t size() const { return static_cast<std::size_t>(x0.size()); }

  void validate(std::size_t n) const {
    if (!std::isfinite(t_f) || !(t_f > 0.0)) throw DomainError("t_f must be > 0");
    if (!std::isfinite(tau) || tau < 0.0 || !(tau < t_f)) {
      throw DomainError("tau must satisfy 0 <= tau < t_f");
    }
    const auto nn = static_cast<Eigen::Index>(n);
    if (x0.size() != nn || r.size() != nn || b.size() != nn ||
        omega.size() != nn) {
      throw DomainError("x0, r, b and omega need one entry per agent (n=" +
                        std::to_string(n) + ")");
    }
    if (!x0.allFinite()) throw NonFiniteError("x0 has non-finite entries");
    for (Eigen::Index i = 0; i < nn; ++i) {
      if (!std::isfinite(r(i)) || !(r(i) > 0.0)) throw DomainError("r_i must be > 0");
      if (!std::isfinite(b(i)) || b(i) == 0.0) throw DomainError("b_i must be nonzero");
      if (!(omega(i) >= 0.0 && omega(i) <= 1.0)) {
        throw DomainError("omega_i must lie in [0, 1]");
      }
    }
  }
};

enum class GameKind { kNonStubborn, kStubborn };

struct AgentBlocks {
  std::size_t degree = 0;
  Eigen::MatrixXd laplacian;  // L_i
  Eigen::MatrixXd l_hat;      // e^{tau Lambda^T} L_i e^{tau Lambda}
  Eigen::VectorXd b_hat;      // e^{-tau Lambda} B_i
  Eigen::MatrixXd s;          // bhat_i bhat_i^T / r_i
  Eigen::MatrixXd psi;        // Psi_i(T)
  Eigen::MatrixXd w_hat;      // e^{tau Lambda^T} W_i e^{tau Lambda}
  Eigen::MatrixXd w_tilde;    // 2 e^{tau Lambda^T} W_i
  Eigen::MatrixXd terminal;   // Q_i
};

class GameSetup {
 public:
  GameKind kind = GameKind::kNonStubborn;
  GameParams params;
  Neighborhoods neighborhoods;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd flow_tau;    // e^{tau Lambda}
  Eigen::MatrixXd flow_drive;  // e^{(t_f - 2 tau) Lambda}
  std::vector<AgentBlocks> agents;
  Eigen::MatrixXd h;           // I + sum_i Psi_i(T) Q_i
  LinearSolver solver;

  std::size_t size() const { return agents.size(); }
  double horizon() const { return params.t_f - params.tau; }

  // p_i; zero for the non-stubborn game.
  Eigen::VectorXd prejudice_pull(std::size_t i, const Eigen::VectorXd& x0) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (kind == GameKind::kNonStubborn) return Eigen::VectorXd::Zero(n);
    const auto ii = static_cast<Eigen::Index>(i);
    return params.omega(ii) * x0(ii) * flow_tau.row(ii).transpose();
  }

  Eigen::VectorXd terminal_state(const Eigen::VectorXd& x_tau,
                                 const Eigen::VectorXd& x0) const {
    check_vector(x_tau, "x_tau");
    check_vector(x0, "x0");
    Eigen::VectorXd rhs = flow_drive * x_tau;
    if (kind == GameKind::kStubborn) {
      for (std::size_t i = 0; i < size(); ++i) {
        rhs += agents[i].psi * prejudice_pull(i, x0);
      }
    }
    return solver.solve(rhs);
  }

  // lambda_i(T) for every agent.
  std::vector<Eigen::VectorXd> costate_terminal(const Eigen::VectorXd& x_tau,
                                                const Eigen::VectorXd& x0) const {
    const Eigen::VectorXd y_t = terminal_state(x_tau, x0);
    std::vector<Eigen::VectorXd> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      out[i] = agents[i].terminal * y_t - prejudice_pull(i, x0);
    }
    return out;
  }

  std::vector<Eigen::VectorXd> costate_terminal(const Eigen::VectorXd& x_tau) const {
    return costate_terminal(x_tau, params.x0);
  }

  void check_vector(const Eigen::VectorXd& v, const char* what) const {
    if (static_cast<std::size_t>(v.size()) != size()) {
      throw DomainError(std::string(what) + " must have one entry per agent");
    }
    if (!v.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
  }

  void check_issued_time(double t) const {
    const double big_t = horizon();
    if (!(t >= 0.0 && t <= big_t * (1.0 + 1e-12))) {
      throw DomainError("time " + std::to_string(t) + " outside [0, " +
                        std::to_string(big_t) + "]");
    }
  }
};

inline GameSetup build_setup(const Neighborhoods& nbrs, const GameParams& p,
                             GameKind kind) {
  const std::size_t n = nbrs.size();
  p.validate(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (nbrs[i].empty()) throw EmptyNeighborhoodError(i, 0.0);
  }

  GameSetup s;
  s.kind = kind;
  s.params = p;
  s.neighborhoods = nbrs;
  s.lambda = dynamics_matrix(nbrs);
  s.flow_tau = expm(s.lambda, p.tau);
  const Eigen::MatrixXd flow_tau_inv = expm(s.lambda, -p.tau);
  s.flow_drive = expm(s.lambda, p.t_f - 2.0 * p.tau);
  const double big_t = p.t_f - p.tau;
  const auto nn = static_cast<Eigen::Index>(n);

  s.h = Eigen::MatrixXd::Identity(nn, nn);
  s.agents.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    AgentBlocks& a = s.agents[i];
    AgentStructure st = agent_laplacian(nbrs, i);
    a.degree = st.degree;
    a.laplacian = std::move(st.laplacian);
    a.l_hat = s.flow_tau.transpose() * a.laplacian * s.flow_tau;
    a.l_hat = 0.5 * (a.l_hat + a.l_hat.transpose()).eval();
    a.b_hat = p.b(ii) * flow_tau_inv.col(ii);
    a.s = (a.b_hat * a.b_hat.transpose()) / p.r(ii);
    a.psi = gramian_block(s.lambda, a.s, big_t);

    const double inv_deg = 1.0 / static_cast<double>(a.degree);
    if (kind == GameKind::kStubborn) {
      const double w = p.omega(ii);
      a.w_hat = w * s.flow_tau.row(ii).transpose() * s.flow_tau.row(ii);
      a.w_tilde = Eigen::MatrixXd::Zero(nn, nn);
      a.w_tilde.col(ii) = 2.0 * w * s.flow_tau.row(ii).transpose();
      a.terminal = a.w_hat + (1.0 - w) * inv_deg * a.l_hat;
    } else {
      a.w_hat = Eigen::MatrixXd::Zero(nn, nn);
      a.w_tilde = Eigen::MatrixXd::Zero(nn, nn);
      a.terminal = inv_deg * a.l_hat;
    }
    s.h += a.psi * a.terminal;
  }
  try {
    s.solver = LinearSolver(s.h);
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError(
        "no unique open-loop Nash equilibrium for these parameters (H singular)");
  }
  return s;
}

inline GameSetup build_setup(const SocialGraph& g, const GameParams& p,
                             GameKind kind) {
  return build_setup(g.neighborhoods(), p, kind);
}

namespace detail {

inline void require_kind(const GameSetup& s, GameKind kind) {
  if (s.kind != kind) {
    throw DomainError(kind == GameKind::kStubborn
                          ? "setup was built for the non-stubborn game"
                          : "setup was built for the stubborn game");
  }
}

inline double control_from_costate(const GameSetup& s,
                                   const std::vector<Eigen::VectorXd>& lam,
                                   double t, std::size_t i) {
  if (i >= s.size()) throw IndexError("agent " + std::to_string(i) + " out of range");
  const auto ii = static_cast<Eigen::Index>(i);
  const Eigen::MatrixXd back = expm(s.lambda, s.horizon() - t);
  const Eigen::VectorXd mu = back.transpose() * lam[i];
  return -s.agents[i].b_hat.dot(mu) / s.params.r(ii);
}

// sum_i Psi_i(t) e^{(T-t) Lambda^T} lambda_i
inline Eigen::VectorXd forced_response(const GameSetup& s,
                                       const std::vector<Eigen::VectorXd>& lam,
                                       double t) {
  const Eigen::MatrixXd back_t = expm(s.lambda, s.horizon() - t).transpose();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size()));
  if (t == 0.0) return z;
  for (std::size_t i = 0; i < s.size(); ++i) {
    z += gramian_block(s.lambda, s.agents[i].s, t) * (back_t * lam[i]);
  }
  return z;
}

inline Eigen::VectorXd state_from_costate(const GameSetup& s,
                                          const Eigen::VectorXd& x_tau,
                                          const std::vector<Eigen::VectorXd>& lam,
                                          double t) {
  if (t == 0.0) return x_tau;
  return expm(s.lambda, t) * x_tau - s.flow_tau * forced_response(s, lam, t);
}

}  // namespace detail

inline double nash_control_nonstubborn(const GameSetup& s,
                                       const Eigen::VectorXd& x_tau, double t,
                                       std::size_t i) {
  detail::require_kind(s, GameKind::kNonStubborn);
  s.check_issued_time(t);
  return detail::control_from_costate(s, s.costate_terminal(x_tau), t, i);
}

inline Eigen::VectorXd opinion_trajectory_nonstubborn(const GameSetup& s,
                                                      const Eigen::VectorXd& x_tau,
                                                      double t) {
  detail::require_kind(s, GameKind::kNonStubborn);
  s.check_issued_time(t);
  return detail::state_from_costate(s, x_tau, s.costate_terminal(x_tau), t);
}

inline double nash_control_stubborn(const GameSetup& s,
                                    const Eigen::VectorXd& x_tau,
                                    const Eigen::VectorXd& x0, double t,
                                    std::size_t i) {
  detail::require_kind(s, GameKind::kStubborn);
  s.check_issued_time(t);
  return detail::control_from_costate(s, s.costate_terminal(x_tau, x0), t, i);
}

inline Eigen::VectorXd opinion_trajectory_stubborn(const GameSetup& s,
                                                   const Eigen::VectorXd& x_tau,
                                                   const Eigen::VectorXd& x0,
                                                   double t) {
  detail::require_kind(s, GameKind::kStubborn);
  s.check_issued_time(t);
  return detail::state_from_costate(s, x_tau, s.costate_terminal(x_tau, x0), t);
}

// y(t) of the delay-free game, started from y(0) = x0 (so x(tau) = e^{tau Lambda} x0).
inline Eigen::VectorXd delay_free_state(const GameSetup& s, double t) {
  s.check_issued_time(t);
  const Eigen::VectorXd x_tau = s.flow_tau * s.params.x0;
  const auto lam = s.costate_terminal(x_tau, s.params.x0);
  if (t == 0.0) return s.params.x0;
  return expm(s.lambda, t) * s.params.x0 - detail::forced_response(s, lam, t);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> opinions;
  std::vector<Eigen::VectorXd> controls;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  void push(double t, Eigen::VectorXd x, Eigen::VectorXd u) {
    times.push_back(t);
    opinions.push_back(std::move(x));
    controls.push_back(std::move(u));
  }

  // Appends other, skipping its first sample when it repeats our last time.
  void extend(const Trajectory& other) {
    std::size_t k = 0;
    if (!empty() && !other.empty() && other.times.front() == times.back()) k = 1;
    for (; k < other.size(); ++k) push(other.times[k], other.opinions[k], other.controls[k]);
  }
};

// Equilibrium opinions x(t + tau) and issued controls u(t) on an increasing
// grid of issued times starting at 0, by exact one-step recursions:
//   z(t+h)  = e^{h Lambda} z(t) + sum_i Psi_i(h) mu_i(t+h),
//   mu_i(t) = e^{h Lambda^T} mu_i(t+h),   mu_i(T) = lambda_i,
// and x(t + tau) = e^{t Lambda} x(tau) - e^{tau Lambda} z(t).
class EquilibriumPath {
 public:
  EquilibriumPath(const GameSetup& s, const Eigen::VectorXd& x_tau,
                  const Eigen::VectorXd& x0)
      : s_(s), x_tau_(x_tau), costate_(s.costate_terminal(x_tau, x0)) {}

  const std::vector<Eigen::VectorXd>& costate() const { return costate_; }

  struct Samples {
    std::vector<Eigen::VectorXd> opinions;
    std::vector<Eigen::VectorXd> controls;
  };

  Samples evaluate(const std::vector<double>& issued) {
    const std::size_t m = issued.size();
    const std::size_t n = s_.size();
    const auto nn = static_cast<Eigen::Index>(n);
    Samples out;
    if (m == 0) return out;
    if (issued.front() != 0.0) throw DomainError("issued-time grid must start at 0");
    for (std::size_t k = 0; k < m; ++k) {
      s_.check_issued_time(issued[k]);
      if (k > 0 && !(issued[k] > issued[k - 1])) {
        throw DomainError("issued-time grid must be increasing");
      }
    }

    // Co-states, walking backwards from the last grid point.
    std::vector<std::vector<Eigen::VectorXd>> mu(m, std::vector<Eigen::VectorXd>(n));
    {
      const double remain = std::max(0.0, s_.horizon() - issued.back());
      const Eigen::MatrixXd back_t = expm(s_.lambda, remain).transpose();
      for (std::size_t i = 0; i < n; ++i) mu[m - 1][i] = back_t * costate_[i];
    }
    for (std::size_t k = m - 1; k-- > 0;) {
      const Step& st = step(issued[k + 1] - issued[k]);
      for (std::size_t i = 0; i < n; ++i) mu[k][i] = st.flow.transpose() * mu[k + 1][i];
    }

    out.opinions.resize(m);
    out.controls.resize(m);
    Eigen::VectorXd free = x_tau_;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(nn);
    for (std::size_t k = 0; k < m; ++k) {
      if (k > 0) {
        const Step& st = step(issued[k] - issued[k - 1]);
        free = st.flow * free;
        Eigen::VectorXd next = st.flow * z;
        for (std::size_t i = 0; i < n; ++i) next += st.psi[i] * mu[k][i];
        z = std::move(next);
      }
      out.opinions[k] = k == 0 ? x_tau_ : Eigen::VectorXd(free - s_.flow_tau * z);
      Eigen::VectorXd u(nn);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        u(ii) = -s_.agents[i].b_hat.dot(mu[k][i]) / s_.params.r(ii);
      }
      out.controls[k] = std::move(u);
    }
    return out;
  }

 private:
  struct Step {
    Eigen::MatrixXd flow;
    std::vector<Eigen::MatrixXd> psi;
  };

  // Steps that agree to 1e-12 relative share one cache entry, so uniform
  // grids with rounding jitter reuse the same matrices.
  const Step& step(double h) {
    auto it = cache_.lower_bound(h * (1.0 - 1e-12));
    if (it != cache_.end() && it->first <= h * (1.0 + 1e-12)) return it->second;
    Step st;
    st.psi.reserve(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) {
      GramianStep g = gramian_step(s_.lambda, s_.agents[i].s, h);
      if (i == 0) st.flow = std::move(g.flow);
      st.psi.push_back(std::move(g.psi));
    }
    return cache_.emplace(h, std::move(st)).first->second;
  }

  const GameSetup& s_;
  Eigen::VectorXd x_tau_;
  std::vector<Eigen::VectorXd> costate_;
  std::map<double, Step> cache_;
};

// Plant-time grid: k dt below tau, then tau + k dt below t_f, then t_f.
inline std::vector<double> sample_grid(double t_f, double tau, double dt) {
  if (!(dt > 0.0) || !(dt <= t_f * (1.0 + 1e-12))) {
    throw DomainError("sampling step must satisfy 0 < dt <= t_f");
  }
  const double slack = 1e-9 * dt;
  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (!(t < tau - slack)) break;
    grid.push_back(t);
  }
  for (std::size_t k = 0;; ++k) {
    const double t = tau + static_cast<double>(k) * dt;
    if (!(t < t_f - slack)) break;
    grid.push_back(t);
  }
  grid.push_back(t_f);
  return grid;
}

// x(t) = e^{t Lambda} x0 with zero controls, at the given times.
inline Trajectory sample_flow(const Eigen::MatrixXd& lambda,
                              const Eigen::VectorXd& x0,
                              const std::vector<double>& times) {
  Trajectory tr;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(x0.size());
  Eigen::VectorXd x = x0;
  double t_prev = 0.0;
  std::map<double, Eigen::MatrixXd> steps;
  for (double t : times) {
    const double h = t - t_prev;
    if (h < 0.0) throw DomainError("sample times must be non-decreasing from 0");
    if (h > 0.0) {
      auto it = steps.lower_bound(h * (1.0 - 1e-12));
      if (it == steps.end() || it->first > h * (1.0 + 1e-12)) {
        it = steps.emplace(h, expm(lambda, h)).first;
      }
      x = it->second * x;
    }
    tr.push(t, x, zero);
    t_prev = t;
  }
  return tr;
}

// Full equilibrium run on [0, t_f]: uncontrolled flow on [0, tau), the game
// trajectory afterwards. Controls are recorded in plant time, u(s - tau).
inline Trajectory sample_trajectory(const GameSetup& s, const GameParams& p,
                                    double dt) {
  p.validate(s.size());
  const std::vector<double> grid = sample_grid(p.t_f, p.tau, dt);
  std::vector<double> prefix;
  std::vector<double> plant;
  std::vector<double> issued;
  for (double t : grid) {
    if (t < p.tau) {
      prefix.push_back(t);
    } else {
      plant.push_back(t);
      issued.push_back(t - p.tau);
    }
  }

  Trajectory tr = sample_flow(s.lambda, p.x0, prefix);
  const Eigen::VectorXd x_tau = s.flow_tau * p.x0;
  EquilibriumPath path(s, x_tau, p.x0);
  const auto samples = path.evaluate(issued);
  for (std::size_t k = 0; k < issued.size(); ++k) {
    tr.push(plant[k], samples.opinions[k], samples.controls[k]);
  }
  return tr;
}

// Same grid, u = 0 throughout.
inline Trajectory sample_baseline(const Neighborhoods& nbrs, const GameParams& p,
                                  double dt) {
  p.validate(nbrs.size());
  return sample_flow(dynamics_matrix(nbrs), p.x0, sample_grid(p.t_f, p.tau, dt));
}

}  // namespace hkgame
