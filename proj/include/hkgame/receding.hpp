#pragma once

// Receding-horizon execution of the open-loop game: every sigma time units
// the confidence graph is rebuilt from the current opinions, the game is
// re-solved over the inner horizon t_f, and the window's initial control is
// held until the next refresh.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hkgame/errors.hpp"
#include "hkgame/graph.hpp"
#include "hkgame/matfun.hpp"
#include "hkgame/openloop.hpp"

namespace hkgame {

struct HorizonConfig {
  double sigma = 1.0;
  NeighborMode mode = NeighborMode::kFixed;
  double total_time = 10.0;
  double dt = 0.01;
  Eigen::VectorXd eps;        // per-agent confidence bounds
  bool eps_autogrow = false;  // x1.5 on the empty agent until non-empty
  bool controlled = true;     // false: u = 0 (baseline)

  void validate(const GameParams& p, std::size_t n) const {
    if (!std::isfinite(sigma) || !(sigma > p.tau) || !(sigma <= p.t_f)) {
      throw DomainError("sigma must satisfy tau < sigma <= t_f");
    }
    if (!std::isfinite(total_time) || !(total_time >= sigma * (1.0 - 1e-12))) {
      throw DomainError("total_time must be >= sigma");
    }
    if (!std::isfinite(dt) || !(dt > 0.0)) throw DomainError("dt must be > 0");
    if (static_cast<std::size_t>(eps.size()) != n) {
      throw DomainError("eps needs one entry per agent");
    }
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
      if (!(eps(i) > 0.0)) throw DomainError("eps_i must be > 0");
    }
  }
};

// P_i(t_f, t) = e^{(T-t) Lambda^T} Lhat_i H^{-1} / |N_i|.
inline Eigen::MatrixXd feedback_gain(const GameSetup& s, std::size_t i, double t) {
  if (i >= s.size()) throw IndexError("agent " + std::to_string(i) + " out of range");
  s.check_issued_time(t);
  const AgentBlocks& a = s.agents[i];
  const Eigen::MatrixXd m =
      expm(s.lambda, s.horizon() - t).transpose() * a.l_hat /
      static_cast<double>(a.degree);
  return s.solver.solve_transposed(m.transpose()).transpose();
}

// ubar_i = -(1/r_i) bhat_i^T P_i(t_f, 0) e^{(t_f - 2 tau) Lambda} xbar0(tau),
// frozen over the window (t only range-checked).
inline Eigen::VectorXd rh_control(const GameSetup& s, const Eigen::VectorXd& xbar0_tau,
                                  double t = 0.0) {
  if (s.kind != GameKind::kNonStubborn) {
    throw DomainError("receding horizon is defined for the non-stubborn game");
  }
  s.check_vector(xbar0_tau, "xbar0_tau");
  s.check_issued_time(t);
  const Eigen::VectorXd drive = s.flow_drive * xbar0_tau;
  const auto nn = static_cast<Eigen::Index>(s.size());
  Eigen::VectorXd u(nn);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    u(ii) = -s.agents[i].b_hat.dot(feedback_gain(s, i, 0.0) * drive) / s.params.r(ii);
  }
  return u;
}

struct WindowResult {
  Trajectory segment;   // samples on [start, start + length)
  Neighborhoods graph;  // filtered neighbor sets used in the window
  Eigen::VectorXd eps;  // bounds actually used (after any autogrow)
  Eigen::VectorXd x_end;  // opinions at start + length
  Eigen::VectorXd control;  // held control on [start + tau, start + length)
};

// One window of the given length (<= sigma), starting at absolute time start.
inline WindowResult rh_window(const SocialGraph& g, const Eigen::VectorXd& x_t,
                              const GameParams& p, const HorizonConfig& h,
                              double start = 0.0, double length = -1.0) {
  const std::size_t n = g.size();
  h.validate(p, n);
  if (static_cast<std::size_t>(x_t.size()) != n) {
    throw DomainError("x_t must have one entry per agent");
  }
  if (!x_t.allFinite()) throw NonFiniteError("opinions became non-finite");
  if (length < 0.0) length = h.sigma;
  if (!(length > 0.0) || length > h.sigma * (1.0 + 1e-12)) {
    throw DomainError("window length must lie in (0, sigma]");
  }

  WindowResult out;
  out.eps = h.eps;
  for (int attempt = 0;; ++attempt) {
    try {
      out.graph = confidence_filter(g, x_t, out.eps, h.mode, start);
      break;
    } catch (const EmptyNeighborhoodError& e) {
      if (!h.eps_autogrow || attempt >= 200) throw;
      out.eps(static_cast<Eigen::Index>(e.agent())) *= 1.5;
    }
  }

  const double slack = 1e-9 * h.dt;
  const double tau = h.controlled ? p.tau : 0.0;
  std::vector<double> local;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * h.dt;
    if (!(s < tau - slack) || !(s < length - slack)) break;
    local.push_back(s);
  }
  if (tau < length) {
    for (std::size_t k = 0;; ++k) {
      const double s = tau + static_cast<double>(k) * h.dt;
      if (!(s < length - slack)) break;
      local.push_back(s);
    }
  }

  const Eigen::MatrixXd lambda = dynamics_matrix(out.graph);
  const auto nn = static_cast<Eigen::Index>(n);
  out.control = Eigen::VectorXd::Zero(nn);

  if (!h.controlled || length <= tau) {
    std::vector<double> times = local;
    times.push_back(length);
    Trajectory flow = sample_flow(lambda, x_t, times);
    out.x_end = flow.opinions.back();
    for (std::size_t k = 0; k < local.size(); ++k) {
      out.segment.push(start + local[k], flow.opinions[k], flow.controls[k]);
    }
    return out;
  }

  GameParams pw = p;
  pw.x0 = x_t;
  const GameSetup setup = build_setup(out.graph, pw, GameKind::kNonStubborn);

  std::vector<double> prefix;
  std::vector<double> issued;
  for (double s : local) {
    if (s < tau) prefix.push_back(s);
    else issued.push_back(s - tau);
  }
  prefix.push_back(tau);
  Trajectory pre = sample_flow(lambda, x_t, prefix);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nn);
  for (std::size_t k = 0; k + 1 < prefix.size(); ++k) {
    out.segment.push(start + prefix[k], pre.opinions[k], zero);
  }

  const Eigen::VectorXd xbar_tau = pre.opinions.back();
  out.control = rh_control(setup, xbar_tau, 0.0);
  issued.push_back(length - tau);
  EquilibriumPath path(setup, xbar_tau, x_t);
  const auto samples = path.evaluate(issued);
  for (std::size_t k = 0; k + 1 < issued.size(); ++k) {
    out.segment.push(start + tau + issued[k], samples.opinions[k], out.control);
  }
  out.x_end = samples.opinions.back();
  return out;
}

// Windows start at w * sigma; the last one is shortened to end at total_time.
// If partial is given it receives everything sampled so far, also when a
// window throws.
inline Trajectory rh_run(const SocialGraph& g, const Eigen::VectorXd& x0,
                         const GameParams& p, const HorizonConfig& h,
                         Trajectory* partial = nullptr) {
  h.validate(p, g.size());
  Trajectory tr;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd last_control = Eigen::VectorXd::Zero(x0.size());
  const std::size_t windows = static_cast<std::size_t>(
      std::ceil(h.total_time / h.sigma - 1e-9));
  try {
    for (std::size_t w = 0; w < windows; ++w) {
      const double start = static_cast<double>(w) * h.sigma;
      const double length = std::min(h.sigma, h.total_time - start);
      WindowResult res = rh_window(g, x, p, h, start, length);
      tr.extend(res.segment);
      x = std::move(res.x_end);
      last_control = std::move(res.control);
    }
  } catch (...) {
    if (partial) *partial = tr;
    throw;
  }
  tr.push(h.total_time, x, last_control);
  if (partial) *partial = tr;
  return tr;
}

}  // namespace hkgame
