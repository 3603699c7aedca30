#pragma once

// Dense matrix functions: exponential, the Gramian-type integral
//   Psi(t) = int_0^t e^{(t-s)A} S e^{(t-s)A^T} ds,
// and LU solves that refuse numerically singular systems.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

#include "hkgame/errors.hpp"

namespace hkgame {

namespace detail {

inline void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
}

}  // namespace detail

// e^{tM}.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& m, double t = 1.0) {
  if (m.rows() != m.cols()) throw DomainError("expm: matrix must be square");
  if (!std::isfinite(t)) throw NonFiniteError("expm: non-finite time");
  detail::require_finite(m, "expm input");
  if (t == 0.0) return Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd out = (t * m).exp();
  detail::require_finite(out, "expm result");
  return out;
}

struct GramianStep {
  Eigen::MatrixXd psi;   // Psi(t)
  Eigen::MatrixXd flow;  // e^{tA}
};

// Van Loan: the (1,1) and (1,2) blocks of exp(h [[A, S], [0, -A^T]]) are
// e^{hA} and int_0^h e^{(h-s)A} S e^{-sA^T} ds, so Psi(h) = F12 F11^T.
// The block is exponentiated over h = t / 2^k with |block| h <= 1/2, then
//   Psi(2h) = Psi(h) + e^{hA} Psi(h) e^{hA^T}
// is applied k times.
inline GramianStep gramian_step(const Eigen::MatrixXd& a,
                                const Eigen::MatrixXd& s, double t) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || s.rows() != n || s.cols() != n) {
    throw DomainError("gramian_block: dimension mismatch");
  }
  if (!std::isfinite(t)) throw NonFiniteError("gramian_block: non-finite time");
  if (t < 0.0) throw DomainError("gramian_block: t must be >= 0");
  detail::require_finite(a, "gramian_block generator");
  detail::require_finite(s, "gramian_block weight");

  if (t == 0.0) {
    return {Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Identity(n, n)};
  }

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = s;
  block.bottomRightCorner(n, n) = -a.transpose();

  const double norm = block.cwiseAbs().colwise().sum().maxCoeff() * t;
  int doublings = 0;
  if (norm > 0.5) doublings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const double h = std::ldexp(t, -doublings);

  const Eigen::MatrixXd f = (h * block).exp();
  GramianStep out;
  out.flow = f.topLeftCorner(n, n);
  out.psi = f.topRightCorner(n, n) * out.flow.transpose();
  for (int k = 0; k < doublings; ++k) {
    out.psi += out.flow * out.psi * out.flow.transpose();
    out.flow = out.flow * out.flow;
  }
  out.psi = 0.5 * (out.psi + out.psi.transpose()).eval();
  detail::require_finite(out.psi, "gramian_block result");
  return out;
}

inline Eigen::MatrixXd gramian_block(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& s, double t) {
  return gramian_step(a, s, t).psi;
}

inline constexpr double kSingularPivotRatio = 1e-13;

// LU factorization of a square system; throws SingularMatrixError when a
// pivot falls below kSingularPivotRatio * |H|_inf.
class LinearSolver {
 public:
  LinearSolver() = default;

  explicit LinearSolver(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols()) throw DomainError("solve_linear: H must be square");
    detail::require_finite(h, "solve_linear matrix");
    n_ = h.rows();
    const double norm =
        n_ == 0 ? 0.0 : h.cwiseAbs().rowwise().sum().maxCoeff();
    lu_.compute(h);
    const Eigen::VectorXd pivots = lu_.matrixLU().diagonal().cwiseAbs();
    for (Eigen::Index k = 0; k < n_; ++k) {
      if (!(pivots(k) > kSingularPivotRatio * norm)) {
        throw SingularMatrixError("matrix is numerically singular (pivot " +
                                  std::to_string(k) + ")");
      }
    }
  }

  Eigen::Index size() const { return n_; }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    if (b.rows() != n_) throw DomainError("solve_linear: row count mismatch");
    return lu_.solve(b);
  }

  // Solves H^T X = B with the same factorization.
  Eigen::MatrixXd solve_transposed(const Eigen::MatrixXd& b) const {
    if (b.rows() != n_) throw DomainError("solve_linear: row count mismatch");
    return lu_.transpose().solve(b);
  }

 private:
  Eigen::Index n_ = 0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline Eigen::MatrixXd solve_linear(const Eigen::MatrixXd& h,
                                    const Eigen::MatrixXd& b) {
  return LinearSolver(h).solve(b);
}

}  // namespace hkgame
