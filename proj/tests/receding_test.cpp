#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hkgame/receding.hpp"
#include "test_support.hpp"

using namespace hkgame;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

HorizonConfig config(std::size_t n, double sigma, double total, double eps,
                     NeighborMode mode = NeighborMode::kFixed) {
  HorizonConfig h;
  h.sigma = sigma;
  h.total_time = total;
  h.mode = mode;
  h.eps = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), eps);
  return h;
}

}  // namespace

TEST(RhControl, ConsensusGivesZero) {
  std::mt19937_64 rng(2);
  const SocialGraph g = testing_support::random_connected_graph(rng, 6);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(6, 0.3);
  const GameSetup s = build_setup(g, GameParams::with_defaults(c, 3.0, 0.4), GameKind::kNonStubborn);
  EXPECT_LE(max_abs(rh_control(s, c)), 1e-14);
}

TEST(RhControl, EqualsOpenLoopAtWindowStart) {
  const GameParams p = GameParams::with_defaults(Eigen::Vector2d(-1, 1), 1.0, 0.0);
  const GameSetup s = build_setup(testing_support::two_node(), p, GameKind::kNonStubborn);
  const Eigen::VectorXd u = rh_control(s, p.x0);
  EXPECT_NEAR(u(0), nash_control_nonstubborn(s, p.x0, 0.0, 0), 1e-14);
  EXPECT_NEAR(u(1), nash_control_nonstubborn(s, p.x0, 0.0, 1), 1e-14);

  std::mt19937_64 rng(3);
  const SocialGraph g = testing_support::random_connected_graph(rng, 7);
  const GameParams pd = GameParams::with_defaults(testing_support::random_vector(rng, 7, 1.0), 4.0, 0.5);
  const GameSetup sd = build_setup(g, pd, GameKind::kNonStubborn);
  const Eigen::VectorXd x_tau = sd.flow_tau * pd.x0;
  const Eigen::VectorXd ud = rh_control(sd, x_tau);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_NEAR(ud(static_cast<Eigen::Index>(i)), nash_control_nonstubborn(sd, x_tau, 0.0, i), 1e-12);
  }
}

TEST(RhControl, RejectsStubbornSetup) {
  GameParams p = GameParams::with_defaults(Eigen::Vector2d(-1, 1), 1.0, 0.0);
  const GameSetup s = build_setup(testing_support::two_node(), p, GameKind::kStubborn);
  EXPECT_THROW(rh_control(s, p.x0), DomainError);
}

TEST(RhWindow, SingleWindowMatchesOpenLoop) {
  const SocialGraph g = zachary();
  for (double tau : {0.0, 0.4}) {
    const GameParams p = GameParams::with_defaults(testing_support::zachary_x0(), 10.0, tau);
    HorizonConfig h = config(34, 10.0, 10.0, std::numeric_limits<double>::infinity());
    h.dt = 0.05;
    const Trajectory rh = rh_run(g, p.x0, p, h);
    const Trajectory ol = sample_trajectory(build_setup(g, p, GameKind::kNonStubborn), p, h.dt);
    ASSERT_EQ(rh.size(), ol.size());
    for (std::size_t k = 0; k < rh.size(); ++k) {
      EXPECT_NEAR(rh.times[k], ol.times[k], 1e-12);
      EXPECT_LE(max_abs(rh.opinions[k] - ol.opinions[k]), 1e-10) << k;
    }
  }
}

TEST(RhWindow, DelayedPrefixIsUncontrolled) {
  const SocialGraph g = zachary();
  const GameParams p = GameParams::with_defaults(testing_support::zachary_x0(), 10.0, 0.6);
  HorizonConfig h = config(34, 1.0, 1.0, 1.2);
  const WindowResult w = rh_window(g, p.x0, p, h);
  const Eigen::MatrixXd lam = dynamics_matrix(w.graph);
  std::size_t prefix = 0;
  for (std::size_t k = 0; k < w.segment.size(); ++k) {
    const double t = w.segment.times[k];
    if (t < p.tau) {
      ++prefix;
      EXPECT_EQ(w.segment.controls[k].cwiseAbs().maxCoeff(), 0.0);
      EXPECT_LE(max_abs(w.segment.opinions[k] - expm(lam, t) * p.x0), 1e-13);
    } else {
      EXPECT_EQ(w.segment.controls[k], w.control);
    }
  }
  EXPECT_EQ(prefix, 60u);
  EXPECT_GT(w.control.cwiseAbs().maxCoeff(), 0.0);
}

TEST(RhRun, WindowsJoinContinuously) {
  const SocialGraph g = zachary();
  const GameParams p = GameParams::with_defaults(testing_support::zachary_x0(), 10.0, 0.3);
  HorizonConfig h = config(34, 1.0, 3.5, 1.2);
  const Trajectory tr = rh_run(g, p.x0, p, h);
  EXPECT_EQ(tr.times.front(), 0.0);
  EXPECT_EQ(tr.times.back(), 3.5);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    EXPECT_GT(tr.times[k], tr.times[k - 1]);
    EXPECT_LE(tr.times[k] - tr.times[k - 1], h.dt * (1 + 1e-9));
    // No jumps across window boundaries beyond what one step of flow allows.
    EXPECT_LE(max_abs(tr.opinions[k] - tr.opinions[k - 1]), 0.1);
  }

  // Restarting each window from the last state reproduces the same samples.
  Eigen::VectorXd x = p.x0;
  Trajectory manual;
  for (int w = 0; w < 4; ++w) {
    const double start = w;
    const double length = std::min(1.0, 3.5 - start);
    WindowResult res = rh_window(g, x, p, h, start, length);
    manual.extend(res.segment);
    x = res.x_end;
  }
  ASSERT_EQ(manual.size() + 1, tr.size());
  for (std::size_t k = 0; k < manual.size(); ++k) {
    EXPECT_EQ(manual.opinions[k], tr.opinions[k]);
  }
  EXPECT_EQ(x, tr.opinions.back());
}

TEST(RhRun, ShortLastWindowBelowDelay) {
  const SocialGraph g = testing_support::path3();
  const GameParams p = GameParams::with_defaults(Eigen::Vector3d(-1, 0, 1), 2.0, 0.5);
  HorizonConfig h = config(3, 1.0, 2.3, 5.0);
  const Trajectory tr = rh_run(g, p.x0, p, h);
  EXPECT_EQ(tr.times.back(), 2.3);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.times[k] >= 2.0 - 1e-12) {
      EXPECT_EQ(tr.controls[k].cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(RhRun, BaselineIsPiecewiseFlow) {
  const SocialGraph g = zachary();
  const GameParams p = GameParams::with_defaults(testing_support::zachary_x0(), 10.0, 0.0);
  HorizonConfig h = config(34, 1.0, 2.0, std::numeric_limits<double>::infinity());
  h.controlled = false;
  const Trajectory tr = rh_run(g, p.x0, p, h);
  const Eigen::MatrixXd lam = dynamics_matrix(g);
  for (std::size_t k = 0; k < tr.size(); k += 10) {
    EXPECT_LE(max_abs(tr.opinions[k] - expm(lam, tr.times[k]) * p.x0), 1e-12);
    EXPECT_EQ(tr.controls[k].cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RhRun, PartialTrajectoryOnEmptyNeighborhood) {
  const SocialGraph g = load_edge_list("0 1\n1 2");
  const GameParams p = GameParams::with_defaults(Eigen::Vector3d(0.0, 0.2, 0.45), 2.0, 0.0);
  HorizonConfig h = config(3, 1.0, 6.0, 0.5);
  h.eps(1) = 0.01;
  Trajectory partial;
  try {
    rh_run(g, p.x0, p, h, &partial);
    FAIL() << "expected EmptyNeighborhoodError";
  } catch (const EmptyNeighborhoodError& e) {
    EXPECT_EQ(e.agent(), 1u);
    EXPECT_DOUBLE_EQ(e.time(), 0.0);
  }
  EXPECT_TRUE(partial.empty());

  // Star around agent 1: the hub is pulled toward the far leaves and leaves
  // agent 0 behind after the first window.
  const SocialGraph star = load_edge_list("0 1\n1 2\n1 3");
  const GameParams q = GameParams::with_defaults(Eigen::Vector4d(0.0, 0.2, 1.0, 1.0), 2.0, 0.0);
  HorizonConfig hq = config(4, 0.5, 4.0, 0.85);
  hq.eps(0) = 0.22;
  hq.controlled = false;
  try {
    rh_run(star, q.x0, q, hq, &partial);
    FAIL() << "expected EmptyNeighborhoodError";
  } catch (const EmptyNeighborhoodError& e) {
    EXPECT_EQ(e.agent(), 0u);
    EXPECT_GT(e.time(), 0.0);
    ASSERT_FALSE(partial.empty());
    EXPECT_EQ(partial.times.front(), 0.0);
    EXPECT_LT(partial.times.back(), e.time());
    EXPECT_GT(partial.times.back(), e.time() - hq.dt * 1.5);
  }
}

TEST(RhRun, AutogrowRecoversEmptyNeighborhood) {
  const SocialGraph g = testing_support::path3();
  const GameParams p = GameParams::with_defaults(Eigen::Vector3d(0.0, 0.1, 5.0), 2.0, 0.0);
  HorizonConfig h = config(3, 1.0, 1.0, 0.2);
  EXPECT_THROW(rh_window(g, p.x0, p, h), EmptyNeighborhoodError);
  h.eps_autogrow = true;
  const WindowResult w = rh_window(g, p.x0, p, h);
  EXPECT_GE(w.eps(2), 4.9);
  EXPECT_EQ(w.eps(0), 0.2);
  EXPECT_EQ(w.eps(1), 0.2);
  EXPECT_EQ(h.eps(2), 0.2);
  EXPECT_EQ(w.graph[2], (std::vector<std::size_t>{1}));
}

TEST(HorizonConfig, Validation) {
  const GameParams p = GameParams::with_defaults(Eigen::Vector2d(-1, 1), 1.0, 0.5);
  HorizonConfig h = config(2, 0.5, 2.0, 1.0);
  EXPECT_THROW(h.validate(p, 2), DomainError);  // sigma must exceed tau
  h.sigma = 1.5;
  EXPECT_THROW(h.validate(p, 2), DomainError);  // sigma beyond t_f
  h.sigma = 1.0;
  h.total_time = 0.5;
  EXPECT_THROW(h.validate(p, 2), DomainError);
  h.total_time = 2.0;
  EXPECT_NO_THROW(h.validate(p, 2));
  h.eps(0) = 0.0;
  EXPECT_THROW(h.validate(p, 2), DomainError);
}
