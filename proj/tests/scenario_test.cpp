#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hkgame/scenario.hpp"
#include "test_support.hpp"

using namespace hkgame;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hkgame_scenario_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HKGAME_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string field_of(const ConfigError& e) { return e.field(); }

}  // namespace

TEST(ParseConfig, Fields) {
  const ScenarioConfig cfg = parse_config(
      "# scenario\n"
      "mode = rh-second   # trailing comment\n"
      "t_f=5\n"
      "tau = 0.25\n"
      "sigma = 1\n"
      "eps = 0.5, 0.6\n"
      "r = 2\n"
      "x0 = -1, 1\n"
      "graph = g.txt\n"
      "eps_autogrow = true\n"
      "seed = 9\n"
      "\n");
  EXPECT_EQ(cfg.mode, ScenarioMode::kRecedingSecond);
  EXPECT_EQ(cfg.t_f, 5.0);
  EXPECT_EQ(cfg.tau, 0.25);
  EXPECT_EQ(cfg.eps, (std::vector<double>{0.5, 0.6}));
  EXPECT_EQ(cfg.r, (std::vector<double>{2.0}));
  EXPECT_EQ(cfg.x0, "-1, 1");
  EXPECT_EQ(cfg.graph, "g.txt");
  EXPECT_TRUE(cfg.eps_autogrow);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.horizon_total(), 5.0);
  EXPECT_TRUE(parse_config("eps = min").eps_minimal);
}

TEST(ParseConfig, Errors) {
  try {
    parse_config("bogus = 1");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(field_of(e), "bogus");
  }
  EXPECT_THROW(parse_config("t_f = ten"), ConfigError);
  EXPECT_THROW(parse_config("mode = sideways"), ConfigError);
  EXPECT_THROW(parse_config("just words"), ConfigError);
  EXPECT_THROW(parse_config("eps_autogrow = maybe"), ConfigError);
  EXPECT_THROW(parse_config("r = 1,,2"), ConfigError);
}

TEST(ResolveScenario, Broadcasting) {
  ScenarioConfig cfg;
  cfg.r = {0.5};
  const ResolvedScenario rs = resolve_scenario(cfg);
  EXPECT_EQ(rs.graph.size(), 34u);
  EXPECT_EQ(rs.params.r, Eigen::VectorXd::Constant(34, 0.5));
  EXPECT_LE((rs.params.x0 - testing_support::zachary_x0()).cwiseAbs().maxCoeff(), 1e-15);

  cfg.r = {1.0, 2.0, 3.0};
  try {
    resolve_scenario(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(field_of(e), "r");
  }
  cfg.r = {1.0};
  cfg.omega = {1.5};
  EXPECT_THROW(resolve_scenario(cfg), ConfigError);
  cfg.omega = {0.0};
  cfg.tau = 10.0;
  EXPECT_THROW(resolve_scenario(cfg), ConfigError);
  cfg.tau = 0.5;
  cfg.mode = ScenarioMode::kRecedingFixed;
  cfg.sigma = 0.5;
  EXPECT_THROW(resolve_scenario(cfg), ConfigError);
  cfg.graph = "/nonexistent/graph.txt";
  EXPECT_THROW(resolve_scenario(cfg), ConfigError);
}

TEST(MinConnectivityEps, Examples) {
  const double z = min_connectivity_eps(zachary(), uniform_opinions(34), NeighborMode::kFixed);
  EXPECT_GT(z, 1.1);
  EXPECT_LE(z, 1.2);
  EXPECT_DOUBLE_EQ(min_connectivity_eps(testing_support::two_node(), Eigen::Vector2d(-1, 1),
                                        NeighborMode::kFixed),
                   2.0);
  EXPECT_DOUBLE_EQ(min_connectivity_eps(zachary(), Eigen::VectorXd::Constant(34, 0.4),
                                        NeighborMode::kSecondNeighborhood),
                   0.01);
  EXPECT_THROW(min_connectivity_eps(testing_support::two_node(), Eigen::Vector2d(-1, 5),
                                    NeighborMode::kFixed),
               NoFeasibleEpsError);
}

TEST(UniformOpinions, Grid) {
  const Eigen::VectorXd x = uniform_opinions(34);
  EXPECT_EQ(x(0), -1.0);
  EXPECT_NEAR(x(33), 0.98, 1e-15);
  const Eigen::VectorXd y = uniform_opinions(3);
  EXPECT_LT(y(2), 1.0);
  EXPECT_EQ(y(0), -1.0);
}

TEST(Presets, Catalog) {
  const std::string cat = preset_catalog();
  EXPECT_NE(cat.find("fig2a: baseline eps=1.2"), std::string::npos);
  EXPECT_NE(cat.find("fig3c: openloop-stubborn omega=1"), std::string::npos);
  const auto presets = list_presets();
  EXPECT_EQ(presets.size(), 15u);
  for (const auto& p : presets) {
    bool has_r = false;
    for (const auto& f : p.fields) {
      if (f.key == "r") {
        has_r = true;
        EXPECT_EQ(f.value, "1");
        EXPECT_FALSE(f.reported);
      }
    }
    EXPECT_TRUE(has_r) << p.name;
    EXPECT_NO_THROW(p.config()) << p.name;
  }
  std::size_t marks = 0;
  for (std::size_t pos = 0; (pos = cat.find("r=1 [defaulted=1.0 (not reported)]", pos)) != std::string::npos; ++pos) {
    ++marks;
  }
  EXPECT_EQ(marks, presets.size());
  EXPECT_FALSE(find_preset("fig9z").has_value());
  EXPECT_EQ(find_preset("fig4c")->config().tau, 0.6);
}

TEST(Csv, RoundTrip) {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::kOpenLoopStubborn;
  cfg.omega = {0.4};
  cfg.tau = 0.3;
  cfg.t_f = 2.0;
  cfg.dt = 0.05;
  const ResolvedScenario rs = resolve_scenario(cfg);
  const Trajectory tr = run_trajectory(rs);
  for (bool controls : {false, true}) {
    const auto rows = parse_csv(trajectory_csv(tr, controls));
    ASSERT_EQ(rows.size(), tr.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      ASSERT_EQ(rows[k].size(), 35u);
      EXPECT_EQ(rows[k][0], tr.times[k]);
      const Eigen::VectorXd& v = controls ? tr.controls[k] : tr.opinions[k];
      for (Eigen::Index i = 0; i < 34; ++i) EXPECT_EQ(rows[k][i + 1], v(i));
    }
  }
  EXPECT_EQ(trajectory_csv(tr, false).substr(0, 10), "t,x_0,x_1,");
}

TEST(RunScenario, ArtifactsAndDeterminism) {
  const fs::path dir = scratch_dir("determinism");
  ScenarioConfig cfg = find_preset("fig4b")->config();
  cfg.total_time = 3.0;
  cfg.out = (dir / "a").string();
  const ScenarioResult a = run_scenario(cfg);
  cfg.out = (dir / "b").string();
  run_scenario(cfg);
  for (const char* f : {"trajectory.csv", "controls.csv", "summary.txt"}) {
    const std::string x = slurp(dir / "a" / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(a.trajectory.times.back(), 3.0);
  const std::string summary = slurp(dir / "a" / "summary.txt");
  EXPECT_NE(summary.find("mode=rh-fixed\n"), std::string::npos);
  EXPECT_NE(summary.find("outcome=" + a.outcome.label() + "\n"), std::string::npos);
}

TEST(RunScenario, OpenLoopCosts) {
  ScenarioConfig cfg;
  cfg.graph = "builtin:zachary";
  cfg.mode = ScenarioMode::kOpenLoopNonStubborn;
  cfg.out = scratch_dir("costs").string();
  const ScenarioResult res = run_scenario(cfg);
  ASSERT_EQ(res.costs.size(), 34u);
  for (const auto& c : res.costs) EXPECT_GT(c.total(), 0.0);
}

TEST(RunScenario, PartialArtifactsOnError) {
  const fs::path dir = scratch_dir("partial");
  std::ofstream(dir / "star.txt") << "0 1\n1 2\n1 3\n";
  ScenarioConfig cfg;
  cfg.graph = (dir / "star.txt").string();
  cfg.mode = ScenarioMode::kBaseline;
  cfg.x0 = "0, 0.2, 1, 1";
  cfg.eps = {0.22, 0.85, 0.85, 0.85};
  cfg.sigma = 0.5;
  cfg.t_f = 2.0;
  cfg.total_time = 4.0;
  cfg.out = (dir / "out").string();
  EXPECT_THROW(run_scenario(cfg), EmptyNeighborhoodError);
  const std::string summary = slurp(dir / "out" / "summary.txt");
  EXPECT_NE(summary.find("error="), std::string::npos);
  EXPECT_GT(parse_csv(slurp(dir / "out" / "trajectory.csv")).size(), 1u);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  const fs::path log = dir / "log.txt";
  EXPECT_EQ(run_cli("preset list", log), 0);
  EXPECT_NE(slurp(log).find("fig2a: baseline eps=1.2"), std::string::npos);

  EXPECT_EQ(run_cli("min-eps", log), 0);
  EXPECT_EQ(slurp(log), "1.20\n");

  EXPECT_EQ(run_cli("preset nope", log), 2);
  EXPECT_EQ(run_cli("run --mode sideways --out " + (dir / "x").string(), log), 2);
  EXPECT_EQ(run_cli("run --frobnicate", log), 2);

  std::ofstream(dir / "bad.cfg") << "mode = rh-fixed\neps = 0.01\ntotal_time = 2\nout = "
                                 << (dir / "bad").string() << "\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.cfg").string(), log), 4);
  EXPECT_TRUE(fs::exists(dir / "bad" / "summary.txt"));

  std::ofstream(dir / "ok.cfg") << "mode = openloop-nonstubborn\nt_f = 2\ndt = 0.1\nout = "
                                << (dir / "ok").string() << "\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "ok.cfg").string(), log), 0);
  EXPECT_EQ(slurp(log).rfind("outcome=", 0), 0u);
  EXPECT_EQ(run_cli("run --config " + (dir / "ok.cfg").string() + " --r 0", log), 2);

  std::ofstream(dir / "two.txt") << "0 1\n";
  std::ofstream(dir / "verify.cfg") << "graph = " << (dir / "two.txt").string()
                                    << "\nmode = openloop-nonstubborn\nt_f = 1\nx0 = -1, 1\n";
  EXPECT_EQ(run_cli("verify --config " + (dir / "verify.cfg").string(), log), 0);
  const std::string report = slurp(log);
  EXPECT_NE(report.find("forward_pass=true"), std::string::npos);
  EXPECT_EQ(report.substr(report.size() - 10), "pass=true\n");
}
