#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hkgame/hkgame.hpp"

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kOther = 1;
constexpr int kConfig = 2;
constexpr int kSingular = 3;
constexpr int kEmptyNeighborhood = 4;

struct Overrides {
  std::optional<std::string> mode, tf, tau, sigma, dt, total_time, eps, r, omega, out, seed;
  bool eps_autogrow = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "scenario mode");
    cmd->add_option("--tf", tf, "game horizon t_f");
    cmd->add_option("--tau", tau, "input delay");
    cmd->add_option("--sigma", sigma, "receding window length");
    cmd->add_option("--dt", dt, "output sampling step");
    cmd->add_option("--total-time", total_time, "simulated duration");
    cmd->add_option("--eps", eps, "confidence bound: scalar, comma list or min");
    cmd->add_option("--r", r, "control weights: scalar or comma list");
    cmd->add_option("--omega", omega, "stubbornness: scalar or comma list");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "seed for randomized checks");
    cmd->add_flag("--eps-autogrow", eps_autogrow, "grow an empty agent's eps by 1.5x");
  }

  void apply(hkgame::ScenarioConfig& cfg) const {
    auto set = [&](const char* key, const std::optional<std::string>& v) {
      if (v) hkgame::set_config_field(cfg, key, *v);
    };
    set("mode", mode);
    set("t_f", tf);
    set("tau", tau);
    set("sigma", sigma);
    set("dt", dt);
    set("total_time", total_time);
    set("eps", eps);
    set("r", r);
    set("omega", omega);
    set("out", out);
    set("seed", seed);
    if (eps_autogrow) cfg.eps_autogrow = true;
  }
};

void print_outcome(const hkgame::ScenarioResult& res, const std::string& out) {
  std::printf("outcome=%s max_spread=%s samples=%zu out=%s\n", res.outcome.label().c_str(),
              hkgame::format_double(res.outcome.max_spread).c_str(), res.trajectory.size(),
              out.c_str());
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const hkgame::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const hkgame::SingularMatrixError& e) {
    std::fprintf(stderr, "singular: %s\n", e.what());
    return kSingular;
  } catch (const hkgame::EmptyNeighborhoodError& e) {
    std::fprintf(stderr, "empty neighborhood: %s\n", e.what());
    return kEmptyNeighborhood;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash opinion-game simulator"};
  app.require_subcommand(1);

  std::string run_config;
  Overrides run_over;
  auto* run = app.add_subcommand("run", "run a scenario from a config file");
  run->add_option("--config", run_config, "key = value scenario file");
  run_over.attach(run);

  std::string preset_name;
  Overrides preset_over;
  auto* preset = app.add_subcommand("preset", "run a named preset, or 'list' the catalog");
  preset->add_option("name", preset_name, "preset name or list")->required();
  preset_over.attach(preset);

  std::string mineps_graph = "builtin:zachary";
  std::string mineps_mode = "fixed";
  std::string mineps_x0 = "uniform";
  auto* mineps = app.add_subcommand("min-eps", "smallest eps keeping every neighborhood non-empty");
  mineps->add_option("--graph", mineps_graph, "builtin:zachary or edge-list path");
  mineps->add_option("--mode", mineps_mode, "fixed, complete or second");
  mineps->add_option("--x0", mineps_x0, "uniform, comma list or file:PATH");

  std::string verify_config;
  Overrides verify_over;
  auto* verify = app.add_subcommand("verify", "run the verification suite on a scenario");
  verify->add_option("--config", verify_config, "key = value scenario file")->required();
  verify_over.attach(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  if (run->parsed()) {
    return guarded([&] {
      hkgame::ScenarioConfig cfg;
      if (!run_config.empty()) cfg = hkgame::load_config(run_config);
      run_over.apply(cfg);
      const auto res = hkgame::run_scenario(cfg);
      print_outcome(res, cfg.out);
    });
  }

  if (preset->parsed()) {
    return guarded([&] {
      if (preset_name == "list") {
        std::fputs(hkgame::preset_catalog().c_str(), stdout);
        return;
      }
      const auto p = hkgame::find_preset(preset_name);
      if (!p) throw hkgame::ConfigError("preset", "unknown preset '" + preset_name + "'");
      hkgame::ScenarioConfig cfg = p->config();
      preset_over.apply(cfg);
      const auto res = hkgame::run_scenario(cfg);
      print_outcome(res, cfg.out);
    });
  }

  if (mineps->parsed()) {
    return guarded([&] {
      const auto mode = hkgame::parse_neighbor_mode(mineps_mode);
      if (!mode) throw hkgame::ConfigError("mode", "expected fixed, complete or second");
      hkgame::ScenarioConfig cfg;
      hkgame::set_config_field(cfg, "graph", mineps_graph);
      hkgame::set_config_field(cfg, "x0", mineps_x0);
      const auto rs = hkgame::resolve_scenario(cfg);
      const double eps = hkgame::min_connectivity_eps(rs.graph, rs.params.x0, *mode);
      std::printf("%.2f\n", eps);
    });
  }

  if (verify->parsed()) {
    return guarded([&] {
      hkgame::ScenarioConfig cfg = hkgame::load_config(verify_config);
      verify_over.apply(cfg);
      const auto rep = hkgame::verify_scenario(hkgame::resolve_scenario(cfg));
      std::fputs(rep.str().c_str(), stdout);
      if (rep.entries().back().second != "true") throw hkgame::Error("verification failed");
    });
  }
  return kOther;
}
