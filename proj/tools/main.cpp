#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pspin/common.hpp"
#include "pspin/version.hpp"

using namespace pspin;

int main(int argc, char** argv) {
  CLI::App app{"pspin: numerical laboratory for pure spherical p-spin optimization"};
  app.set_version_flag("--version", std::string(kContentHash));

  std::string preset = "fast-ci";
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  std::vector<std::string> sets;

  app.add_option("--preset", preset, "preset: fast-ci | planted | paper-regime");
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "base RNG seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--jobs", jobs, "replica worker threads");
  app.add_option("--set", sets, "extra overrides as key=value")->take_all();

  std::string mode_flag;
  auto* spectrum = app.add_subcommand("spectrum", "tangential Hessian spectrum");
  auto* optimize = app.add_subcommand("optimize", "energy ascent study");
  auto* follow = app.add_subcommand("follow", "state-following pipeline");
  auto* stability = app.add_subcommand("stability", "stability / overlap meter");
  auto* events = app.add_subcommand("events", "S_all probability study");
  auto* chain_verify = app.add_subcommand("chain-verify", "chain covariance check");
  auto* calibrate = app.add_subcommand("calibrate", "measure the K_N constant");
  for (auto* sc : {spectrum, optimize, follow, stability, events, chain_verify,
                   calibrate}) {
    sc->add_option("--mode", mode_flag, "subcommand mode");
    sc->fallthrough();
  }
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = preset_config(preset);
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value");
      apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_set) cfg.seed = seed;
    if (jobs > 0) cfg.jobs = jobs;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!mode_flag.empty()) cfg.mode = mode_flag;

    if (spectrum->parsed()) {
      cfg.experiment = "spectrum";
      if (mode_flag.empty()) cfg.mode = "random";
      return cli::cmd_spectrum(cfg);
    }
    if (optimize->parsed()) {
      cfg.experiment = "optimize";
      if (mode_flag.empty()) cfg.mode = "gd";
      return cli::cmd_optimize(cfg);
    }
    if (follow->parsed()) {
      cfg.experiment = "follow";
      if (mode_flag.empty()) cfg.mode = "planted";
      return cli::cmd_follow(cfg);
    }
    if (stability->parsed()) {
      cfg.experiment = "stability";
      return cli::cmd_stability(cfg);
    }
    if (events->parsed()) {
      cfg.experiment = "events";
      return cli::cmd_events(cfg);
    }
    if (chain_verify->parsed()) {
      cfg.experiment = "chain-verify";
      return cli::cmd_chain_verify(cfg);
    }
    if (calibrate->parsed()) {
      cfg.experiment = "calibrate";
      return cli::cmd_calibrate(cfg);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const MemoryBudgetExceeded& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
