// docr: simulate | regret | tradeoff | oracle

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "docr/commands.hpp"

namespace {

// Flag values are kept as text and applied through the config setters, so
// flags and config files share one validation path.
struct Overrides {
  std::map<std::string, std::string> values;

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

docr::RunConfig resolve(const std::string& config_path, const Overrides& ov) {
  docr::RunConfig cfg;
  if (!config_path.empty()) cfg = docr::load_config(config_path, cfg);
  for (const auto& [key, value] : ov.values) {
    try {
      docr::set_config_value(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw docr::ConfigError("--" + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly-optimistic context reuse: simulation, regret and tradeoff experiments"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  app.add_option("--config", config_path, "key = value config file (flags override it)");
  ov.add(app, "--d", "d", "context dimension");
  ov.add(app, "--T", "T", "horizon");
  ov.add(app, "--c", "c", "creation cost");
  ov.add(app, "--p", "p", "fixed-p creation probability");
  ov.add(app, "--alpha", "alpha", "confidence width multiplier");
  ov.add(app, "--lambda", "lambda", "ridge regularizer");
  ov.add(app, "--sigma", "sigma", "observation noise std");
  ov.add(app, "--policy", "policy", "doubly_optimistic | fixed_p");
  ov.add(app, "--epochs", "epochs", "independent repetitions");
  ov.add(app, "--seed", "seed", "master seed");
  ov.add(app, "--jobs", "jobs", "worker threads");
  ov.add(app, "--out", "out", "output root directory");
  app.fallthrough();

  auto* simulate = app.add_subcommand("simulate", "run one episode and write its trace");
  auto* regret = app.add_subcommand("regret", "regret curves and log-log slopes");
  auto* tradeoff = app.add_subcommand("tradeoff", "cost/mismatch sweep against fixed-p baselines");
  auto* oracle = app.add_subcommand("oracle", "offline benchmark values for an instance");
  ov.add(*oracle, "--instance", "instance", "instance JSON (contexts + W, or a generator)");
  ov.add(*oracle, "--methods", "methods", "comma list of kmeans,covering,bruteforce_h,exhaustive_o");

  CLI11_PARSE(app, argc, argv);

  try {
    const docr::RunConfig cfg = resolve(config_path, ov);
    const std::string name = app.get_subcommands().front()->get_name();
    const auto dir = docr::make_run_dir(cfg.output_dir, name);
    std::cout << "output: " << dir.string() << "\n";
    if (simulate->parsed()) docr::cmd_simulate(cfg, dir, std::cout);
    if (regret->parsed()) docr::cmd_regret(cfg, dir, std::cout);
    if (tradeoff->parsed()) docr::cmd_tradeoff(cfg, dir, std::cout);
    if (oracle->parsed()) docr::cmd_oracle(cfg, dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
