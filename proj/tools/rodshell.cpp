#include "rodshell/log.hpp"
#include "rodshell/simulation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

using namespace rodshell;

namespace {

struct Source {
  std::string config, scenario;
  std::optional<int> log_interval, threads;
  std::optional<unsigned long long> seed;
  std::string out_dir;
};

void add_source(CLI::App* app, Source& s) {
  auto* c = app->add_option("-c,--config", s.config, "scenario config file (JSON)");
  auto* n = app->add_option("-s,--scenario", s.scenario, "bundled scenario name");
  c->excludes(n);
}

void add_overrides(CLI::App* app, Source& s) {
  app->add_option("--log-interval", s.log_interval, "log every n-th step")->check(CLI::PositiveNumber);
  app->add_option("--seed", s.seed, "seed for randomized initial perturbations");
  app->add_option("--threads", s.threads, "assembly threads")->check(CLI::PositiveNumber);
}

ScenarioConfig resolve(const Source& s) {
  if (s.config.empty() && s.scenario.empty()) throw ConfigError("give --config or --scenario");
  ScenarioConfig cfg = s.config.empty() ? bundled_scenario(s.scenario) : load_config(s.config);
  if (s.log_interval) cfg.output.log_interval = *s.log_interval;
  if (s.seed) cfg.seed = *s.seed;
  if (s.threads) cfg.sim.threads = *s.threads;
  if (!s.out_dir.empty()) cfg.output.directory = s.out_dir;
  return cfg;
}

int dry_run(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  std::cout << cfg.name << ": ok (" << sim.robot().n_nodes() << " nodes, " << sim.robot().ndof() << " dofs, "
            << sim.stepper().steps_total() << " steps)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rod and shell soft-robot simulator"};
  app.require_subcommand(1);

  Source src;
  bool dry = false;
  std::string resolved_out;

  auto* run = app.add_subcommand("run", "run a simulation and write logs");
  add_source(run, src);
  add_overrides(run, src);
  run->add_option("-o,--out-dir", src.out_dir, "output directory (default: output.directory)");
  run->add_flag("--dry-run", dry, "build and validate without stepping");

  auto* validate = app.add_subcommand("validate", "check a config and build the model without stepping");
  add_source(validate, src);
  add_overrides(validate, src);
  validate->add_flag("--dry-run", dry, "accepted for symmetry with run; validate never steps");

  auto* list = app.add_subcommand("list-scenarios", "print bundled scenario names");

  auto* res = app.add_subcommand("resolve-config", "print the config with every default filled in");
  add_source(res, src);
  add_overrides(res, src);
  res->add_option("-o,--output", resolved_out, "write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& n : scenario_names()) {
        const ScenarioConfig c = bundled_scenario(n);
        std::cout << n << (c.experimental ? "  [experimental]" : "") << "  " << c.description << "\n";
      }
      return 0;
    }
    const ScenarioConfig cfg = resolve(src);
    if (res->parsed()) {
      if (resolved_out.empty()) {
        std::cout << dump_config(cfg);
      } else {
        std::ofstream out(resolved_out);
        if (!out) throw ConfigError("cannot write '" + resolved_out + "'");
        out << dump_config(cfg);
      }
      return 0;
    }
    if (validate->parsed() || dry) return dry_run(cfg);

    if (cfg.experimental) warn(cfg.name + " is experimental");
    Simulation sim(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions opts;
    opts.out_dir = cfg.output.directory;
    const RunSummary sum = sim.run(opts);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!sum.ok) {
      std::cerr << "error: " << sum.error << "\n";
      std::cerr << "partial logs (" << sum.frames << " frames) in " << opts.out_dir << "\n";
      return 1;
    }
    std::cout << cfg.name << ": " << sum.steps << " steps, " << sum.frames << " frames, " << wall << " s -> "
              << opts.out_dir << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
