// Command-line entry point: binds scenarios, controllers, solvers, and
// reports into reproducible experiments. See README.md and docs/formats.md.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "agvq/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"agvq - collision-free AGV fleet control via QUBO route selection"};
  app.require_subcommand(1);

  agvq::RunConfig cfg;
  std::string controller, solver;
  std::uint64_t seed = 0;
  int duration = 0, samples = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "concurrent experiment cells")->capture_default_str();
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "seed override (64-bit)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one controller over a scenario");
  simulate->add_option("--scenario", cfg.scenario_path, "scenario file")->required();
  simulate->add_option("--controller", controller, "rule_based | qubo | qubo_priority")->required();
  simulate->add_option("--solver", solver, "brute | sa | ptsa | exact (with --controller qubo)");
  simulate->add_option("--duration", duration, "simulated steps override");
  simulate->add_option("--samples", samples, "solver reads per planning round");
  add_seed(simulate);
  add_common(simulate);

  CLI::App* solve = app.add_subcommand("solve", "solve one dumped QUBO instance");
  solve->add_option("--instance", cfg.instance_path, "instance file (sparse text format)")
      ->required();
  solve->add_option("--solver", solver, "brute | sa | ptsa")->required();
  solve->add_option("--reads", cfg.reads, "sampler reads")->capture_default_str();
  add_seed(solve);
  add_common(solve);

  CLI::App* bench = app.add_subcommand("bench", "TTS benchmark over the contention family");
  bench->add_option("--manifest", cfg.manifest_path, "benchmark manifest (json)")->required();
  add_seed(bench);
  add_common(bench);

  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", cfg.scenario_path, "scenario file")->required();
  validate->add_flag("--dump-routes", cfg.dump_routes, "print the route database");
  add_common(validate);

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) cfg.command = agvq::Command::simulate;
  if (solve->parsed()) cfg.command = agvq::Command::solve;
  if (bench->parsed()) cfg.command = agvq::Command::bench;
  if (validate->parsed()) cfg.command = agvq::Command::validate;
  if (!controller.empty()) cfg.controller = controller;
  if (!solver.empty()) cfg.solver = solver;
  for (CLI::App* sub : {simulate, solve, bench})
    if (sub->parsed() && sub->count("--seed")) cfg.seed = seed;
  if (simulate->parsed() && simulate->count("--duration")) cfg.duration = duration;
  if (simulate->parsed() && simulate->count("--samples")) cfg.samples = samples;

  try {
    return agvq::run_command(cfg);
  } catch (const agvq::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
