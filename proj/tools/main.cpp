#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace attctl::cli;

int main(int argc, char** argv) {
  CLI::App app{"Adaptive attitude tracking simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 configuration error, 2 unwinding guard breached,\n"
      "3 non-finite state, 4 verification failure.");

  CommonOptions opts;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--set", opts.sets, "Override a config key, key=value (repeatable)");
    cmd->add_option("--seed", seed, "Override the scenario seed");
    cmd->add_option("--jobs", opts.jobs, "Worker threads (0: all cores)")->capture_default_str();
  };

  std::string scenario;
  auto* run = app.add_subcommand("run", "Simulate one scenario, write trajectory and metrics");
  run->add_option("scenario", scenario, "Scenario file")->required();
  add_common(run);

  bool corrupt = false;
  auto* verify = app.add_subcommand("verify", "Run the identity and lemma checks");
  verify->add_flag("--corrupt-mu2", corrupt, "Perturb a mu2 coefficient (the check must fail)");

  std::vector<std::string> files;
  auto* compare = app.add_subcommand("compare", "Run several scenarios and tabulate norms and RMS");
  compare->add_option("scenarios", files, "Scenario files (two or more)");
  add_common(compare);

  std::string base;
  std::vector<std::string> grid;
  auto* sweep = app.add_subcommand("sweep", "Fan a scenario out over a parameter grid");
  sweep->add_option("scenario", base, "Base scenario file")->required();
  sweep->add_option("--grid", grid, "Axis key=v1,v2,... (repeatable)");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }
  for (auto* cmd : {run, compare, sweep})
    if (cmd->count("--seed")) opts.seed = seed;

  if (*run) return cmd_run(scenario, opts, std::cout, std::cerr);
  if (*verify) return cmd_verify(corrupt, std::cout, std::cerr);
  if (*compare) return cmd_compare(files, opts, std::cout, std::cerr);
  return cmd_sweep(base, grid, opts, std::cout, std::cerr);
}
