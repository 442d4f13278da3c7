#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "codedba/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Coded energy-efficient beam-alignment: design, simulation and detector checks"};
  app.require_subcommand(1);

  std::string config_path;
  codedba::cli::CommandOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", opts.out, "output file (stdout when omitted)");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--threads", opts.threads, "worker threads for Monte Carlo trials")
        ->check(CLI::PositiveNumber);
  };

  auto* optimize = app.add_subcommand(
      "optimize", "water-filling beamwidth allocation (CSV) and summary JSON");
  auto* sweep = app.add_subcommand(
      "sweep",
      "Monte Carlo sweep over R_min: each rate sets phi_d, re-solves the allocation and "
      "reports average power vs spectral efficiency");
  auto* detector = app.add_subcommand(
      "validate-detector", "signal-level check of mis-detection/false-alarm rates");
  for (auto* sub : {optimize, sweep, detector}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : codedba::cli::kConfigError;
  }

  for (auto* sub : {optimize, sweep, detector}) {
    if (sub->parsed() && sub->count("--seed") > 0) opts.seed = seed;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return codedba::cli::run_command(command, config_path, opts, std::cout);
}
