#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "mirrorkit/cli.hpp"
#include "mirrorkit/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mirrorkit: stochastic mirror descent experiments"};
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool strict = false;

  app.add_option("subcommand", subcommand, "run | audit | minimax | risk | implicit | converge | sample-check")
      ->required()
      ->check(CLI::IsMember({"run", "audit", "minimax", "risk", "implicit", "converge", "sample-check"}));
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--seed", seed, "overrides the configured seed");
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_flag("--strict", strict, "treat warnings as errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mirrorkit::kExitError;
  }

  mirrorkit::ExperimentConfig cfg;
  try {
    cfg = mirrorkit::parse_config(config_path, &std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "[mirrorkit] error: " << e.what() << "\n";
    return mirrorkit::kExitError;
  }
  if (seed) cfg.seed = *seed;

  mirrorkit::DispatchOptions opt;
  opt.out_dir = out_dir;
  opt.strict = strict;
  return mirrorkit::dispatch(cfg, subcommand, opt);
}
