#include <CLI11.hpp>

#include "dynkin/cli/commands.hpp"

int main(int argc, char** argv) {
  namespace cli = dynkin::cli;
  CLI::App app{"g-expectations, g-Snell envelopes and non-zero-sum Dynkin games on event trees"};
  app.require_subcommand(1);

  cli::Options options;
  std::uint64_t budget = 0;
  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"validate", "check lattice, drivers, payoffs and game block"},
      {"stop", "single-agent g-optimal stopping: V0, U, nu_0 and verification"},
      {"game", "Nash equilibrium by iterated best responses, with verification"},
      {"oracle", "brute-force enumeration checks (tiny lattices only)"},
      {"properties", "invariant battery on the scenario and seeded perturbations"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--scenario", options.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", options.out, "result JSON file (default: stdout)");
    sub->add_option("--csv", options.csv, "per-macro-node CSV table (stop, game)");
    sub->add_flag("--exhaustive", options.exhaustive, "also check against exhaustive rule enumeration");
    sub->add_option("--max-iters", options.max_iters, "NEP pair-update cap (default 2 * macro nodes + 4)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--budget", budget, "cap on enumerated stopping rules (default 2^20)")->check(CLI::PositiveNumber);
    sub->add_flag("--timings", options.timings, "add wall-clock timings to the result (breaks byte-identity)");
    sub->add_option("--perturbations", options.perturbations, "properties: number of seeded variants per base case")
        ->check(CLI::NonNegativeNumber);
    sub->callback([&options, &budget, name = c.name] {
      options.command = name;
      if (budget > 0) options.budget = budget;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsageError;
  }
  return cli::run(options);
}
