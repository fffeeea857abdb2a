#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dynkin::cli {

// Exit statuses.
constexpr int kOk = 0;
constexpr int kVerificationFailed = 1;  // includes validation failures
constexpr int kUsageError = 2;          // bad arguments, unreadable or malformed scenario, inapplicable command
constexpr int kBudgetRefused = 3;
constexpr int kSolverFailure = 4;       // Picard non-convergence, NEP iteration cap

struct Options {
  std::string command;  // validate | stop | game | oracle | properties
  std::string scenario;
  std::string out;  // result JSON; stdout when empty
  std::string csv;  // optional per-node table
  bool exhaustive = false;
  int max_iters = 0;
  std::optional<std::uint64_t> budget;
  bool timings = false;
  int perturbations = 8;  // properties: seeded random variants on top of the scenario itself
  bool quiet = false;     // no error line on stderr
};

// Runs one command, writes the result, returns the exit status. Errors are
// reported on stderr and, when --out is given, as an "error" object there.
int run(const Options& options);

}  // namespace dynkin::cli
