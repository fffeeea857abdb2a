#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynkin/driver.hpp"
#include "dynkin/errors.hpp"
#include "dynkin/lattice.hpp"
#include "dynkin/snell.hpp"

namespace dynkin {

// Two-player non-zero-sum Dynkin game. Player 1 receives X1 when stopping
// first (ties included) and Y1 when player 2 stops strictly first; player 2
// receives X2 when stopping strictly first and Y2 otherwise.
struct GameSpec {
  AdaptedProcess X1, Y1, X2, Y2;  // macro grid
  DriverSpec f1, f2;

  // Throws ValidationError: X <= Y node-wise, X_T = Y_T, finite values, valid drivers.
  void validate(const Lattice& lattice) const;
};

struct Payoff {
  StoppingRule terminal;  // tau1 ^ tau2
  AdaptedProcess values;  // read at the stop nodes of `terminal`, 0 elsewhere
};

Payoff payoff_terminal_first(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1,
                             const StoppingRule& tau2);
Payoff payoff_terminal_second(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1,
                              const StoppingRule& tau2);

double J1(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2);
double J2(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2);

struct BestResponse {
  AdaptedProcess xi;        // switched payoff
  AdaptedProcess W;         // stopped-driver Snell envelope of xi
  StoppingRule tau_tilde;   // inf{k : W_k = xi_k}
  StoppingRule x_contact;   // inf{k : W_k = X_k}, without the cap at the opponent's rule
  double W0 = 0.0;
};

// Player 1 against tau2: xi_k = X1_k 1{k < tau2} + Y1_{tau2} 1{tau2 <= k}, driver f1^{tau2}.
BestResponse best_response_first(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau2);
// Player 2 against tau1: xi_k = X2_k 1{k < tau1} + Y2_{tau1} 1{tau1 <= k}, driver f2^{tau1}.
BestResponse best_response_second(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1);

// tau_{n+1} from (tau_tilde_{n+1}, tau_{n-1}, tau_n):
//   raw:        (tt ^ prev) on {tt ^ prev < opp}, prev otherwise
//   simplified: tt on {tt < opp}, prev on {tt = opp}
StoppingRule update_raw(const Lattice& lattice, const StoppingRule& tau_tilde, const StoppingRule& prev_same,
                        const StoppingRule& opponent);
StoppingRule update_simplified(const Lattice& lattice, const StoppingRule& tau_tilde, const StoppingRule& prev_same,
                               const StoppingRule& opponent);

struct IterationRecord {
  int n = 0;                 // index of tau_n
  StoppingRule tau_tilde;    // equals tau for n = 1, 2
  StoppingRule tau;
  StoppingRule x_contact;    // inf{k : W_k^n = X_k} of the best response (tau for n = 1, 2)
  std::optional<double> W0;  // W_0^n, absent for n = 1, 2
  std::optional<double> J;   // J_1(tau_n, tau_{n-1}) for odd n, J_2(tau_{n-1}, tau_n) for even n
  bool simplified_update = false;
  bool update_forms_agree = true;
};

struct TraceChecks {
  bool applicable = true;  // false for non-default initialisations
  std::size_t monotone_violations = 0;   // tau_{n+2} <= tau_n
  std::size_t cap_violations = 0;       // tau_tilde_n = inf{W = X} ^ tau_{n-1}, hence <= tau_{n-1}
  std::size_t lag_violations = 0;       // tau_tilde_{m+2} <= tau_m
  std::size_t meet_violations = 0;      // tau_tilde_{n+1} = tau_{n+1} ^ tau_n
  std::size_t tie_violations = 0;       // {tau_n = tau_{n-1}} => tau_m = T, m <= n
  std::size_t value_violations = 0;     // J at (tau_n, tau_{n-1}) equals W_0^n
  std::size_t form_mismatches = 0;      // raw vs simplified update

  std::size_t total() const {
    return monotone_violations + cap_violations + lag_violations + meet_violations + tie_violations +
           value_violations + form_mismatches;
  }
};

struct NashResult {
  StoppingRule tau1_star, tau2_star;
  double J1_star = 0.0, J2_star = 0.0;
  std::vector<IterationRecord> trace;
  int iterations = 0;  // pair updates performed
  bool verified = false;
  TraceChecks checks;
};

struct NepOptions {
  int max_iters = 0;  // <= 0: 2 * (macro nodes) + 4
  std::optional<StoppingRule> tau1_init, tau2_init;
};

class IterationError : public Error {
 public:
  IterationError(const std::string& what, std::vector<IterationRecord> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

int default_max_iters(const Lattice& lattice);

// Recursive NEP construction from (tau_1, tau_2) = (T, T) until the pair of
// rules is stationary. Trace invariants are checked into result.checks.
NashResult nep_iterate(const Lattice& lattice, const GameSpec& game, const NepOptions& options = {});

TraceChecks check_trace(const Lattice& lattice, const GameSpec& game, const std::vector<IterationRecord>& trace);

struct NashReport {
  double slack1 = 0.0;  // sup_tau J1(tau, tau2) - J1(tau1, tau2) via the Snell value
  double slack2 = 0.0;
  bool snell_passed = false;
  bool exhaustive_run = false;
  bool exhaustive_passed = true;
  double max_deviation1 = 0.0;  // best enumerated J1(tau, tau2) - J1(tau1, tau2)
  double max_deviation2 = 0.0;
  std::string violation;

  bool passed() const { return snell_passed && exhaustive_passed; }
};

constexpr double kNashTol = 1e-10;

// Snell-mode check plus, if exhaustive, enumeration of every deviation rule
// (throws BudgetError if the rule count exceeds max_rules).
NashReport verify_nash(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1,
                       const StoppingRule& tau2, bool exhaustive, std::uint64_t max_rules = 1u << 20);

struct SwitchReport {
  double max_gap = 0.0;         // max |Ubar - U|
  double frozen_gap = 0.0;      // max |U - Y_mu|, |Ubar - Y_mu| on {mu <= k-1}
  std::size_t frozen_nodes = 0;
  bool passed(double tol = 1e-12) const { return max_gap <= tol && frozen_gap <= tol; }
};

// Snell envelopes under g^mu of the large-inequality payoff
// X_k 1{k <= mu} + Y_mu 1{mu < k} and the strict one X_k 1{k < mu} + Y_mu 1{mu <= k}.
// Throws PreconditionError unless X <= Y and X_T = Y_T.
SwitchReport switch_equivalence_check(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& X,
                                      const AdaptedProcess& Y, const StoppingRule& mu);

// X before mu, Y_mu from mu on; `strict` selects X on {k < mu} instead of {k <= mu}.
AdaptedProcess switched_payoff(const Lattice& lattice, const AdaptedProcess& X, const AdaptedProcess& Y,
                               const StoppingRule& mu, bool strict);

}  // namespace dynkin
