#pragma once

// Brute-force references for tiny lattices. Shares only the lattice module
// with the engine: expectations, one-step solves and game payoffs are
// re-implemented here.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dynkin/driver.hpp"
#include "dynkin/game.hpp"
#include "dynkin/lattice.hpp"

namespace dynkin::oracle {

struct EnumerationBudget {
  std::uint64_t max_rules = 1u << 20;
};

// 2^(non-terminal macro nodes), as a double so huge trees do not overflow.
double rule_count(const Lattice& lattice);

// Throws BudgetError carrying the count if it exceeds the cap.
void require_budget(const Lattice& lattice, EnumerationBudget budget);

// Every subset of non-terminal macro nodes as a stop set (layer T always
// stop), each exactly once.
void enumerate_stopping_rules(const Lattice& lattice, EnumerationBudget budget,
                              const std::function<void(const StoppingRule&)>& visit);

// The distinct stopping times among the enumerated rules, canonical form.
std::vector<StoppingRule> distinct_stopping_rules(const Lattice& lattice, EnumerationBudget budget);

// Root value of E^g_{0,tau}(xi_tau) by an independent backward recursion
// (closed-form linear solve of each one-step equation).
double reference_value(const Lattice& lattice, const DriverSpec& driver, const StoppingRule& tau,
                       const AdaptedProcess& xi);

// E^g_{k,tau}(xi_tau) on macro layers k >= from_k; stop marks below from_k
// are ignored, so the result is the value of tau v from_k.
AdaptedProcess reference_process(const Lattice& lattice, const DriverSpec& driver, const StoppingRule& tau,
                                 const AdaptedProcess& xi, int from_k);

struct BruteForceValue {
  double value = 0.0;
  StoppingRule rule;
  std::size_t rules_evaluated = 0;
};

// sup over rules of E^g_{0,tau}(xi_tau); ties within 1e-10 go to the rule
// with the smallest expected stopping time.
BruteForceValue brute_force_value(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                                  EnumerationBudget budget = {});

// Node-wise sup over rules tau >= k of E^g_{k,tau}(xi_tau) on macro layer k.
std::vector<double> brute_force_layer(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                                      int k, EnumerationBudget budget = {});

// Pairs where no unilateral deviation improves by more than 1e-10. The pair
// count (square of the rule count) must fit the budget.
std::vector<std::pair<StoppingRule, StoppingRule>> brute_force_nash(const Lattice& lattice, const GameSpec& game,
                                                                    EnumerationBudget budget = {});

bool contains_pair(const std::vector<std::pair<StoppingRule, StoppingRule>>& pairs, const Lattice& lattice,
                   const StoppingRule& tau1, const StoppingRule& tau2);

// Reference payoffs of the game.
double reference_J1(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2);
double reference_J2(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2);

// Classical Snell envelope max(xi_k, E[U_{k+1} | F_k]).
AdaptedProcess classical_snell(const Lattice& lattice, const AdaptedProcess& xi);

// Value process of the classical zero-sum Dynkin game where the maximiser
// gets lower on stopping (ties included) and upper when the minimiser stops
// strictly first: V_T = lower_T, V_k = max(lower_k, min(upper_k, E[V_{k+1}])).
AdaptedProcess zero_sum_value(const Lattice& lattice, const AdaptedProcess& lower, const AdaptedProcess& upper);

}  // namespace dynkin::oracle
