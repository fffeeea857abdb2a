#pragma once

// Seeded random problem instances for property tests, the acceptance suite
// and the `properties` command.

#include <cstdint>
#include <random>
#include <utility>

#include "dynkin/driver.hpp"
#include "dynkin/game.hpp"
#include "dynkin/lattice.hpp"

namespace dynkin::instances {

using Rng = std::mt19937_64;

struct LatticeLimits {
  int max_periods = 4;
  int max_micro = 2;
  int max_marks = 1;
  std::size_t max_nonterminal = 0;  // 0: no cap on non-terminal macro nodes
};

LatticeSpec random_lattice_spec(Rng& rng, const LatticeLimits& limits = {});

enum class DriverKind { Zero, Constant, Linear, Abs, Jump, Mixed };

// Random coefficients, shrunk toward zero until the driver validates on the
// lattice. Constant drivers are c0 only; Abs always has b_abs != 0; Jump has
// gamma != 0 when the lattice has a jump mark with positive intensity.
DriverSpec random_driver(Rng& rng, const Lattice& lattice, DriverKind kind, bool per_period = false);

// Uniform node values in [lo, hi] on the macro grid.
AdaptedProcess random_process(Rng& rng, const Lattice& lattice, double lo = -1.0, double hi = 2.0);

// (K - S)^+ or (S - K)^+ of the node state, discounted by rate^k, plus noise.
AdaptedProcess random_state_payoff(Rng& rng, const Lattice& lattice);

// Every non-terminal macro node stops with probability p_stop.
StoppingRule random_rule(Rng& rng, const Lattice& lattice, double p_stop = 0.3);

// X <= Y node-wise with X_T = Y_T.
std::pair<AdaptedProcess, AdaptedProcess> random_ordered_pair(Rng& rng, const Lattice& lattice);

// Random non-zero-sum game; zero drivers if `zero_drivers`.
GameSpec random_game(Rng& rng, const Lattice& lattice, bool zero_drivers = false);

// X1 = X, Y1 = Y, X2 = -Y, Y2 = -X with zero drivers.
GameSpec zero_sum_game(Rng& rng, const Lattice& lattice);

}  // namespace dynkin::instances
