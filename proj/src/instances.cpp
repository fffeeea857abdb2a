#include "dynkin/instances.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dynkin::instances {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

void shrink(DriverCoefficients& c) {
  c.a *= 0.5;
  c.b *= 0.5;
  c.b_abs *= 0.5;
  for (auto& g : c.gamma) g *= 0.5;
}

}  // namespace

LatticeSpec random_lattice_spec(Rng& rng, const LatticeLimits& limits) {
  for (;;) {
    LatticeSpec spec;
    spec.macro_periods = uniform_int(rng, 1, limits.max_periods);
    spec.micro_per_period = uniform_int(rng, 1, limits.max_micro);
    const int marks = uniform_int(rng, 0, limits.max_marks);
    for (int j = 0; j < marks; ++j) {
      JumpMark mark;
      mark.id = "j" + std::to_string(j);
      mark.intensity = uniform(rng, 0.1, 0.8) / marks;
      mark.nu_weight = uniform(rng, 0.5, 1.5);
      mark.jump_factor = uniform(rng, 0.7, 0.95);
      spec.jump_marks.push_back(mark);
    }
    spec.state0 = uniform(rng, 80.0, 120.0);
    spec.up = uniform(rng, 1.03, 1.2);
    spec.down = 1.0 / spec.up;
    if (limits.max_nonterminal == 0) return spec;
    if (Lattice(spec).nonterminal_macro_nodes() <= limits.max_nonterminal) return spec;
  }
}

DriverSpec random_driver(Rng& rng, const Lattice& lattice, DriverKind kind, bool per_period) {
  const std::size_t marks = lattice.spec().jump_marks.size();
  const int periods = per_period ? lattice.macro_periods() : 1;
  DriverSpec spec;
  spec.periods.clear();
  for (int p = 0; p < periods; ++p) {
    DriverCoefficients c;
    c.gamma.assign(marks, 0.0);
    switch (kind) {
      case DriverKind::Zero:
        break;
      case DriverKind::Constant:
        c.c0 = uniform(rng, -0.5, 0.5);
        break;
      case DriverKind::Linear:
        c.c0 = uniform(rng, -0.2, 0.2);
        c.a = uniform(rng, -0.3, 0.3);
        c.b = uniform(rng, -0.3, 0.3);
        break;
      case DriverKind::Abs:
        c.b = uniform(rng, -0.2, 0.2);
        c.b_abs = uniform(rng, 0.05, 0.3) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
        break;
      case DriverKind::Jump:
        c.c0 = uniform(rng, -0.1, 0.1);
        for (auto& g : c.gamma) g = uniform(rng, 0.05, 0.4) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
        break;
      case DriverKind::Mixed:
        c.c0 = uniform(rng, -0.2, 0.2);
        c.a = uniform(rng, -0.2, 0.2);
        c.b = uniform(rng, -0.2, 0.2);
        c.b_abs = uniform(rng, -0.2, 0.2);
        for (auto& g : c.gamma) g = uniform(rng, -0.3, 0.3);
        break;
    }
    spec.periods.push_back(std::move(c));
  }
  while (!validate(spec, lattice).passed()) {
    for (auto& c : spec.periods) shrink(c);
  }
  return spec;
}

AdaptedProcess random_process(Rng& rng, const Lattice& lattice, double lo, double hi) {
  AdaptedProcess p = AdaptedProcess::macro(lattice);
  for (auto& layer : p.values)
    for (auto& v : layer) v = uniform(rng, lo, hi);
  return p;
}

AdaptedProcess random_state_payoff(Rng& rng, const Lattice& lattice) {
  const double strike = lattice.spec().state0 * uniform(rng, 0.9, 1.1);
  const bool put = uniform(rng, 0.0, 1.0) < 0.5;
  const double discount = uniform(rng, 0.95, 1.0);
  const double noise = uniform(rng, 0.0, 0.5);
  AdaptedProcess p = AdaptedProcess::macro(lattice);
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      const double s = lattice.node(lattice.macro_to_micro(k), idx).state;
      const double intrinsic = std::max(put ? strike - s : s - strike, 0.0);
      p.at(k, idx) = std::pow(discount, k) * intrinsic + noise * uniform(rng, -1.0, 1.0);
    }
  }
  return p;
}

StoppingRule random_rule(Rng& rng, const Lattice& lattice, double p_stop) {
  auto rule = StoppingRule::at_horizon(lattice);
  for (int k = 0; k < lattice.macro_periods(); ++k)
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) rule.set(k, idx, uniform(rng, 0.0, 1.0) < p_stop);
  return rule;
}

std::pair<AdaptedProcess, AdaptedProcess> random_ordered_pair(Rng& rng, const Lattice& lattice) {
  auto X = uniform(rng, 0.0, 1.0) < 0.5 ? random_process(rng, lattice) : random_state_payoff(rng, lattice);
  auto Y = X;
  const int T = lattice.macro_periods();
  for (int k = 0; k < T; ++k)
    for (auto& v : Y.values[k]) v += uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : uniform(rng, 0.0, 1.5);
  return {std::move(X), std::move(Y)};
}

GameSpec random_game(Rng& rng, const Lattice& lattice, bool zero_drivers) {
  GameSpec game;
  std::tie(game.X1, game.Y1) = random_ordered_pair(rng, lattice);
  std::tie(game.X2, game.Y2) = random_ordered_pair(rng, lattice);
  if (zero_drivers) {
    game.f1 = game.f2 = DriverSpec::zero();
  } else {
    static constexpr DriverKind kinds[] = {DriverKind::Zero, DriverKind::Constant, DriverKind::Linear,
                                           DriverKind::Abs, DriverKind::Jump, DriverKind::Mixed};
    game.f1 = random_driver(rng, lattice, kinds[uniform_int(rng, 0, 5)]);
    game.f2 = random_driver(rng, lattice, kinds[uniform_int(rng, 0, 5)]);
  }
  return game;
}

GameSpec zero_sum_game(Rng& rng, const Lattice& lattice) {
  GameSpec game;
  auto [X, Y] = random_ordered_pair(rng, lattice);
  game.X1 = X;
  game.Y1 = Y;
  game.X2 = Y;
  game.Y2 = X;
  for (auto& layer : game.X2.values)
    for (auto& v : layer) v = -v;
  for (auto& layer : game.Y2.values)
    for (auto& v : layer) v = -v;
  game.f1 = game.f2 = DriverSpec::zero();
  return game;
}

}  // namespace dynkin::instances
