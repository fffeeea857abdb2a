#include "dynkin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "dynkin/errors.hpp"
#include "dynkin/parallel.hpp"

namespace dynkin::oracle {

namespace {

constexpr double kTieTol = 1e-10;

using Marks = std::vector<std::vector<std::uint8_t>>;

// First stop layer/index at or before each macro node, from parent links.
struct FirstStop {
  std::vector<std::vector<int>> layer, index;
};

FirstStop first_stop(const Lattice& lattice, const StoppingRule& rule) {
  const int T = lattice.macro_periods();
  FirstStop fs;
  fs.layer.resize(T + 1);
  fs.index.resize(T + 1);
  for (int k = 0; k <= T; ++k) {
    const int n = lattice.macro_layer_size(k);
    fs.layer[k].assign(n, -1);
    fs.index[k].assign(n, -1);
    for (int idx = 0; idx < n; ++idx) {
      if (k > 0) {
        const int p = lattice.macro_parent(k, idx);
        if (fs.layer[k - 1][p] >= 0) {
          fs.layer[k][idx] = fs.layer[k - 1][p];
          fs.index[k][idx] = fs.index[k - 1][p];
          continue;
        }
      }
      if (k == T || rule.stops(k, idx)) {
        fs.layer[k][idx] = k;
        fs.index[k][idx] = idx;
      }
    }
  }
  return fs;
}

}  // namespace

// Each one-step equation
//   y = E[Y'] + delta (c0 + a y + b z + b_abs |z| + sum gamma_j nu_j l_j)
// is linear in y once (z, l) are fixed, so it is solved in closed form.
AdaptedProcess reference_process(const Lattice& lattice, const DriverSpec& driver, const StoppingRule& tau,
                                 const AdaptedProcess& xi, int from_k) {
  const int T = lattice.macro_periods();
  const int m = lattice.micro_per_period();
  const double delta = lattice.delta();
  const auto& marks_spec = lattice.spec().jump_marks;
  const auto branches = lattice.branches();

  auto marks = tau.marks();
  for (int k = 0; k < from_k; ++k) std::fill(marks[k].begin(), marks[k].end(), 0);
  const auto fs = first_stop(lattice, StoppingRule::from_marks(lattice, std::move(marks)));

  AdaptedProcess out = AdaptedProcess::macro(lattice);
  std::vector<double> next(lattice.macro_layer_size(T));
  for (int idx = 0; idx < lattice.macro_layer_size(T); ++idx) {
    next[idx] = xi.at(fs.layer[T][idx], fs.index[T][idx]);
    out.at(T, idx) = next[idx];
  }
  for (int k = T - 1; k >= from_k; --k) {
    const auto& g = driver.at(k);
    std::vector<double> cur;
    for (int i = m * (k + 1) - 1; i >= m * k; --i) {
      cur.assign(lattice.layer_size(i), 0.0);
      for (int idx = 0; idx < lattice.layer_size(i); ++idx) {
        const int anchor = i == m * k ? idx : lattice.node(i, idx).anchor;
        if (fs.layer[k][anchor] >= 0) {
          cur[idx] = xi.at(fs.layer[k][anchor], fs.index[k][anchor]);
          continue;
        }
        const auto kids = lattice.child_indices(i, idx);
        double e = 0.0, zs = 0.0, jumps = 0.0;
        for (std::size_t b = 0; b < kids.size(); ++b) {
          const double v = next[kids[b]];
          e += branches[b].prob * v;
          zs += branches[b].prob * v * branches[b].dW;
        }
        for (std::size_t j = 0; j < marks_spec.size(); ++j) {
          const double q = marks_spec[j].intensity * delta;
          if (q <= 0.0) continue;
          double s = 0.0;
          for (std::size_t b = 0; b < kids.size(); ++b) {
            const double hit = branches[b].jump == static_cast<int>(j) ? 1.0 : 0.0;
            s += branches[b].prob * next[kids[b]] * (hit - q);
          }
          jumps += g.gamma_at(j) * marks_spec[j].nu_weight * (s / q);
        }
        const double z = zs / delta;
        cur[idx] = (e + delta * (g.c0 + g.b * z + g.b_abs * std::abs(z) + jumps)) / (1.0 - delta * g.a);
      }
      next.swap(cur);
    }
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) out.at(k, idx) = next[idx];
  }
  return out;
}

namespace {

// E[V_{k+1} | F_k] across the m micro steps of period k.
std::vector<double> period_mean(const Lattice& lattice, int k, const std::vector<double>& macro_next) {
  const int m = lattice.micro_per_period();
  std::vector<double> next = macro_next, cur;
  std::vector<double> kids_v;
  for (int i = m * (k + 1) - 1; i >= m * k; --i) {
    cur.assign(lattice.layer_size(i), 0.0);
    for (int idx = 0; idx < lattice.layer_size(i); ++idx) {
      const auto kids = lattice.child_indices(i, idx);
      kids_v.resize(kids.size());
      for (std::size_t b = 0; b < kids.size(); ++b) kids_v[b] = next[kids[b]];
      cur[idx] = conditional_expectation(lattice.branches(), kids_v);
    }
    next.swap(cur);
  }
  return next;
}

double expected_stop(const Lattice& lattice, const StoppingRule& rule) {
  AdaptedProcess layer_index = AdaptedProcess::macro(lattice);
  for (int k = 0; k <= lattice.macro_periods(); ++k)
    for (auto& v : layer_index.values[k]) v = k;
  return reference_value(lattice, DriverSpec::zero(), rule, layer_index);
}

void game_payoff(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2,
                 bool first, StoppingRule& terminal, AdaptedProcess& values) {
  const int T = lattice.macro_periods();
  const auto s1 = first_stop(lattice, tau1);
  const auto s2 = first_stop(lattice, tau2);
  Marks marks(T + 1);
  values = AdaptedProcess::macro(lattice);
  for (int k = 0; k <= T; ++k) {
    marks[k].assign(lattice.macro_layer_size(k), 0);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      const bool one = s1.layer[k][idx] == k;
      const bool two = s2.layer[k][idx] == k;
      const bool before = (s1.layer[k][idx] >= 0 && s1.layer[k][idx] < k) || (s2.layer[k][idx] >= 0 && s2.layer[k][idx] < k);
      if (before || !(one || two)) continue;
      marks[k][idx] = 1;
      if (first) {
        values.at(k, idx) = one ? game.X1.at(k, idx) : game.Y1.at(k, idx);
      } else {
        values.at(k, idx) = (two && !one) ? game.X2.at(k, idx) : game.Y2.at(k, idx);
      }
    }
  }
  terminal = StoppingRule::from_marks(lattice, std::move(marks));
}

}  // namespace

double rule_count(const Lattice& lattice) {
  return std::pow(2.0, static_cast<double>(lattice.nonterminal_macro_nodes()));
}

void require_budget(const Lattice& lattice, EnumerationBudget budget) {
  const double count = rule_count(lattice);
  if (count > static_cast<double>(budget.max_rules)) {
    throw BudgetError("enumeration refused: 2^" + std::to_string(lattice.nonterminal_macro_nodes()) +
                          " stopping rules exceed the budget of " + std::to_string(budget.max_rules),
                      count);
  }
}

void enumerate_stopping_rules(const Lattice& lattice, EnumerationBudget budget,
                              const std::function<void(const StoppingRule&)>& visit) {
  require_budget(lattice, budget);
  const int T = lattice.macro_periods();
  std::vector<std::pair<int, int>> free_nodes;
  for (int k = 0; k < T; ++k)
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) free_nodes.emplace_back(k, idx);
  const std::uint64_t count = std::uint64_t{1} << free_nodes.size();
  auto rule = StoppingRule::at_horizon(lattice);
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    for (std::size_t n = 0; n < free_nodes.size(); ++n) {
      rule.set(free_nodes[n].first, free_nodes[n].second, (bits >> n) & 1u);
    }
    visit(rule);
  }
}

std::vector<StoppingRule> distinct_stopping_rules(const Lattice& lattice, EnumerationBudget budget) {
  std::map<Marks, std::size_t> seen;
  std::vector<StoppingRule> out;
  enumerate_stopping_rules(lattice, budget, [&](const StoppingRule& rule) {
    auto c = canonical(lattice, rule);
    if (seen.emplace(c.marks(), out.size()).second) out.push_back(std::move(c));
  });
  return out;
}

double reference_value(const Lattice& lattice, const DriverSpec& driver, const StoppingRule& tau,
                       const AdaptedProcess& xi) {
  return reference_process(lattice, driver, tau, xi, 0).at(0, 0);
}

std::vector<double> brute_force_layer(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                                      int k, EnumerationBudget budget) {
  const auto rules = distinct_stopping_rules(lattice, budget);
  std::vector<double> best(lattice.macro_layer_size(k), -INFINITY);
  for (const auto& rule : rules) {
    const auto y = reference_process(lattice, driver, rule, xi, k);
    for (std::size_t idx = 0; idx < best.size(); ++idx) best[idx] = std::max(best[idx], y.at(k, static_cast<int>(idx)));
  }
  return best;
}

BruteForceValue brute_force_value(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                                  EnumerationBudget budget) {
  const auto rules = distinct_stopping_rules(lattice, budget);
  const int n = static_cast<int>(rules.size());
  std::vector<double> values(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (int r = 0; r < n; ++r) values[r] = reference_value(lattice, driver, rules[r], xi);

  const double best = *std::max_element(values.begin(), values.end());
  BruteForceValue out;
  out.value = best;
  out.rules_evaluated = rules.size();
  double best_time = 0.0;
  bool have = false;
  for (int r = 0; r < n; ++r) {
    if (values[r] < best - kTieTol) continue;
    const double t = expected_stop(lattice, rules[r]);
    if (!have || t < best_time) {
      have = true;
      best_time = t;
      out.rule = rules[r];
    }
  }
  return out;
}

double reference_J1(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2) {
  StoppingRule terminal;
  AdaptedProcess values;
  game_payoff(lattice, game, tau1, tau2, true, terminal, values);
  return reference_value(lattice, game.f1, terminal, values);
}

double reference_J2(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2) {
  StoppingRule terminal;
  AdaptedProcess values;
  game_payoff(lattice, game, tau1, tau2, false, terminal, values);
  return reference_value(lattice, game.f2, terminal, values);
}

std::vector<std::pair<StoppingRule, StoppingRule>> brute_force_nash(const Lattice& lattice, const GameSpec& game,
                                                                    EnumerationBudget budget) {
  const double count = rule_count(lattice);
  if (count * count > static_cast<double>(budget.max_rules)) {
    throw BudgetError("nash enumeration refused: 2^" + std::to_string(2 * lattice.nonterminal_macro_nodes()) +
                          " rule pairs exceed the budget of " + std::to_string(budget.max_rules),
                      count * count);
  }
  const auto rules = distinct_stopping_rules(lattice, budget);
  const int n = static_cast<int>(rules.size());
  std::vector<double> j1(static_cast<std::size_t>(n) * n), j2(j1.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      j1[a * n + b] = reference_J1(lattice, game, rules[a], rules[b]);
      j2[a * n + b] = reference_J2(lattice, game, rules[a], rules[b]);
    }
  }
  std::vector<double> best1(n, -INFINITY), best2(n, -INFINITY);  // best1[b]: max_a J1(a, b)
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      best1[b] = std::max(best1[b], j1[a * n + b]);
      best2[a] = std::max(best2[a], j2[a * n + b]);
    }
  }
  std::vector<std::pair<StoppingRule, StoppingRule>> out;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (j1[a * n + b] >= best1[b] - kTieTol && j2[a * n + b] >= best2[a] - kTieTol) {
        out.emplace_back(rules[a], rules[b]);
      }
    }
  }
  return out;
}

bool contains_pair(const std::vector<std::pair<StoppingRule, StoppingRule>>& pairs, const Lattice& lattice,
                   const StoppingRule& tau1, const StoppingRule& tau2) {
  const auto a = canonical(lattice, tau1);
  const auto b = canonical(lattice, tau2);
  return std::any_of(pairs.begin(), pairs.end(), [&](const auto& p) { return p.first == a && p.second == b; });
}

AdaptedProcess classical_snell(const Lattice& lattice, const AdaptedProcess& xi) {
  const int T = lattice.macro_periods();
  AdaptedProcess U = AdaptedProcess::macro(lattice);
  U.values[T] = xi.values[T];
  for (int k = T - 1; k >= 0; --k) {
    const auto cont = period_mean(lattice, k, U.values[k + 1]);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) U.at(k, idx) = std::max(xi.at(k, idx), cont[idx]);
  }
  return U;
}

AdaptedProcess zero_sum_value(const Lattice& lattice, const AdaptedProcess& lower, const AdaptedProcess& upper) {
  const int T = lattice.macro_periods();
  AdaptedProcess V = AdaptedProcess::macro(lattice);
  V.values[T] = lower.values[T];
  for (int k = T - 1; k >= 0; --k) {
    const auto cont = period_mean(lattice, k, V.values[k + 1]);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      V.at(k, idx) = std::max(lower.at(k, idx), std::min(upper.at(k, idx), cont[idx]));
    }
  }
  return V;
}

}  // namespace dynkin::oracle
