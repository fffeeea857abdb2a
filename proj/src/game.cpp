#include "dynkin/game.hpp"

#include <algorithm>
#include <cmath>

#include "dynkin/gexp.hpp"
#include "dynkin/oracle.hpp"
#include "dynkin/parallel.hpp"

namespace dynkin {

namespace {

void require_shape(const Lattice& lattice, const AdaptedProcess& p, const char* name) {
  if (p.grid != Grid::Macro || p.layers() != lattice.macro_periods() + 1) {
    throw ValidationError(std::string("game payoff ") + name + " must be a macro-grid process on layers 0..T");
  }
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    if (static_cast<int>(p.values[k].size()) != lattice.macro_layer_size(k)) {
      throw ValidationError(std::string("game payoff ") + name + " has wrong node count on layer " +
                            std::to_string(k));
    }
    for (double v : p.values[k]) {
      if (!std::isfinite(v)) throw ValidationError(std::string("game payoff ") + name + " has a non-finite value");
    }
  }
}

void require_ordered(const Lattice& lattice, const AdaptedProcess& X, const AdaptedProcess& Y, const char* xs,
                     const char* ys) {
  const int T = lattice.macro_periods();
  for (int k = 0; k <= T; ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      const auto id = [&] { return lattice.node_id(lattice.macro_to_micro(k), idx); };
      if (X.at(k, idx) > Y.at(k, idx)) {
        throw ValidationError(std::string(xs) + " <= " + ys + " violated at node " + id());
      }
      if (k == T && X.at(k, idx) != Y.at(k, idx)) {
        throw ValidationError(std::string(xs) + "_T = " + ys + "_T violated at node " + id());
      }
    }
  }
}

BestResponse best_response(const Lattice& lattice, const AdaptedProcess& X, const AdaptedProcess& Y,
                           const DriverSpec& f, const StoppingRule& opponent) {
  BestResponse br;
  br.xi = switched_payoff(lattice, X, Y, opponent, /*strict=*/true);
  const auto snell = snell_envelope(lattice, stop_driver(f, opponent), br.xi);
  br.W = snell.U;
  br.W0 = snell.V0;
  br.tau_tilde = snell.nu(lattice, 0);
  auto marks = snell.contact;
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      marks[k][idx] = std::abs(br.W.at(k, idx) - X.at(k, idx)) <= kContactTol ? 1 : 0;
    }
  }
  br.x_contact = canonical(lattice, StoppingRule::from_marks(lattice, std::move(marks)));
  return br;
}

// Builds a rule by deciding, at each macro node still running, whether the
// new time equals k there.
template <typename Decide>
StoppingRule compose(const Lattice& lattice, Decide decide) {
  auto marks = StoppingRule::at_horizon(lattice).marks();
  for (int k = 0; k < lattice.macro_periods(); ++k)
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) marks[k][idx] = decide(k, idx) ? 1 : 0;
  return canonical(lattice, StoppingRule::from_marks(lattice, std::move(marks)));
}

}  // namespace

void GameSpec::validate(const Lattice& lattice) const {
  require_shape(lattice, X1, "X1");
  require_shape(lattice, Y1, "Y1");
  require_shape(lattice, X2, "X2");
  require_shape(lattice, Y2, "Y2");
  require_ordered(lattice, X1, Y1, "X1", "Y1");
  require_ordered(lattice, X2, Y2, "X2", "Y2");
  require_valid(f1, lattice);
  require_valid(f2, lattice);
}

AdaptedProcess switched_payoff(const Lattice& lattice, const AdaptedProcess& X, const AdaptedProcess& Y,
                               const StoppingRule& mu, bool strict) {
  StopView view(lattice, mu);
  AdaptedProcess out = AdaptedProcess::macro(lattice);
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      const int s = view.stop_layer(k, idx);
      const bool switched = strict ? s >= 0 : (s >= 0 && s < k);
      out.at(k, idx) = switched ? Y.at(s, view.stop_index(k, idx)) : X.at(k, idx);
    }
  }
  return out;
}

Payoff payoff_terminal_first(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1,
                             const StoppingRule& tau2) {
  Payoff p{rule_min(lattice, tau1, tau2), AdaptedProcess::macro(lattice)};
  StopView first(lattice, p.terminal);
  StopView v1(lattice, tau1);
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (first.stop_layer(k, idx) != k) continue;
      p.values.at(k, idx) = v1.stop_layer(k, idx) == k ? game.X1.at(k, idx) : game.Y1.at(k, idx);
    }
  }
  return p;
}

Payoff payoff_terminal_second(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1,
                              const StoppingRule& tau2) {
  Payoff p{rule_min(lattice, tau1, tau2), AdaptedProcess::macro(lattice)};
  StopView first(lattice, p.terminal);
  StopView v1(lattice, tau1);
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (first.stop_layer(k, idx) != k) continue;
      // player 1 stops on ties
      p.values.at(k, idx) = v1.stop_layer(k, idx) == k ? game.Y2.at(k, idx) : game.X2.at(k, idx);
    }
  }
  return p;
}

double J1(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2) {
  const auto p = payoff_terminal_first(lattice, game, tau1, tau2);
  return g_expectation(lattice, game.f1, p.terminal, p.values).root();
}

double J2(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1, const StoppingRule& tau2) {
  const auto p = payoff_terminal_second(lattice, game, tau1, tau2);
  return g_expectation(lattice, game.f2, p.terminal, p.values).root();
}

BestResponse best_response_first(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau2) {
  return best_response(lattice, game.X1, game.Y1, game.f1, tau2);
}

BestResponse best_response_second(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1) {
  return best_response(lattice, game.X2, game.Y2, game.f2, tau1);
}

StoppingRule update_raw(const Lattice& lattice, const StoppingRule& tau_tilde, const StoppingRule& prev_same,
                        const StoppingRule& opponent) {
  StopView a(lattice, rule_min(lattice, tau_tilde, prev_same));
  StopView prev(lattice, prev_same);
  StopView opp(lattice, opponent);
  return compose(lattice, [&](int k, int idx) {
    const bool early = a.stop_layer(k, idx) == k && !opp.stopped(k, idx);
    const bool fallback = prev.stop_layer(k, idx) == k && a.stopped(k, idx) && opp.stopped(k, idx) &&
                          a.stop_layer(k, idx) >= opp.stop_layer(k, idx);
    return early || fallback;
  });
}

StoppingRule update_simplified(const Lattice& lattice, const StoppingRule& tau_tilde, const StoppingRule& prev_same,
                               const StoppingRule& opponent) {
  StopView tt(lattice, tau_tilde);
  StopView prev(lattice, prev_same);
  StopView opp(lattice, opponent);
  return compose(lattice, [&](int k, int idx) {
    const bool early = tt.stop_layer(k, idx) == k && !opp.stopped(k, idx);
    const bool fallback = prev.stop_layer(k, idx) == k && tt.stopped(k, idx) && opp.stopped(k, idx) &&
                          tt.stop_layer(k, idx) >= opp.stop_layer(k, idx);
    return early || fallback;
  });
}

int default_max_iters(const Lattice& lattice) {
  std::size_t nodes = 0;
  for (int k = 0; k <= lattice.macro_periods(); ++k) nodes += lattice.macro_layer_size(k);
  return static_cast<int>(2 * nodes + 4);
}

NashResult nep_iterate(const Lattice& lattice, const GameSpec& game, const NepOptions& options) {
  game.validate(lattice);
  const int max_iters = options.max_iters > 0 ? options.max_iters : default_max_iters(lattice);
  const auto horizon = StoppingRule::at_horizon(lattice);
  const bool default_init = !options.tau1_init && !options.tau2_init;

  std::vector<IterationRecord> trace;
  auto seed = [&](int n, const std::optional<StoppingRule>& init) {
    IterationRecord r;
    r.n = n;
    r.tau = init ? canonical(lattice, *init) : horizon;
    r.tau_tilde = r.tau;
    r.x_contact = r.tau;
    trace.push_back(std::move(r));
  };
  seed(1, options.tau1_init);
  seed(2, options.tau2_init);

  auto step = [&](int n) {
    const auto& prev_same = trace[n - 3].tau;
    const auto& opponent = trace[n - 2].tau;
    const bool odd = n % 2 == 1;
    const auto br = odd ? best_response_first(lattice, game, opponent) : best_response_second(lattice, game, opponent);
    const auto raw = update_raw(lattice, br.tau_tilde, prev_same, opponent);
    const auto simplified = update_simplified(lattice, br.tau_tilde, prev_same, opponent);
    IterationRecord r;
    r.n = n;
    r.tau_tilde = br.tau_tilde;
    r.x_contact = br.x_contact;
    r.simplified_update = n > 4;
    r.tau = r.simplified_update ? simplified : raw;
    r.update_forms_agree = raw == simplified;
    r.W0 = br.W0;
    r.J = odd ? J1(lattice, game, r.tau, opponent) : J2(lattice, game, opponent, r.tau);
    trace.push_back(std::move(r));
  };

  NashResult result;
  for (int it = 1; it <= max_iters; ++it) {
    const int n = 2 * it + 1;
    step(n);
    step(n + 1);
    result.iterations = it;
    if (trace[n - 1].tau == trace[n - 3].tau && trace[n].tau == trace[n - 2].tau) {
      result.tau1_star = trace[n - 1].tau;
      result.tau2_star = trace[n].tau;
      result.J1_star = J1(lattice, game, result.tau1_star, result.tau2_star);
      result.J2_star = J2(lattice, game, result.tau1_star, result.tau2_star);
      result.checks = check_trace(lattice, game, trace);
      result.checks.applicable = default_init;
      result.trace = std::move(trace);
      const auto report = verify_nash(lattice, game, result.tau1_star, result.tau2_star, false);
      result.verified = report.passed() && (!default_init || result.checks.total() == 0);
      return result;
    }
  }
  throw IterationError("nep_iterate: no stationary pair after " + std::to_string(max_iters) + " iterations",
                       std::move(trace));
}

TraceChecks check_trace(const Lattice& lattice, const GameSpec& game, const std::vector<IterationRecord>& trace) {
  TraceChecks c;
  const int T = lattice.macro_periods();
  std::vector<std::vector<int>> times;  // times[n - 1] per path
  std::vector<std::vector<int>> tilde;
  for (const auto& r : trace) {
    times.push_back(path_times(lattice, r.tau));
    tilde.push_back(path_times(lattice, r.tau_tilde));
  }
  const std::size_t paths = times.front().size();
  auto at = [](const std::vector<std::vector<int>>& v, int n) -> const std::vector<int>& { return v[n - 1]; };

  for (std::size_t i = 2; i < trace.size(); ++i) {
    const int n = trace[i].n;
    const auto& r = trace[i];
    const auto x_cap = path_times(lattice, rule_min(lattice, r.x_contact, trace[i - 1].tau));
    for (std::size_t p = 0; p < paths; ++p) {
      if (at(times, n)[p] > at(times, n - 2)[p]) ++c.monotone_violations;
      if (at(tilde, n)[p] > at(times, n - 1)[p] || at(tilde, n)[p] != x_cap[p]) ++c.cap_violations;
      if (at(tilde, n)[p] > at(times, n - 2)[p]) ++c.lag_violations;
      if (at(tilde, n)[p] != std::min(at(times, n)[p], at(times, n - 1)[p])) ++c.meet_violations;
    }
    if (r.W0 && r.J && std::abs(*r.W0 - *r.J) > kNashTol) ++c.value_violations;
    if (!r.update_forms_agree) ++c.form_mismatches;
  }
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const int n = trace[i].n;
    for (std::size_t p = 0; p < paths; ++p) {
      if (at(times, n)[p] != at(times, n - 1)[p]) continue;
      for (int m = 1; m <= n; ++m) {
        if (at(times, m)[p] != T) {
          ++c.tie_violations;
          break;
        }
      }
    }
  }
  (void)game;
  return c;
}

NashReport verify_nash(const Lattice& lattice, const GameSpec& game, const StoppingRule& tau1,
                       const StoppingRule& tau2, bool exhaustive, std::uint64_t max_rules) {
  NashReport report;
  const double j1 = J1(lattice, game, tau1, tau2);
  const double j2 = J2(lattice, game, tau1, tau2);
  report.slack1 = best_response_first(lattice, game, tau2).W0 - j1;
  report.slack2 = best_response_second(lattice, game, tau1).W0 - j2;
  report.snell_passed = report.slack1 <= kNashTol && report.slack2 <= kNashTol;
  if (report.slack1 > kNashTol) {
    report.violation = "player 1 can improve by " + std::to_string(report.slack1) + " (Snell value above J1)";
  } else if (report.slack2 > kNashTol) {
    report.violation = "player 2 can improve by " + std::to_string(report.slack2) + " (Snell value above J2)";
  }
  if (!exhaustive) return report;

  const auto rules = oracle::distinct_stopping_rules(lattice, {max_rules});
  report.exhaustive_run = true;
  std::vector<double> d1(rules.size()), d2(rules.size());
  const int n = static_cast<int>(rules.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (int i = 0; i < n; ++i) {
    d1[i] = J1(lattice, game, rules[i], tau2) - j1;
    d2[i] = J2(lattice, game, tau1, rules[i]) - j2;
  }
  report.max_deviation1 = *std::max_element(d1.begin(), d1.end());
  report.max_deviation2 = *std::max_element(d2.begin(), d2.end());
  report.exhaustive_passed = report.max_deviation1 <= kNashTol && report.max_deviation2 <= kNashTol;
  if (!report.exhaustive_passed && report.violation.empty()) {
    report.violation = report.max_deviation1 > kNashTol
                           ? "player 1 deviation improves J1 by " + std::to_string(report.max_deviation1)
                           : "player 2 deviation improves J2 by " + std::to_string(report.max_deviation2);
  }
  return report;
}

SwitchReport switch_equivalence_check(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& X,
                                      const AdaptedProcess& Y, const StoppingRule& mu) {
  try {
    require_ordered(lattice, X, Y, "X", "Y");
  } catch (const ValidationError& e) {
    throw PreconditionError(std::string("switch_equivalence_check: ") + e.what());
  }
  const auto stopped = stop_driver(driver, mu);
  const auto bar = snell_envelope(lattice, stopped, switched_payoff(lattice, X, Y, mu, false));
  const auto strict = snell_envelope(lattice, stopped, switched_payoff(lattice, X, Y, mu, true));
  StopView view(lattice, mu);
  SwitchReport report;
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      report.max_gap = std::max(report.max_gap, std::abs(bar.U.at(k, idx) - strict.U.at(k, idx)));
      const int s = view.stop_layer(k, idx);
      if (s >= 0 && s <= k - 1) {
        const double y_mu = Y.at(s, view.stop_index(k, idx));
        report.frozen_gap = std::max({report.frozen_gap, std::abs(strict.U.at(k, idx) - y_mu),
                                      std::abs(bar.U.at(k, idx) - y_mu)});
        ++report.frozen_nodes;
      }
    }
  }
  return report;
}

}  // namespace dynkin
