#include "dynkin/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dynkin/cli/scenario.hpp"
#include "dynkin/errors.hpp"
#include "dynkin/game.hpp"
#include "dynkin/gexp.hpp"
#include "dynkin/oracle.hpp"
#include "dynkin/parallel.hpp"
#include "dynkin/snell.hpp"

namespace dynkin::cli {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kCheckTol = 1e-10;
constexpr double kAutoExhaustiveRules = 1024;  // game: exhaustive Nash check without --exhaustive up to this count

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Timer {
  Json entries = Json::object();
  Clock::time_point t0 = Clock::now();
  void lap(const char* name) {
    const auto now = Clock::now();
    entries[name] = std::chrono::duration<double>(now - t0).count();
    t0 = now;
  }
};

Json layers_json(const AdaptedProcess& p) {
  Json out = Json::array();
  for (const auto& layer : p.values) out.push_back(layer);
  return out;
}

Json region_json(const Lattice& lattice, const StoppingRule& rule) {
  Json out = Json::array();
  const auto ids = stop_region_ids(lattice, canonical(lattice, rule));
  for (std::size_t k = 0; k < ids.size(); ++k) out.push_back(Json{{"layer", k}, {"stop_nodes", ids[k]}});
  return out;
}

Json check_json(bool passed, double value, double tol, std::size_t cases = 0) {
  Json j{{"passed", passed}, {"max_violation", value}, {"tolerance", tol}};
  if (cases) j["cases"] = cases;
  return j;
}

Json lattice_json(const Lattice& lattice) {
  return Json{{"macro_periods", lattice.macro_periods()},
              {"micro_per_period", lattice.micro_per_period()},
              {"delta", lattice.delta()},
              {"branches", lattice.branch_count()},
              {"nodes", lattice.node_count()},
              {"nonterminal_macro_nodes", lattice.nonterminal_macro_nodes()}};
}

Json header(const Options& options, const Scenario& scenario) {
  return Json{{"command", options.command}, {"scenario", Json{{"name", scenario.name}, {"hash", scenario.hash}}}};
}

oracle::EnumerationBudget budget_of(const Options& options) {
  oracle::EnumerationBudget b;
  if (options.budget) b.max_rules = *options.budget;
  return b;
}

Lattice build_lattice(const Scenario& scenario) {
  scenario.lattice.validate();
  return Lattice(scenario.lattice);
}

bool is_zero_sum(const GameSpec& game) {
  if (!game.f1.is_zero() || !game.f2.is_zero()) return false;
  for (std::size_t k = 0; k < game.X1.values.size(); ++k) {
    for (std::size_t i = 0; i < game.X1.values[k].size(); ++i) {
      if (game.X1.values[k][i] != -game.Y2.values[k][i] || game.Y1.values[k][i] != -game.X2.values[k][i]) return false;
    }
  }
  return true;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// ---- validate ---------------------------------------------------------------

int cmd_validate(const Options& options, const Scenario& scenario, Json& result) {
  Json checks = Json::array();
  bool ok = true;
  auto add = [&](const std::string& name, bool passed, const std::string& message) {
    checks.push_back(Json{{"name", name}, {"passed", passed}, {"message", message}});
    ok = ok && passed;
  };
  std::optional<Lattice> lattice;
  try {
    lattice.emplace(build_lattice(scenario));
    add("lattice", true, "");
  } catch (const Error& e) {
    add("lattice", false, e.what());
  }
  if (lattice) {
    for (const auto& [name, driver] : scenario.drivers) {
      for (const auto& c : validate(driver, *lattice).checks) add("driver." + name + "." + c.name, c.passed, c.message);
    }
    for (auto it = scenario.payoffs.begin(); it != scenario.payoffs.end(); ++it) {
      try {
        build_payoff(scenario, *lattice, it.key());
        add("payoff." + it.key(), true, "");
      } catch (const Error& e) {
        add("payoff." + it.key(), false, e.what());
      }
    }
    if (scenario.game) {
      try {
        build_game(scenario, *lattice).validate(*lattice);
        parse_rule(scenario.game->tau1_init, *lattice, "game.initialization.tau1");
        parse_rule(scenario.game->tau2_init, *lattice, "game.initialization.tau2");
        add("game", true, "");
      } catch (const Error& e) {
        add("game", false, e.what());
      }
    }
    result["lattice"] = lattice_json(*lattice);
  }
  (void)options;
  result["checks"] = checks;
  result["passed"] = ok;
  return ok ? kOk : kVerificationFailed;
}

// ---- stop -------------------------------------------------------------------

int cmd_stop(const Options& options, const Scenario& scenario, Json& result, Timer& timer) {
  if (!scenario.stopping) throw UsageError("scenario has no 'stopping' block");
  const Lattice lattice = build_lattice(scenario);
  const auto& driver = driver_named(scenario, scenario.stopping->driver);
  require_valid(driver, lattice);
  const auto xi = build_payoff(scenario, lattice, scenario.stopping->payoff);
  timer.lap("setup");

  const auto snell = snell_envelope(lattice, driver, xi);
  const auto nu0 = snell.nu(lattice, 0);
  timer.lap("snell_envelope");

  Json verification = Json::object();
  bool ok = true;
  double opt_gap = 0.0;
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    opt_gap = std::max(opt_gap, verify_optimality(lattice, driver, xi, snell, k).max_gap);
  }
  verification["optimality"] = check_json(opt_gap <= kCheckTol, opt_gap, kCheckTol, lattice.macro_periods() + 1);
  const double residual = snell_recursion_residual(lattice, driver, DriverMask::all(lattice), xi, snell);
  verification["recursion"] = check_json(residual <= 1e-12, residual, 1e-12);
  const auto sm = check_supermartingale(lattice, driver, snell.U);
  verification["supermartingale"] = check_json(sm.supermartingale, std::max(0.0, sm.max_violation), kCheckTol);
  const auto mart = check_supermartingale(lattice, stop_driver(driver, nu0), stopped_process(lattice, snell.U, nu0));
  verification["stopped_martingale"] = check_json(mart.martingale, mart.max_gap, kCheckTol);
  ok = opt_gap <= kCheckTol && residual <= 1e-12 && sm.supermartingale && mart.martingale;
  if (options.exhaustive) {
    const auto bf = oracle::brute_force_value(lattice, driver, xi, budget_of(options));
    const double gap = std::abs(bf.value - snell.V0);
    auto j = check_json(gap <= kCheckTol, gap, kCheckTol);
    j["rules_evaluated"] = bf.rules_evaluated;
    j["brute_force_value"] = bf.value;
    verification["brute_force"] = j;
    ok = ok && gap <= kCheckTol;
  }
  timer.lap("verification");

  result["lattice"] = lattice_json(lattice);
  result["values"] = Json{{"V0", snell.V0}, {"risk0", snell.risk()}, {"U", layers_json(snell.U)}};
  result["stopping_region"] = region_json(lattice, nu0);
  result["verification"] = verification;
  result["passed"] = ok;

  if (!options.csv.empty()) {
    std::ostringstream os;
    os << "layer,node_id,state,U,xi,stop\n";
    StopView view(lattice, nu0);
    for (int k = 0; k <= lattice.macro_periods(); ++k) {
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
        const int i = lattice.macro_to_micro(k);
        os << k << ',' << lattice.node_id(i, idx) << ',' << num(lattice.node(i, idx).state) << ','
           << num(snell.U.at(k, idx)) << ',' << num(xi.at(k, idx)) << ',' << (view.stop_layer(k, idx) == k) << '\n';
      }
    }
    write_text(options.csv, os.str());
  }
  return ok ? kOk : kVerificationFailed;
}

// ---- game -------------------------------------------------------------------

Json trace_json(const Lattice& lattice, const std::vector<IterationRecord>& trace) {
  Json out = Json::array();
  for (const auto& r : trace) {
    Json j{{"n", r.n}, {"player", r.n % 2 == 1 ? 1 : 2}};
    j["update"] = r.n <= 2 ? "init" : (r.simplified_update ? "simplified" : "raw");
    if (r.W0) j["W0"] = *r.W0;
    if (r.J) j["J"] = *r.J;
    j["update_forms_agree"] = r.update_forms_agree;
    j["stop_nodes"] = stop_region_ids(lattice, r.tau);
    out.push_back(j);
  }
  return out;
}

Json checks_json(const TraceChecks& c) {
  return Json{{"applicable", c.applicable},       {"monotone", c.monotone_violations},
              {"cap", c.cap_violations},           {"lag", c.lag_violations},
              {"meet", c.meet_violations},         {"tie", c.tie_violations},
              {"value", c.value_violations},       {"update_forms", c.form_mismatches},
              {"total", c.total()}};
}

NepOptions nep_options(const Options& options, const Scenario& scenario, const Lattice& lattice) {
  NepOptions nep;
  nep.max_iters = options.max_iters;
  nep.tau1_init = parse_rule(scenario.game->tau1_init, lattice, "game.initialization.tau1");
  nep.tau2_init = parse_rule(scenario.game->tau2_init, lattice, "game.initialization.tau2");
  return nep;
}

int cmd_game(const Options& options, const Scenario& scenario, Json& result, Timer& timer) {
  if (!scenario.game) throw UsageError("scenario has no 'game' block");
  const Lattice lattice = build_lattice(scenario);
  const auto game = build_game(scenario, lattice);
  game.validate(lattice);
  const auto nep = nep_options(options, scenario, lattice);
  timer.lap("setup");
  result["lattice"] = lattice_json(lattice);

  NashResult r;
  try {
    r = nep_iterate(lattice, game, nep);
  } catch (const IterationError& e) {
    result["trace"] = trace_json(lattice, e.trace());
    throw;
  }
  timer.lap("nep_iterate");

  const bool exhaustive = options.exhaustive || oracle::rule_count(lattice) <= kAutoExhaustiveRules;
  const auto report = verify_nash(lattice, game, r.tau1_star, r.tau2_star, exhaustive, budget_of(options).max_rules);
  timer.lap("verify_nash");

  Json verification = Json::object();
  Json nash{{"passed", report.passed()}, {"slack1", report.slack1}, {"slack2", report.slack2},
            {"snell_passed", report.snell_passed}, {"tolerance", kNashTol}, {"exhaustive", report.exhaustive_run}};
  if (report.exhaustive_run) {
    nash["max_deviation1"] = report.max_deviation1;
    nash["max_deviation2"] = report.max_deviation2;
    nash["exhaustive_passed"] = report.exhaustive_passed;
  }
  if (!report.violation.empty()) nash["violation"] = report.violation;
  verification["nash"] = nash;
  auto checks = checks_json(r.checks);
  checks["passed"] = !r.checks.applicable || r.checks.total() == 0;
  verification["trace_invariants"] = checks;
  bool ok = r.verified && report.passed();
  if (is_zero_sum(game)) {
    const double v = oracle::zero_sum_value(lattice, game.X1, game.Y1).at(0, 0);
    const double sum = std::abs(r.J1_star + r.J2_star);
    const double gap = std::abs(r.J1_star - v);
    const bool zs_ok = sum <= kCheckTol && gap <= kCheckTol;
    verification["zero_sum"] = Json{{"passed", zs_ok},       {"J1_plus_J2", sum},  {"classical_value", v},
                                    {"value_gap", gap},      {"tolerance", kCheckTol}};
    ok = ok && zs_ok;
  }

  result["values"] = Json{{"J1", r.J1_star}, {"J2", r.J2_star}, {"risk1", -r.J1_star}, {"risk2", -r.J2_star},
                          {"iterations", r.iterations}, {"max_iters", nep.max_iters > 0 ? nep.max_iters : default_max_iters(lattice)}};
  result["stopping_region"] = Json{{"tau1", region_json(lattice, r.tau1_star)}, {"tau2", region_json(lattice, r.tau2_star)}};
  result["trace"] = trace_json(lattice, r.trace);
  result["verification"] = verification;
  result["passed"] = ok;

  if (!options.csv.empty()) {
    std::ostringstream os;
    os << "layer,node_id,state,X1,Y1,X2,Y2,stop1,stop2\n";
    StopView v1(lattice, r.tau1_star), v2(lattice, r.tau2_star);
    for (int k = 0; k <= lattice.macro_periods(); ++k) {
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
        const int i = lattice.macro_to_micro(k);
        os << k << ',' << lattice.node_id(i, idx) << ',' << num(lattice.node(i, idx).state) << ','
           << num(game.X1.at(k, idx)) << ',' << num(game.Y1.at(k, idx)) << ',' << num(game.X2.at(k, idx)) << ','
           << num(game.Y2.at(k, idx)) << ',' << (v1.stop_layer(k, idx) == k) << ',' << (v2.stop_layer(k, idx) == k)
           << '\n';
      }
    }
    write_text(options.csv, os.str());
  }
  return ok ? kOk : kVerificationFailed;
}

// ---- oracle -----------------------------------------------------------------

int cmd_oracle(const Options& options, const Scenario& scenario, Json& result, Timer& timer) {
  const Lattice lattice = build_lattice(scenario);
  const auto budget = budget_of(options);
  oracle::require_budget(lattice, budget);
  result["lattice"] = lattice_json(lattice);
  result["rule_count"] = oracle::rule_count(lattice);
  bool ok = true;

  if (scenario.stopping) {
    const auto& driver = driver_named(scenario, scenario.stopping->driver);
    require_valid(driver, lattice);
    const auto xi = build_payoff(scenario, lattice, scenario.stopping->payoff);
    const auto snell = snell_envelope(lattice, driver, xi);
    const auto bf = oracle::brute_force_value(lattice, driver, xi, budget);
    double layer_gap = 0.0;
    for (int k = 0; k <= lattice.macro_periods(); ++k) {
      const auto sup = oracle::brute_force_layer(lattice, driver, xi, k, budget);
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
        layer_gap = std::max(layer_gap, std::abs(sup[idx] - snell.U.at(k, idx)));
    }
    const auto classical = oracle::classical_snell(lattice, xi);
    const auto zero = snell_envelope(lattice, DriverSpec::zero(), xi);
    double classical_gap = 0.0;
    for (int k = 0; k <= lattice.macro_periods(); ++k)
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
        classical_gap = std::max(classical_gap, std::abs(classical.at(k, idx) - zero.U.at(k, idx)));
    const double v_gap = std::abs(bf.value - snell.V0);
    Json stop{{"V0", snell.V0}, {"brute_force_value", bf.value}, {"rules_evaluated", bf.rules_evaluated},
              {"value", check_json(v_gap <= kCheckTol, v_gap, kCheckTol)},
              {"every_layer", check_json(layer_gap <= kCheckTol, layer_gap, kCheckTol)},
              {"classical_snell", check_json(classical_gap <= 1e-12, classical_gap, 1e-12)},
              {"argmax_region", region_json(lattice, bf.rule)},
              {"argmax_is_nu0", canonical(lattice, bf.rule) == snell.nu(lattice, 0)}};
    result["stopping"] = stop;
    ok = ok && v_gap <= kCheckTol && layer_gap <= kCheckTol && classical_gap <= 1e-12;
    timer.lap("stopping");
  }
  if (scenario.game) {
    const auto game = build_game(scenario, lattice);
    game.validate(lattice);
    const auto r = nep_iterate(lattice, game, nep_options(options, scenario, lattice));
    const auto pairs = oracle::brute_force_nash(lattice, game, budget);
    const bool contained = oracle::contains_pair(pairs, lattice, r.tau1_star, r.tau2_star);
    const double j_gap = std::max(std::abs(oracle::reference_J1(lattice, game, r.tau1_star, r.tau2_star) - r.J1_star),
                                  std::abs(oracle::reference_J2(lattice, game, r.tau1_star, r.tau2_star) - r.J2_star));
    Json g{{"J1", r.J1_star}, {"J2", r.J2_star}, {"nash_pairs", pairs.size()}, {"nep_pair_in_list", contained},
           {"payoffs", check_json(j_gap <= kCheckTol, j_gap, kCheckTol)}};
    ok = ok && contained && j_gap <= kCheckTol;
    if (is_zero_sum(game)) {
      const double v = oracle::zero_sum_value(lattice, game.X1, game.Y1).at(0, 0);
      const double gap = std::abs(r.J1_star - v);
      g["zero_sum"] = Json{{"classical_value", v}, {"check", check_json(gap <= kCheckTol, gap, kCheckTol)}};
      ok = ok && gap <= kCheckTol;
    }
    result["game"] = g;
    timer.lap("game");
  }
  result["passed"] = ok;
  return ok ? kOk : kVerificationFailed;
}

// ---- properties -------------------------------------------------------------

struct Battery {
  double consistency = 0.0, comparison = 0.0, localization = 0.0, switching = 0.0, stopped_sm = 0.0,
         sampling = 0.0, sampling_mart = 0.0, stopped_mart = 0.0;
  std::size_t cases = 0;
};

void run_case(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi, const AdaptedProcess& X,
              const AdaptedProcess& Y, std::mt19937_64& rng, Battery& b) {
  const int T = lattice.macro_periods();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rule = [&](double p) {
    auto r = StoppingRule::at_horizon(lattice);
    for (int k = 0; k < T; ++k)
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) r.set(k, idx, u(rng) < p);
    return r;
  };
  const auto tau = rule(0.3);
  const auto sigma = rule_min(lattice, tau, rule(0.3));

  const auto full = g_expectation(lattice, driver, StoppingRule::at_horizon(lattice), xi);
  const auto full_macro = macro_layers_of(lattice, full.values);
  const int j = std::uniform_int_distribution<int>(0, T)(rng);
  const auto nested = g_expectation(lattice, driver, StoppingRule::constant(lattice, j), full_macro);
  for (int i = 0; i <= lattice.macro_to_micro(j); ++i)
    for (int idx = 0; idx < lattice.layer_size(i); ++idx)
      b.consistency = std::max(b.consistency, std::abs(nested.values.at(i, idx) - full.values.at(i, idx)));

  auto bumped = xi;
  for (auto& layer : bumped.values)
    for (auto& v : layer)
      if (u(rng) < 0.4) v += u(rng);
  const auto lo = g_expectation(lattice, driver, tau, xi);
  const auto hi = g_expectation(lattice, driver, tau, bumped);
  for (int i = 0; i < lattice.micro_layers(); ++i)
    for (int idx = 0; idx < lattice.layer_size(i); ++idx)
      b.comparison = std::max(b.comparison, lo.values.at(i, idx) - hi.values.at(i, idx));

  auto event = empty_event(lattice);
  StopView view(lattice, tau);
  for (int k = 0; k <= T; ++k)
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
      if (view.stop_layer(k, idx) == k && u(rng) < 0.5) event[k][idx] = 1;
  b.localization = std::max(b.localization, indicator_localization_check(lattice, driver, tau, event, xi).max_gap);

  const auto r = switch_equivalence_check(lattice, driver, X, Y, rule(0.4));
  b.switching = std::max({b.switching, r.max_gap, r.frozen_gap});

  const auto snell = snell_envelope(lattice, driver, xi);
  const auto sm = check_supermartingale(lattice, stop_driver(driver, tau), stopped_process(lattice, snell.U, tau));
  b.stopped_sm = std::max(b.stopped_sm, sm.max_violation);
  b.sampling = std::max(b.sampling, check_optional_sampling(lattice, driver, snell.U, sigma, tau).max_excess);
  b.sampling_mart = std::max(b.sampling_mart, check_optional_sampling(lattice, driver, full_macro, sigma, tau).max_gap);
  const auto nu = snell.nu(lattice, 0);
  const auto mart = check_supermartingale(lattice, stop_driver(driver, nu), stopped_process(lattice, snell.U, nu));
  b.stopped_mart = std::max(b.stopped_mart, mart.max_gap);
  ++b.cases;
}

int cmd_properties(const Options& options, const Scenario& scenario, Json& result, Timer& timer) {
  const Lattice lattice = build_lattice(scenario);
  std::mt19937_64 rng(scenario.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  struct Base {
    const DriverSpec* driver;
    AdaptedProcess xi, X, Y;
  };
  std::vector<Base> bases;
  if (scenario.stopping) {
    const auto& driver = driver_named(scenario, scenario.stopping->driver);
    require_valid(driver, lattice);
    auto xi = build_payoff(scenario, lattice, scenario.stopping->payoff);
    auto Y = xi;
    for (int k = 0; k < lattice.macro_periods(); ++k)
      for (auto& v : Y.values[k]) v += u(rng);
    bases.push_back({&driver, xi, xi, Y});
  }
  if (scenario.game) {
    const auto game = build_game(scenario, lattice);
    game.validate(lattice);
    const auto& g = *scenario.game;
    bases.push_back({&driver_named(scenario, g.f1), game.X1, game.X1, game.Y1});
    bases.push_back({&driver_named(scenario, g.f2), game.X2, game.X2, game.Y2});
  }

  Battery b;
  for (const auto& base : bases) {
    run_case(lattice, *base.driver, base.xi, base.X, base.Y, rng, b);
    for (int p = 0; p < options.perturbations; ++p) {
      auto xi = base.xi, X = base.X, Y = base.Y;
      for (auto& layer : xi.values)
        for (auto& v : layer) v += 0.5 * (u(rng) - 0.5);
      for (std::size_t k = 0; k < X.values.size(); ++k) {
        for (std::size_t i = 0; i < X.values[k].size(); ++i) {
          const double shift = 0.5 * (u(rng) - 0.5);
          X.values[k][i] += shift;
          Y.values[k][i] += shift;
        }
      }
      run_case(lattice, *base.driver, xi, X, Y, rng, b);
    }
  }
  timer.lap("battery");

  const double tol = kCheckTol;
  Json props = Json::object();
  props["consistency"] = check_json(b.consistency <= tol, b.consistency, tol, b.cases);
  props["comparison"] = check_json(b.comparison <= 1e-12, std::max(0.0, b.comparison), 1e-12, b.cases);
  props["localization"] = check_json(b.localization <= tol, b.localization, tol, b.cases);
  props["switch_equivalence"] = check_json(b.switching <= 1e-12, b.switching, 1e-12, b.cases);
  props["stopped_supermartingale"] = check_json(b.stopped_sm <= tol, std::max(0.0, b.stopped_sm), tol, b.cases);
  props["optional_sampling"] = check_json(b.sampling <= tol, std::max(0.0, b.sampling), tol, b.cases);
  props["optional_sampling_martingale"] = check_json(b.sampling_mart <= tol, b.sampling_mart, tol, b.cases);
  props["stopped_martingale"] = check_json(b.stopped_mart <= tol, b.stopped_mart, tol, b.cases);
  bool ok = true;
  for (const auto& [name, p] : props.items()) ok = ok && p["passed"].get<bool>();
  result["lattice"] = lattice_json(lattice);
  result["seed"] = scenario.seed;
  result["perturbations"] = options.perturbations;
  result["properties"] = props;
  result["passed"] = ok;
  return ok ? kOk : kVerificationFailed;
}

}  // namespace

int run(const Options& options) {
  Json result{{"command", options.command}};
  int status = kOk;
  Timer timer;
  try {
    const Scenario scenario = load_scenario(options.scenario);
    result = header(options, scenario);
    if (options.command == "validate") {
      status = cmd_validate(options, scenario, result);
    } else if (options.command == "stop") {
      status = cmd_stop(options, scenario, result, timer);
    } else if (options.command == "game") {
      status = cmd_game(options, scenario, result, timer);
    } else if (options.command == "oracle") {
      status = cmd_oracle(options, scenario, result, timer);
    } else if (options.command == "properties") {
      status = cmd_properties(options, scenario, result, timer);
    } else {
      throw UsageError("unknown command '" + options.command + "'");
    }
  } catch (const UsageError& e) {
    status = kUsageError;
    result["error"] = Json{{"kind", "usage"}, {"message", e.what()}};
  } catch (const ParseError& e) {
    status = kUsageError;
    result["error"] = Json{{"kind", "parse"}, {"message", e.what()}};
  } catch (const BudgetError& e) {
    status = kBudgetRefused;
    result["error"] = Json{{"kind", "budget"}, {"message", e.what()}, {"count", e.count()}};
  } catch (const IterationError& e) {
    status = kSolverFailure;
    result["error"] = Json{{"kind", "iteration"}, {"message", e.what()}};
  } catch (const SolverError& e) {
    status = kSolverFailure;
    result["error"] = Json{{"kind", "solver"}, {"message", e.what()}};
  } catch (const ValidationError& e) {
    status = kVerificationFailed;
    result["error"] = Json{{"kind", "validation"}, {"message", e.what()}};
  } catch (const Error& e) {
    status = kVerificationFailed;
    result["error"] = Json{{"kind", "error"}, {"message", e.what()}};
  }
  if (!options.quiet && status != kOk && result.contains("error")) {
    std::cerr << "dynkin-g " << options.command << ": " << result["error"]["message"].get<std::string>() << '\n';
  }
  if (options.timings) result["timings"] = timer.entries;
  result["exit_status"] = status;

  const std::string text = result.dump(2) + "\n";
  if (options.out.empty()) {
    std::cout << text;
  } else {
    try {
      write_text(options.out, text);
    } catch (const Error& e) {
      std::cerr << "dynkin-g: " << e.what() << '\n';
      return kUsageError;
    }
  }
  return status;
}

}  // namespace dynkin::cli
