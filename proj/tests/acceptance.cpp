// Acceptance gate: one PASS/FAIL line per criterion. Exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dynkin/cli/commands.hpp"
#include "dynkin/game.hpp"
#include "dynkin/gexp.hpp"
#include "dynkin/instances.hpp"
#include "dynkin/oracle.hpp"
#include "dynkin/parallel.hpp"
#include "dynkin/snell.hpp"

using namespace dynkin;
using instances::DriverKind;
using instances::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr DriverKind kAllKinds[] = {DriverKind::Zero, DriverKind::Constant, DriverKind::Linear,
                                    DriverKind::Abs,  DriverKind::Jump,     DriverKind::Mixed};

// Lattice with at least one jump mark half of the time.
Lattice draw_lattice(Rng& rng, instances::LatticeLimits limits = {}) {
  return Lattice(instances::random_lattice_spec(rng, limits));
}

instances::LatticeLimits tiny(std::size_t nonterminal) {
  instances::LatticeLimits l;
  l.max_nonterminal = nonterminal;
  return l;
}

// Classical E[xi_T | node] on every micro node, written out independently.
std::vector<std::vector<double>> classical_tower(const Lattice& lattice, const AdaptedProcess& xi) {
  std::vector<std::vector<double>> v(lattice.micro_layers());
  v.back() = xi.values.back();
  std::vector<double> kids;
  for (int i = lattice.last_layer() - 1; i >= 0; --i) {
    v[i].resize(lattice.layer_size(i));
    for (int idx = 0; idx < lattice.layer_size(i); ++idx) {
      const auto c = lattice.child_indices(i, idx);
      kids.resize(c.size());
      for (std::size_t b = 0; b < c.size(); ++b) kids[b] = v[i + 1][c[b]];
      v[i][idx] = conditional_expectation(lattice.branches(), kids);
    }
  }
  return v;
}

Outcome classical_reduction() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  double snell_gap = 0.0, brute_gap = 0.0;
  int scenarios = 0, brute = 0;
  for (int s = 0; s < 60; ++s) {
    const bool small = s % 2 == 1;
    const Lattice lattice = draw_lattice(rng, small ? tiny(12) : instances::LatticeLimits{});
    const auto xi = s % 3 == 0 ? instances::random_state_payoff(rng, lattice) : instances::random_process(rng, lattice);
    const auto snell = snell_envelope(lattice, DriverSpec::zero(), xi);
    const auto ref = oracle::classical_snell(lattice, xi);
    for (int k = 0; k <= lattice.macro_periods(); ++k)
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
        snell_gap = std::max(snell_gap, std::abs(snell.U.at(k, idx) - ref.at(k, idx)));
    ++scenarios;
    if (small) {
      const auto bf = oracle::brute_force_value(lattice, DriverSpec::zero(), xi);
      brute_gap = std::max(brute_gap, std::abs(bf.value - snell.V0));
      ++brute;
    }
  }
  const double secs = seconds_since(t0);
  return {snell_gap <= 1e-12 && brute_gap <= 1e-10 && brute >= 30 && secs < 5.0,
          fmt("%d scenarios, max |U - classical| = %.3g; %d brute-forced, max |V0 - sup| = %.3g; %.2f s", scenarios,
              snell_gap, brute, brute_gap, secs)};
}

Outcome constant_driver_closed_form() {
  Rng rng(1002);
  double gap = 0.0;
  int n = 0;
  for (int s = 0; s < 25; ++s, ++n) {
    const Lattice lattice = draw_lattice(rng);
    const auto driver = instances::random_driver(rng, lattice, DriverKind::Constant, /*per_period=*/s % 2 == 0);
    const auto xi = instances::random_process(rng, lattice);
    const auto y = g_expectation(lattice, driver, StoppingRule::at_horizon(lattice), xi);
    const auto tower = classical_tower(lattice, xi);
    const int m = lattice.micro_per_period();
    const int T = lattice.macro_periods();
    for (int i = 0; i < lattice.micro_layers(); ++i) {
      double accrued = 0.0;
      for (int j = i; j < m * T; ++j) accrued += driver.at(j / m).c0 * lattice.delta();
      for (int idx = 0; idx < lattice.layer_size(i); ++idx)
        gap = std::max(gap, std::abs(y.values.at(i, idx) - (tower[i][idx] + accrued)));
    }
  }
  return {gap <= 1e-12, fmt("%d scenarios, max node gap %.3g", n, gap)};
}

Outcome constant_not_martingale() {
  Rng rng(1003);
  double gap = 0.0;
  double min_excess = INFINITY;
  int n = 0;
  for (int s = 0; s < 25; ++s, ++n) {
    const Lattice lattice = draw_lattice(rng);
    DriverCoefficients c;
    c.c0 = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    const double level = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
    const auto phi = AdaptedProcess::macro(lattice, level);
    const int T = lattice.macro_periods();
    const auto y = g_expectation(lattice, DriverSpec::constant(c), StoppingRule::at_horizon(lattice), phi);
    for (int k = 0; k < T; ++k) {
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
        const double excess = y.at_macro(lattice, k, idx) - phi.at(k, idx);
        gap = std::max(gap, std::abs(excess - c.c0 * (T - k)));
        min_excess = std::min(min_excess, excess);
      }
    }
  }
  return {gap <= 1e-12 && min_excess > 0.0,
          fmt("%d scenarios, max |excess - c0 (T-k)| = %.3g, min excess %.3g", n, gap, min_excess)};
}

Outcome snell_optimality() {
  Rng rng(1004);
  double gap = 0.0, brute_gap = 0.0;
  int n = 0, tiny_n = 0, abs_n = 0, jump_n = 0;
  for (int s = 0; s < 72; ++s, ++n) {
    const bool small = s % 3 == 0;
    const Lattice lattice = draw_lattice(rng, small ? tiny(8) : instances::LatticeLimits{});
    const auto kind = kAllKinds[s % 6];
    const auto driver = instances::random_driver(rng, lattice, kind, s % 4 == 0);
    abs_n += kind == DriverKind::Abs;
    jump_n += kind == DriverKind::Jump && !lattice.spec().jump_marks.empty();
    const auto xi = s % 2 ? instances::random_state_payoff(rng, lattice) : instances::random_process(rng, lattice);
    const auto snell = snell_envelope(lattice, driver, xi);
    for (int k = 0; k <= lattice.macro_periods(); ++k) {
      gap = std::max(gap, verify_optimality(lattice, driver, xi, snell, k).max_gap);
      if (!small) continue;
      const auto sup = oracle::brute_force_layer(lattice, driver, xi, k);
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
        brute_gap = std::max(brute_gap, std::abs(sup[idx] - snell.U.at(k, idx)));
    }
    tiny_n += small;
  }
  return {gap <= 1e-10 && brute_gap <= 1e-10 && abs_n > 0 && jump_n > 0,
          fmt("%d scenarios (%d |z|, %d jump), max |U_k - E^g(xi_nu_k)| = %.3g; %d tiny, max |U_k - sup| = %.3g", n,
              abs_n, jump_n, gap, tiny_n, brute_gap)};
}

Outcome monotonicity() {
  Rng rng(1005);
  instances::LatticeLimits limits;
  limits.max_periods = 3;
  double worst = -INFINITY;
  std::size_t bad = 0;
  for (int s = 0; s < 1000; ++s) {
    const Lattice lattice = draw_lattice(rng, limits);
    const auto driver = instances::random_driver(rng, lattice, kAllKinds[s % 6], s % 5 == 0);
    const auto lo = instances::random_process(rng, lattice);
    auto hi = lo;
    std::uniform_real_distribution<double> bump(0.0, 0.5);
    for (auto& layer : hi.values)
      for (auto& v : layer)
        if (bump(rng) < 0.35) v += bump(rng);
    const auto tau = instances::random_rule(rng, lattice);
    const auto a = g_expectation(lattice, driver, tau, lo);
    const auto b = g_expectation(lattice, driver, tau, hi);
    for (int i = 0; i < lattice.micro_layers(); ++i)
      for (int idx = 0; idx < lattice.layer_size(i); ++idx) {
        const double d = a.values.at(i, idx) - b.values.at(i, idx);
        worst = std::max(worst, d);
        bad += d > 1e-12;
      }
  }
  return {bad == 0, fmt("1000 pairs, %zu violating nodes, max E(xi) - E(xi') = %.3g", bad, worst)};
}

Outcome invariant_battery() {
  Rng rng(1006);
  double consistency = 0.0, sampling_excess = 0.0, sampling_mart = 0.0, stopped_sm = 0.0, localization = 0.0,
         stopped_mart = 0.0;
  const int n = 60;
  for (int s = 0; s < n; ++s) {
    const Lattice lattice = draw_lattice(rng);
    const int T = lattice.macro_periods();
    const auto driver = instances::random_driver(rng, lattice, kAllKinds[s % 6], s % 4 == 0);
    const auto xi = instances::random_process(rng, lattice);

    // E^g_{k,T} = E^g_{k,j}(E^g_{j,T}) for k <= j
    const auto full = g_expectation(lattice, driver, StoppingRule::at_horizon(lattice), xi);
    const auto full_macro = macro_layers_of(lattice, full.values);
    const int j = std::uniform_int_distribution<int>(0, T)(rng);
    const auto nested = g_expectation(lattice, driver, StoppingRule::constant(lattice, j), full_macro);
    for (int i = 0; i <= lattice.macro_to_micro(j); ++i)
      for (int idx = 0; idx < lattice.layer_size(i); ++idx)
        consistency = std::max(consistency, std::abs(nested.values.at(i, idx) - full.values.at(i, idx)));

    // optional sampling on the Snell envelope (inequality) and on E^g_{.,T}(xi) (equality)
    const auto snell = snell_envelope(lattice, driver, xi);
    const auto tau = instances::random_rule(rng, lattice);
    const auto sigma = rule_min(lattice, tau, instances::random_rule(rng, lattice));
    sampling_excess =
        std::max(sampling_excess, check_optional_sampling(lattice, driver, snell.U, sigma, tau).max_excess);
    sampling_mart = std::max(sampling_mart, check_optional_sampling(lattice, driver, full_macro, sigma, tau).max_gap);

    // U stopped at any tau is a g^tau-supermartingale
    const auto stopped = stop_driver(driver, tau);
    const auto sm = check_supermartingale(lattice, stopped, stopped_process(lattice, snell.U, tau));
    stopped_sm = std::max(stopped_sm, sm.max_violation);

    // localisation by an F_tau event
    auto event = empty_event(lattice);
    StopView view(lattice, tau);
    for (int k = 0; k <= T; ++k)
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
        if (view.stop_layer(k, idx) == k && std::uniform_int_distribution<int>(0, 1)(rng)) event[k][idx] = 1;
    const auto zeta = instances::random_process(rng, lattice);
    localization =
        std::max(localization, indicator_localization_check(lattice, driver, tau, event, zeta).max_gap);

    // U stopped at nu_0 is a g^{nu_0}-martingale
    const auto nu = snell.nu(lattice, 0);
    const auto mart = check_supermartingale(lattice, stop_driver(driver, nu), stopped_process(lattice, snell.U, nu));
    stopped_mart = std::max(stopped_mart, mart.max_gap);
  }
  const double tol = 1e-10;
  const bool ok = consistency <= tol && sampling_excess <= tol && sampling_mart <= tol && stopped_sm <= tol &&
                  localization <= tol && stopped_mart <= tol;
  return {ok, fmt("%d scenarios each: consistency %.3g, optional sampling excess %.3g / martingale gap %.3g, "
                  "stopped supermartingale %.3g, localisation %.3g, stopped martingale %.3g",
                  n, consistency, sampling_excess, sampling_mart, stopped_sm, localization, stopped_mart)};
}

Outcome switch_equivalence() {
  Rng rng(1007);
  double gap = 0.0;
  std::size_t frozen = 0;
  const int n = 60;
  for (int s = 0; s < n; ++s) {
    const Lattice lattice = draw_lattice(rng);
    const auto driver = instances::random_driver(rng, lattice, kAllKinds[s % 6], s % 4 == 0);
    const auto [X, Y] = instances::random_ordered_pair(rng, lattice);
    const double p = std::uniform_real_distribution<double>(0.0, 0.7)(rng);
    const auto mu = s % 10 == 0 ? StoppingRule::at_horizon(lattice) : instances::random_rule(rng, lattice, p);
    const auto r = switch_equivalence_check(lattice, driver, X, Y, mu);
    gap = std::max({gap, r.max_gap, r.frozen_gap});
    frozen += r.frozen_nodes;
  }
  return {gap <= 1e-12, fmt("%d instances, max |Ubar - U| (incl. frozen region, %zu nodes) = %.3g", n, frozen, gap)};
}

Outcome nep_construction() {
  const auto t0 = Clock::now();
  Rng rng(1008);
  int games = 0, tiny_games = 0, in_list = 0;
  std::size_t violations = 0;
  double slack = -INFINITY;
  int not_verified = 0, nontrivial = 0, max_iters = 0;
  std::string first_problem;
  for (int s = 0; s < 40; ++s) {
    const bool small = s % 2 == 0;
    instances::LatticeLimits limits = small ? tiny(8) : instances::LatticeLimits{};
    if (!small) limits.max_periods = 3;
    const Lattice lattice = draw_lattice(rng, limits);
    const auto game = instances::random_game(rng, lattice, s % 5 == 0);
    try {
      const auto r = nep_iterate(lattice, game);
      ++games;
      violations += r.checks.total();
      const auto horizon = StoppingRule::at_horizon(lattice);
      nontrivial += !(r.tau1_star == horizon && r.tau2_star == horizon);
      max_iters = std::max(max_iters, r.iterations);
      const auto report = verify_nash(lattice, game, r.tau1_star, r.tau2_star, false);
      slack = std::max({slack, report.slack1, report.slack2});
      not_verified += !r.verified;
      if (small) {
        ++tiny_games;
        const auto pairs = oracle::brute_force_nash(lattice, game);
        const bool found = oracle::contains_pair(pairs, lattice, r.tau1_star, r.tau2_star);
        in_list += found;
        if (!found && first_problem.empty()) first_problem = fmt("seed-index %d: pair not in brute-force list", s);
      }
    } catch (const IterationError& e) {
      if (first_problem.empty()) first_problem = fmt("seed-index %d: %s", s, e.what());
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = games == 40 && violations == 0 && slack <= 1e-10 && not_verified == 0 && in_list == tiny_games &&
                  secs < 30.0;
  auto detail = fmt("%d/40 games terminated (%d with early stopping, up to %d pair updates), %zu trace violations, "
                    "max Snell slack %.3g, %d/%d tiny pairs in brute-force list; %.2f s",
                    games, nontrivial, max_iters, violations, slack, in_list, tiny_games, secs);
  if (!first_problem.empty()) detail += "; " + first_problem;
  return {ok, detail};
}

Outcome zero_sum() {
  Rng rng(1009);
  double sum_gap = 0.0, value_gap = 0.0;
  const int n = 40;
  for (int s = 0; s < n; ++s) {
    instances::LatticeLimits limits;
    limits.max_periods = 3;
    const Lattice lattice = draw_lattice(rng, limits);
    const auto game = instances::zero_sum_game(rng, lattice);
    const auto r = nep_iterate(lattice, game);
    const auto v = oracle::zero_sum_value(lattice, game.X1, game.Y1);
    sum_gap = std::max(sum_gap, std::abs(r.J1_star + r.J2_star));
    value_gap = std::max(value_gap, std::abs(r.J1_star - v.at(0, 0)));
  }
  return {sum_gap <= 1e-10 && value_gap <= 1e-10,
          fmt("%d games, max |J1* + J2*| = %.3g, max |J1* - min-max value| = %.3g", n, sum_gap, value_gap)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = DYNKIN_SCENARIO_DIR;
  const fs::path tmp = fs::temp_directory_path() / "dynkin_acceptance";
  fs::create_directories(tmp);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  int runs = 0, identical = 0;
  std::string mismatch;
  const char* commands[] = {"validate", "stop", "game", "oracle", "properties"};
  for (const auto& file : files) {
    for (const char* command : commands) {
      cli::Options options;
      options.command = command;
      options.scenario = file.string();
      options.quiet = true;
      std::string outputs[2];
      bool applicable = true;
      for (int rep = 0; rep < 2; ++rep) {
        set_thread_count(rep == 0 ? 1 : 0);  // serial, then default parallelism
        options.out = (tmp / (file.stem().string() + "." + command + "." + std::to_string(rep) + ".json")).string();
        fs::remove(options.out);
        const auto status = cli::run(options);
        if (status == cli::kUsageError) applicable = false;
        outputs[rep] = slurp(options.out);
      }
      set_thread_count(0);
      if (!applicable) continue;
      ++runs;
      if (outputs[0] == outputs[1] && !outputs[0].empty()) {
        ++identical;
      } else if (mismatch.empty()) {
        mismatch = "; differs: " + file.filename().string() + " " + command;
      }
    }
  }
  return {runs > 0 && identical == runs,
          fmt("%d/%d result files byte-identical across two runs (1 thread vs default)", identical, runs) + mismatch};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"classical reduction", classical_reduction},
      {"constant-driver closed form", constant_driver_closed_form},
      {"constant process is not a g-martingale", constant_not_martingale},
      {"Snell optimality", snell_optimality},
      {"monotonicity", monotonicity},
      {"invariant battery", invariant_battery},
      {"switch equivalence", switch_equivalence},
      {"NEP construction", nep_construction},
      {"zero-sum consistency", zero_sum},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
