#include <doctest.h>

#include <algorithm>
#include <set>

#include "dynkin/errors.hpp"
#include "dynkin/oracle.hpp"
#include "dynkin/snell.hpp"
#include "support.hpp"

using namespace dynkin;
using dynkin::test::binomial;
using dynkin::test::macro_from;

TEST_CASE("rule counts") {
  Lattice one(binomial(1, 1));
  CHECK(oracle::rule_count(one) == 2.0);
  std::size_t visited = 0;
  oracle::enumerate_stopping_rules(one, {}, [&](const StoppingRule&) { ++visited; });
  CHECK(visited == 2);

  Lattice two(binomial(2, 1));
  CHECK(oracle::rule_count(two) == 8.0);
  std::set<std::vector<std::vector<std::uint8_t>>> seen;
  oracle::enumerate_stopping_rules(two, {}, [&](const StoppingRule& r) { seen.insert(r.marks()); });
  CHECK(seen.size() == 8);
  // stop at the root makes the rest unreachable: 1 + 2 * 2 distinct times
  CHECK(oracle::distinct_stopping_rules(two, {}).size() == 5);
}

TEST_CASE("budget refusal carries the count") {
  Lattice two(binomial(2, 1));
  CHECK_NOTHROW(oracle::require_budget(two, {8}));
  try {
    oracle::require_budget(two, {4});
    FAIL("expected BudgetError");
  } catch (const BudgetError& e) {
    CHECK(e.count() == 8.0);
  }
  const auto xi = macro_from(two, [](int, int) { return 0.0; });
  CHECK_THROWS_AS(oracle::brute_force_value(two, DriverSpec::zero(), xi, {4}), BudgetError);
}

TEST_CASE("brute force picks the obvious rules") {
  Lattice lattice(binomial(2, 1, 1.1));
  const auto falling = macro_from(lattice, [](int k, int) { return 3.0 - k; });
  const auto f = oracle::brute_force_value(lattice, DriverSpec::zero(), falling);
  CHECK(f.value == 3.0);
  CHECK(canonical(lattice, f.rule) == canonical(lattice, StoppingRule::constant(lattice, 0)));
  CHECK(f.rules_evaluated == 5);  // distinct stopping times

  // every rule ties on a constant payoff; the earliest one wins
  const auto flat = macro_from(lattice, [](int, int) { return 1.5; });
  const auto c = oracle::brute_force_value(lattice, DriverSpec::zero(), flat);
  CHECK(c.value == 1.5);
  CHECK(canonical(lattice, c.rule) == canonical(lattice, StoppingRule::constant(lattice, 0)));
}

TEST_CASE("classical references on a hand-computed tree") {
  // one period, p = 1/2: xi_0 = 1, xi_1 = (4, 0)
  Lattice lattice(binomial(1, 1, 1.1));
  auto xi = AdaptedProcess::macro(lattice);
  xi.at(0, 0) = 1.0;
  for (int idx = 0; idx < 2; ++idx) xi.at(1, idx) = lattice.node(1, idx).state > 100.0 ? 4.0 : 0.0;
  CHECK(oracle::classical_snell(lattice, xi).at(0, 0) == 2.0);

  auto upper = xi;
  upper.at(0, 0) = 1.5;
  CHECK(oracle::zero_sum_value(lattice, xi, upper).at(0, 0) == 1.5);

  const auto T = StoppingRule::at_horizon(lattice);
  CHECK(oracle::reference_value(lattice, DriverSpec::zero(), T, xi) == 2.0);
  DriverCoefficients c;
  c.c0 = 0.5;
  c.a = 0.2;
  // y = (E + delta c0) / (1 - delta a) with delta = 1
  CHECK(oracle::reference_value(lattice, DriverSpec::constant(c), T, xi) == doctest::Approx(2.5 / 0.8).epsilon(1e-15));
}
