#include <doctest.h>

#include <cmath>
#include <vector>

#include "dynkin/errors.hpp"
#include "dynkin/instances.hpp"
#include "dynkin/lattice.hpp"
#include "support.hpp"

using namespace dynkin;
using dynkin::test::binomial;
using dynkin::test::with_jump;

TEST_CASE("one-period one-step binomial tree") {
  Lattice lattice(binomial(1, 1));
  CHECK(lattice.micro_layers() == 2);
  CHECK(lattice.layer_size(0) == 1);
  CHECK(lattice.layer_size(1) == 2);
  REQUIRE(lattice.branch_count() == 2);
  for (const auto& b : lattice.branches()) {
    CHECK(b.prob == 0.5);
    CHECK(std::abs(b.dW) == 1.0);
    CHECK(b.jump == -1);
  }
}

TEST_CASE("two micro steps give three layers and four leaf paths") {
  Lattice lattice(binomial(1, 2));
  CHECK(lattice.micro_layers() == 3);
  CHECK(lattice.child_indices(0, 0).size() == 2);
  int paths = 0;
  for (int c : lattice.child_indices(0, 0)) paths += static_cast<int>(lattice.child_indices(1, c).size());
  CHECK(paths == 4);
}

TEST_CASE("jump intensity must keep the step law a sub-distribution") {
  auto ok = with_jump(binomial(1, 1), 0.3);
  CHECK_NOTHROW(ok.validate());
  auto bad = with_jump(binomial(1, 1), 1.3);
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  try {
    bad.validate();
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("sub-distribution") != std::string::npos);
  }
  CHECK_THROWS_AS(binomial(0, 1).validate(), ValidationError);
  CHECK_THROWS_AS(binomial(1, 0).validate(), ValidationError);
}

TEST_CASE("children of the root and of a leaf") {
  Lattice plain(binomial(1, 1));
  CHECK(children(plain, {0, 0}).size() == 2);
  Lattice jumpy(with_jump(binomial(1, 1), 0.3));
  const auto kids = children(jumpy, {0, 0});
  REQUIRE(kids.size() == 4);
  int jumps = 0;
  for (const auto& c : kids) jumps += c.branch.jump == 0;
  CHECK(jumps == 2);
  CHECK_THROWS_AS(children(plain, {1, 0}), DomainError);
}

TEST_CASE("conditional expectation of explicit branches") {
  std::vector<Branch> two{{0.5, 1.0, -1}, {0.5, -1.0, -1}};
  const double v[] = {3.0, 1.0};
  CHECK(conditional_expectation(two, v) == 2.0);
  std::vector<Branch> one{{1.0, 0.0, -1}};
  const double seven[] = {7.0};
  CHECK(conditional_expectation(one, seven) == 7.0);
  Lattice jumpy(with_jump(binomial(1, 1), 0.3));
  const double c[] = {4.25, 4.25, 4.25, 4.25};
  CHECK(conditional_expectation(jumpy, {0, 0}, c) == doctest::Approx(4.25).epsilon(1e-15));
  const double short_values[] = {1.0};
  CHECK_THROWS_AS(conditional_expectation(two, short_values), PreconditionError);
}

TEST_CASE("branch law moments hold on random lattices") {
  instances::Rng rng(41);
  instances::LatticeLimits limits;
  limits.max_marks = 2;
  for (int s = 0; s < 50; ++s) {
    Lattice lattice(instances::random_lattice_spec(rng, limits));
    double p = 0.0, m1 = 0.0, m2 = 0.0;
    std::vector<double> jump(lattice.spec().jump_marks.size(), 0.0);
    for (const auto& b : lattice.branches()) {
      CHECK(b.prob > 0.0);
      p += b.prob;
      m1 += b.prob * b.dW;
      m2 += b.prob * b.dW * b.dW;
      if (b.jump >= 0) jump[b.jump] += b.prob;
    }
    CHECK(std::abs(p - 1.0) <= 1e-15);
    CHECK(std::abs(m1) <= 1e-15);
    CHECK(std::abs(m2 - lattice.delta()) <= 1e-15);
    for (std::size_t j = 0; j < jump.size(); ++j)
      CHECK(std::abs(jump[j] - lattice.spec().jump_marks[j].intensity * lattice.delta()) <= 1e-15);
  }
}

TEST_CASE("zero-intensity marks get no branch") {
  Lattice lattice(with_jump(binomial(1, 1), 0.0));
  CHECK(lattice.branch_count() == 2);
}

TEST_CASE("macro nodes are history-unique") {
  // Two periods of two micro steps: period-1 nodes recombine locally but
  // the macro layer keeps one node per macro path.
  Lattice lattice(binomial(2, 2, 1.1));
  CHECK(lattice.macro_layer_size(1) == 3);
  CHECK(lattice.macro_layer_size(2) == 9);
  std::vector<int> per_parent(3, 0);
  for (int idx = 0; idx < lattice.macro_layer_size(2); ++idx) ++per_parent.at(lattice.macro_parent(2, idx));
  CHECK(per_parent == std::vector<int>{3, 3, 3});
}

TEST_CASE("node ids round-trip through find") {
  Lattice lattice(with_jump(binomial(2, 2, 1.1), 0.2));
  for (int i = 0; i < lattice.micro_layers(); ++i) {
    for (int idx = 0; idx < lattice.layer_size(i); ++idx) {
      const auto id = lattice.node_id(i, idx);
      const auto ref = lattice.find(id);
      REQUIRE(ref.has_value());
      CHECK(*ref == NodeRef{i, idx});
    }
  }
  CHECK(lattice.node_id(0, 0) == "0");
  CHECK_FALSE(lattice.find("9-nonsense").has_value());
}

TEST_CASE("stopping time of a path") {
  Lattice lattice(binomial(2, 1, 1.1));
  const int up_up[] = {0, 0};
  CHECK(stopping_time_of_path(lattice, StoppingRule::constant(lattice, 0), up_up) == 0);
  CHECK(stopping_time_of_path(lattice, StoppingRule::at_horizon(lattice), up_up) == 2);

  // stop iff state >= 105: only the up node at k=1 crosses
  auto rule = StoppingRule::at_horizon(lattice);
  for (int idx = 0; idx < lattice.macro_layer_size(1); ++idx)
    rule.set(1, idx, lattice.node(1, idx).state >= 105.0);
  int up_branch = lattice.branches()[0].dW > 0 ? 0 : 1;
  const int crossing[] = {up_branch, 1 - up_branch};
  const int falling[] = {1 - up_branch, up_branch};
  CHECK(stopping_time_of_path(lattice, rule, crossing) == 1);
  CHECK(stopping_time_of_path(lattice, rule, falling) == 2);
}

TEST_CASE("adding stop marks never delays the stop") {
  instances::Rng rng(42);
  for (int s = 0; s < 100; ++s) {
    Lattice lattice(instances::random_lattice_spec(rng));
    const auto coarse = instances::random_rule(rng, lattice, 0.2);
    auto fine = coarse;
    const auto extra = instances::random_rule(rng, lattice, 0.2);
    for (int k = 0; k < lattice.macro_periods(); ++k)
      for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx)
        if (extra.stops(k, idx)) fine.set(k, idx, true);
    CHECK(pathwise_leq(lattice, fine, coarse));
    for (int t : path_times(lattice, fine)) CHECK(t <= lattice.macro_periods());
    CHECK(rule_min(lattice, fine, coarse) == canonical(lattice, fine));
  }
}

TEST_CASE("canonical form identifies equal stopping times") {
  Lattice lattice(binomial(2, 1));
  auto a = StoppingRule::constant(lattice, 0);
  auto b = a;
  b.set(1, 0, true);  // unreachable mark after the root stop
  CHECK_FALSE(a == b);
  CHECK(canonical(lattice, a) == canonical(lattice, b));
  CHECK(path_times(lattice, a) == path_times(lattice, b));
}

TEST_CASE("layer T is always a stop layer") {
  Lattice lattice(binomial(2, 1));
  auto marks = StoppingRule::at_horizon(lattice).marks();
  std::fill(marks[2].begin(), marks[2].end(), 0);
  const auto rule = StoppingRule::from_marks(lattice, marks);
  for (int idx = 0; idx < lattice.macro_layer_size(2); ++idx) CHECK(rule.stops(2, idx));
}
