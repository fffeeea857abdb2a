// Serial vs OpenMP timings of the backward kernels on lattices of growing
// size. Usage: bench_kernels [repeats]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "dynkin/game.hpp"
#include "dynkin/gexp.hpp"
#include "dynkin/instances.hpp"
#include "dynkin/parallel.hpp"
#include "dynkin/snell.hpp"

using namespace dynkin;

namespace {

template <typename F>
double best_ms(int repeats, F f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool same(const AdaptedProcess& a, const AdaptedProcess& b) {
  for (std::size_t k = 0; k < a.values.size(); ++k)
    if (std::memcmp(a.values[k].data(), b.values[k].data(), a.values[k].size() * sizeof(double)) != 0) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("threads %d, best of %d\n", thread_count(), repeats);
  std::printf("%-8s %-4s %10s %12s %12s %12s %8s %s\n", "periods", "m", "nodes", "kernel", "serial_ms", "parallel_ms",
              "speedup", "identical");

  struct Size {
    int T, m;
  };
  for (const Size sz : {Size{3, 4}, Size{5, 2}, Size{4, 3}, Size{3, 8}}) {
    LatticeSpec spec;
    spec.macro_periods = sz.T;
    spec.micro_per_period = sz.m;
    spec.state0 = 100.0;
    spec.up = 1.05;
    spec.down = 1.0 / 1.05;
    spec.jump_marks.push_back({"crash", 0.3, 1.0, 0.85});
    const Lattice lattice(spec);
    instances::Rng rng(7);
    DriverCoefficients c;
    c.c0 = 0.02;
    c.a = -0.05;
    c.b = 0.1;
    c.b_abs = 0.15;
    c.gamma = {0.2};
    const auto driver = DriverSpec::constant(c);
    const auto xi = instances::random_state_payoff(rng, lattice);
    const auto tau = instances::random_rule(rng, lattice);

    GExpectationProcess gs, gp;
    const double g_ser = best_ms(repeats, [&] { gs = g_expectation(lattice, driver, tau, xi, 0, Exec::Serial); });
    const double g_par = best_ms(repeats, [&] { gp = g_expectation(lattice, driver, tau, xi, 0, Exec::Parallel); });
    std::printf("%-8d %-4d %10zu %12s %12.2f %12.2f %8.2f %s\n", sz.T, sz.m, lattice.node_count(), "g_expect", g_ser,
                g_par, g_ser / g_par, same(gs.values, gp.values) ? "yes" : "NO");

    SnellResult ss, sp;
    const double s_ser = best_ms(repeats, [&] { ss = snell_envelope(lattice, driver, xi, Exec::Serial); });
    const double s_par = best_ms(repeats, [&] { sp = snell_envelope(lattice, driver, xi, Exec::Parallel); });
    std::printf("%-8d %-4d %10zu %12s %12.2f %12.2f %8.2f %s\n", sz.T, sz.m, lattice.node_count(), "snell", s_ser,
                s_par, s_ser / s_par, same(ss.U, sp.U) ? "yes" : "NO");
  }
  return 0;
}
