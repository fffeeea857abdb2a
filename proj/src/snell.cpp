#include "dynkin/snell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/errors.hpp"

namespace dynkin {

StoppingRule SnellResult::nu(const Lattice& lattice, int k) const {
  auto marks = contact;
  for (int l = 0; l < k && l < static_cast<int>(marks.size()); ++l) std::fill(marks[l].begin(), marks[l].end(), 0);
  return canonical(lattice, StoppingRule::from_marks(lattice, std::move(marks)));
}

SnellResult snell_envelope(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                           const AdaptedProcess& xi, Exec exec) {
  const int T = lattice.macro_periods();
  if (xi.grid != Grid::Macro || xi.layers() != T + 1) {
    throw PreconditionError("snell_envelope: payoff must be a macro-grid process on all layers");
  }
  SnellResult r;
  r.U = AdaptedProcess::macro(lattice);
  r.contact.resize(T + 1);
  r.U.values[T] = xi.values[T];
  r.contact[T].assign(lattice.macro_layer_size(T), 1);
  for (int k = T - 1; k >= 0; --k) {
    const auto cont = one_period_expectation(lattice, driver, mask, k, r.U.values[k + 1], exec);
    r.contact[k].assign(lattice.macro_layer_size(k), 0);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      const double u = std::max(xi.at(k, idx), cont[idx]);
      r.U.at(k, idx) = u;
      r.contact[k][idx] = std::abs(u - xi.at(k, idx)) <= kContactTol ? 1 : 0;
    }
  }
  r.V0 = r.U.at(0, 0);
  return r;
}

SnellResult snell_envelope(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi, Exec exec) {
  return snell_envelope(lattice, driver, DriverMask::all(lattice), xi, exec);
}

SnellResult snell_envelope(const Lattice& lattice, const StoppedDriver& driver, const AdaptedProcess& xi, Exec exec) {
  return snell_envelope(lattice, driver.base, driver.mask(lattice), xi, exec);
}

OptimalityReport verify_optimality(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                   const AdaptedProcess& xi, const SnellResult& result, int k) {
  OptimalityReport report;
  report.k = k;
  const auto nu = result.nu(lattice, k);
  const auto y = g_expectation(lattice, driver, mask, nu, xi, k);
  for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
    report.max_gap = std::max(report.max_gap, std::abs(y.at_macro(lattice, k, idx) - result.U.at(k, idx)));
  }
  report.passed = report.max_gap <= kSupermartingaleTol;
  return report;
}

OptimalityReport verify_optimality(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                                   const SnellResult& result, int k) {
  return verify_optimality(lattice, driver, DriverMask::all(lattice), xi, result, k);
}

SmallestReport smallest_supermartingale_check(const Lattice& lattice, const DriverSpec& driver,
                                              const AdaptedProcess& xi, const AdaptedProcess& candidate) {
  SmallestReport report;
  const auto sm = check_supermartingale(lattice, driver, candidate);
  if (!sm.supermartingale) {
    report.precondition_failure = "candidate is not a g-supermartingale (max violation " +
                                  std::to_string(sm.max_violation) + ")";
    return report;
  }
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (candidate.at(k, idx) < xi.at(k, idx) - kSupermartingaleTol) {
        report.precondition_failure = "candidate does not dominate the payoff at node " +
                                      lattice.node_id(lattice.macro_to_micro(k), idx);
        return report;
      }
    }
  }
  report.preconditions_met = true;
  const auto snell = snell_envelope(lattice, driver, xi);
  report.min_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      report.min_margin = std::min(report.min_margin, candidate.at(k, idx) - snell.U.at(k, idx));
    }
  }
  report.passed = report.min_margin >= -kSupermartingaleTol;
  return report;
}

double snell_recursion_residual(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                const AdaptedProcess& xi, const SnellResult& result) {
  const int T = lattice.macro_periods();
  double worst = 0.0;
  for (int idx = 0; idx < lattice.macro_layer_size(T); ++idx) {
    worst = std::max(worst, std::abs(result.U.at(T, idx) - xi.at(T, idx)));
  }
  for (int k = 0; k < T; ++k) {
    const auto cont = one_period_expectation(lattice, driver, mask, k, result.U.values[k + 1], Exec::Serial);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      worst = std::max(worst, std::abs(result.U.at(k, idx) - std::max(xi.at(k, idx), cont[idx])));
    }
  }
  return worst;
}

}  // namespace dynkin
