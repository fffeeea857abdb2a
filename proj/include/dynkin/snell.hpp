#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynkin/driver.hpp"
#include "dynkin/gexp.hpp"
#include "dynkin/lattice.hpp"

namespace dynkin {

// Tolerance of the contact test U_l == xi_l; ties resolve toward stopping.
constexpr double kContactTol = 1e-10;

struct SnellResult {
  AdaptedProcess U;                               // macro grid
  std::vector<std::vector<std::uint8_t>> contact;  // |U - xi| <= kContactTol
  double V0 = 0.0;

  // nu_k = inf{l >= k : U_l = xi_l}; continue on layers below k.
  StoppingRule nu(const Lattice& lattice, int k) const;
  // Risk at time 0, V(0) = -V0.
  double risk() const { return -V0; }
};

// U_T = xi_T, U_k = max(xi_k, E^g_{k,k+1}(U_{k+1})) with the driver gated by mask.
SnellResult snell_envelope(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                           const AdaptedProcess& xi, Exec exec = Exec::Parallel);
SnellResult snell_envelope(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                           Exec exec = Exec::Parallel);
SnellResult snell_envelope(const Lattice& lattice, const StoppedDriver& driver, const AdaptedProcess& xi,
                           Exec exec = Exec::Parallel);

struct OptimalityReport {
  int k = 0;
  double max_gap = 0.0;  // max |E^g_{k,nu_k}(xi_{nu_k}) - U_k| on layer k
  bool passed = true;
};

// Checks U_k = E^g_{k,nu_k}(xi_{nu_k}) node-wise on layer k to 1e-10.
OptimalityReport verify_optimality(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                   const AdaptedProcess& xi, const SnellResult& result, int k);
OptimalityReport verify_optimality(const Lattice& lattice, const DriverSpec& driver, const AdaptedProcess& xi,
                                   const SnellResult& result, int k);

struct SmallestReport {
  bool preconditions_met = false;
  std::string precondition_failure;
  bool passed = false;        // candidate >= U - tol everywhere (only if preconditions met)
  double min_margin = 0.0;    // min of candidate - U
};

SmallestReport smallest_supermartingale_check(const Lattice& lattice, const DriverSpec& driver,
                                              const AdaptedProcess& xi, const AdaptedProcess& candidate);

// Re-checks the max recursion node-wise after a pass; returns the max deviation.
double snell_recursion_residual(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                const AdaptedProcess& xi, const SnellResult& result);

}  // namespace dynkin
