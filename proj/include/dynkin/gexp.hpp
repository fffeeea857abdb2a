#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynkin/driver.hpp"
#include "dynkin/lattice.hpp"

namespace dynkin {

enum class Exec { Serial, Parallel };

struct OneStepSolution {
  double y = 0.0;
  double z = 0.0;
  std::vector<double> ell;
  int iterations = 0;
};

// Per-lattice constants of the one-step scheme.
struct StepContext {
  std::span<const Branch> branches;
  double delta = 1.0;
  std::vector<double> nu;
  std::vector<double> jump_prob;  // lambda_j * delta

  explicit StepContext(const Lattice& lattice);
  StepContext(std::span<const Branch> branches, double delta, std::vector<double> nu, std::vector<double> jump_prob);
};

// Solves y = E[Y'] + g(y, z, l) * delta with
//   z   = sum_b p_b Y'_b dW_b / delta
//   l_j = sum_b p_b Y'_b (1{jump_b = j} - q_j) / q_j   (0 when q_j = 0)
// by Picard iteration from E[Y']. g == nullptr is the zero driver.
// Throws SolverError if 100 iterations do not converge.
OneStepSolution solve_one_step(const StepContext& ctx, const DriverCoefficients* g, std::span<const double> next_values);

// One step at a node with the (unstopped) driver of the node's period.
// Throws PreconditionError on arity mismatch, DomainError at terminal nodes.
OneStepSolution one_step(const Lattice& lattice, NodeRef node, const DriverSpec& driver,
                         std::span<const double> next_values);

// Backward pass over macro period k: given values on micro layer m(k+1) in
// `values`, fills micro layers m*k .. m(k+1)-1. Where frozen[anchor] is not
// NaN the whole period below that anchor is set to it. `frozen` may be empty.
void period_backward(const Lattice& lattice, const StepContext& ctx, const DriverSpec& driver, const DriverMask& mask,
                     int k, std::span<const double> frozen, AdaptedProcess& values, Exec exec = Exec::Parallel);

// E^g_{k,k+1}(next) at every macro-k node, with the driver gated by `mask`.
std::vector<double> one_period_expectation(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                           int k, std::span<const double> next, Exec exec = Exec::Parallel);

struct GExpectationProcess {
  AdaptedProcess values;  // micro grid, layers >= m * from_k
  StoppingRule terminal;

  double root() const { return values.values.front().front(); }
  double at_macro(const Lattice& lattice, int k, int index) const {
    return values.at(lattice.macro_to_micro(k), index);
  }
};

// E^g_{k,tau}(xi_tau) on all micro layers >= m * from_k. The driver is
// g * mask * 1_{t <= tau}; values at and after tau are frozen at xi_tau.
// terminal_values is a macro-grid process read at the stop nodes of tau.
GExpectationProcess g_expectation(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                  const StoppingRule& terminal_rule, const AdaptedProcess& terminal_values,
                                  int from_k = 0, Exec exec = Exec::Parallel);
GExpectationProcess g_expectation(const Lattice& lattice, const DriverSpec& driver, const StoppingRule& terminal_rule,
                                  const AdaptedProcess& terminal_values, int from_k = 0, Exec exec = Exec::Parallel);
GExpectationProcess g_expectation(const Lattice& lattice, const StoppedDriver& driver,
                                  const StoppingRule& terminal_rule, const AdaptedProcess& terminal_values,
                                  int from_k = 0, Exec exec = Exec::Parallel);

// rho^g = -E^g, pointwise.
AdaptedProcess risk_measure(const GExpectationProcess& process);
AdaptedProcess risk_measure(const AdaptedProcess& values);

constexpr double kSupermartingaleTol = 1e-10;

struct SupermartingaleReport {
  bool supermartingale = true;  // phi_k >= E^g_{k,k+1}(phi_{k+1}) - tol everywhere
  bool martingale = true;       // |phi_k - E^g_{k,k+1}(phi_{k+1})| <= tol everywhere
  double max_violation = 0.0;   // max of E - phi
  double max_gap = 0.0;         // max of |E - phi|
  std::size_t nodes_checked = 0;
  std::size_t violations = 0;
  std::size_t equal_nodes = 0;
  std::vector<std::string> violating_nodes;  // first few ids
};

// Checks macro nodes on layers from_k .. T-1 under g * mask.
SupermartingaleReport check_supermartingale(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                            const AdaptedProcess& phi, int from_k = 0);
SupermartingaleReport check_supermartingale(const Lattice& lattice, const DriverSpec& driver,
                                            const AdaptedProcess& phi, int from_k = 0);
SupermartingaleReport check_supermartingale(const Lattice& lattice, const StoppedDriver& driver,
                                            const AdaptedProcess& phi, int from_k = 0);

struct OptionalSamplingReport {
  double max_excess = 0.0;  // max of E^g_{sigma,tau}(phi_tau) - phi_sigma
  double max_gap = 0.0;
  std::size_t nodes_checked = 0;
  bool inequality_holds(double tol = kSupermartingaleTol) const { return max_excess <= tol; }
  bool equality_holds(double tol = kSupermartingaleTol) const { return max_gap <= tol; }
};

// Throws PreconditionError unless sigma <= tau on every path.
OptionalSamplingReport check_optional_sampling(const Lattice& lattice, const DriverSpec& driver,
                                               const AdaptedProcess& phi, const StoppingRule& sigma,
                                               const StoppingRule& tau);

// Event per macro node; meaningful on the stop nodes of a rule.
using MacroEvent = std::vector<std::vector<std::uint8_t>>;

struct LocalizationReport {
  double max_gap = 0.0;
  std::size_t nodes_checked = 0;
  std::vector<double> lhs;  // per tau-stop node, in (layer, index) order
  std::vector<double> rhs;
};

// Compares 1_A E^g_{tau,T}(zeta) with E^{g 1_A 1_{]tau,T]}}_{tau,T}(1_A zeta)
// at the stop nodes of tau. zeta is read on layer T. Throws PreconditionError
// if A marks a node that is not a stop node of tau.
LocalizationReport indicator_localization_check(const Lattice& lattice, const DriverSpec& driver,
                                                const StoppingRule& tau, const MacroEvent& event,
                                                const AdaptedProcess& zeta);

MacroEvent empty_event(const Lattice& lattice);

}  // namespace dynkin
