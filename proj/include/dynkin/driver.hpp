#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynkin/lattice.hpp"

namespace dynkin {

// g(t, y, z, l) = c0 + a*y + b*z + b_abs*|z| + sum_j gamma_j * nu_j * l_j
struct DriverCoefficients {
  double c0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double b_abs = 0.0;
  std::vector<double> gamma;  // one per jump mark; empty means all zero

  double gamma_at(std::size_t j) const { return j < gamma.size() ? gamma[j] : 0.0; }
  bool is_zero() const;
};

// Time-homogeneous (one entry) or piecewise constant per macro period (T entries).
struct DriverSpec {
  std::vector<DriverCoefficients> periods{DriverCoefficients{}};

  static DriverSpec zero() { return {}; }
  static DriverSpec constant(DriverCoefficients c) { return DriverSpec{{std::move(c)}}; }

  const DriverCoefficients& at(int period) const {
    return periods.size() == 1 ? periods.front() : periods.at(static_cast<std::size_t>(period));
  }
  bool is_zero() const;
};

std::vector<double> nu_weights(const LatticeSpec& spec);
// lambda_j * delta per mark.
std::vector<double> jump_probabilities(const LatticeSpec& spec);

double evaluate(const DriverCoefficients& g, std::span<const double> nu, double y, double z, std::span<const double> ell);
// Throws PreconditionError if ell or nu does not have one entry per mark.
double evaluate(const DriverSpec& driver, std::span<const double> nu, int period, double y, double z,
                std::span<const double> ell);

// K = |a| + |b| + |b_abs| + (sum_j gamma_j^2 nu_j)^(1/2), maximised over periods.
double lipschitz_constant(const DriverSpec& driver, std::span<const double> nu);

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool passed() const;
  std::string failures() const;
};

// Checks: coefficient shape, gamma_j >= -1, K*delta < 1 and the discrete
// monotone-step condition (each one-step map non-decreasing in every child
// value).
ValidationReport validate(const DriverSpec& driver, const Lattice& lattice);

// Throws ValidationError listing failed checks.
void require_valid(const DriverSpec& driver, const Lattice& lattice);

// Driver on/off flag per macro node k < T for the micro steps of period
// (k, k+1] below that node.
struct DriverMask {
  std::vector<std::vector<std::uint8_t>> active;

  static DriverMask all(const Lattice& lattice);
  static DriverMask none(const Lattice& lattice);
  // Active on {tau >= k + 1}, read from the macro-k node.
  static DriverMask until(const Lattice& lattice, const StoppingRule& tau);

  bool on(int k, int index) const { return active[k][index] != 0; }
};

DriverMask operator&(const DriverMask& lhs, const DriverMask& rhs);

// g^tau(t, .) = g(t, .) 1_{t <= tau}
struct StoppedDriver {
  DriverSpec base;
  StoppingRule horizon;

  DriverMask mask(const Lattice& lattice) const { return DriverMask::until(lattice, horizon); }

  // Value for the micro step leaving node (layer, index).
  double evaluate(const Lattice& lattice, int layer, int index, double y, double z, std::span<const double> ell) const;
};

StoppedDriver stop_driver(const DriverSpec& driver, const StoppingRule& tau);

}  // namespace dynkin
