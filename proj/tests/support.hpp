#pragma once

#include <cmath>
#include <random>

#include "dynkin/driver.hpp"
#include "dynkin/lattice.hpp"

namespace dynkin::test {

inline LatticeSpec binomial(int T, int m, double up = 1.0) {
  LatticeSpec s;
  s.macro_periods = T;
  s.micro_per_period = m;
  s.state0 = 100.0;
  s.up = up;
  s.down = 1.0 / up;
  return s;
}

inline LatticeSpec with_jump(LatticeSpec s, double lambda, double nu = 1.0, double factor = 0.9) {
  s.jump_marks.push_back({"j" + std::to_string(s.jump_marks.size()), lambda, nu, factor});
  return s;
}

inline DriverCoefficients coeffs(double c0, double a = 0.0, double b = 0.0, double b_abs = 0.0,
                                 std::vector<double> gamma = {}) {
  DriverCoefficients c;
  c.c0 = c0;
  c.a = a;
  c.b = b;
  c.b_abs = b_abs;
  c.gamma = std::move(gamma);
  return c;
}

// Macro-grid process from a function of (layer, index).
template <typename F>
AdaptedProcess macro_from(const Lattice& lattice, F f) {
  auto p = AdaptedProcess::macro(lattice);
  for (int k = 0; k <= lattice.macro_periods(); ++k)
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) p.at(k, idx) = f(k, idx);
  return p;
}

inline double max_abs_diff(const AdaptedProcess& a, const AdaptedProcess& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    for (std::size_t i = 0; i < a.values[k].size(); ++i) d = std::max(d, std::abs(a.values[k][i] - b.values[k][i]));
  return d;
}

}  // namespace dynkin::test
