#include "dynkin/driver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynkin/errors.hpp"

namespace dynkin {

bool DriverCoefficients::is_zero() const {
  return c0 == 0.0 && a == 0.0 && b == 0.0 && b_abs == 0.0 &&
         std::all_of(gamma.begin(), gamma.end(), [](double g) { return g == 0.0; });
}

bool DriverSpec::is_zero() const {
  return std::all_of(periods.begin(), periods.end(), [](const auto& p) { return p.is_zero(); });
}

std::vector<double> nu_weights(const LatticeSpec& spec) {
  std::vector<double> nu;
  for (const auto& m : spec.jump_marks) nu.push_back(m.nu_weight);
  return nu;
}

std::vector<double> jump_probabilities(const LatticeSpec& spec) {
  std::vector<double> q;
  for (const auto& m : spec.jump_marks) q.push_back(m.intensity * spec.delta());
  return q;
}

double evaluate(const DriverCoefficients& g, std::span<const double> nu, double y, double z,
                std::span<const double> ell) {
  double v = g.c0 + g.a * y + g.b * z + g.b_abs * std::abs(z);
  for (std::size_t j = 0; j < ell.size(); ++j) v += g.gamma_at(j) * nu[j] * ell[j];
  return v;
}

double evaluate(const DriverSpec& driver, std::span<const double> nu, int period, double y, double z,
                std::span<const double> ell) {
  if (ell.size() != nu.size()) {
    throw PreconditionError("driver evaluate: " + std::to_string(ell.size()) + " jump coefficients for " +
                            std::to_string(nu.size()) + " marks");
  }
  return evaluate(driver.at(period), nu, y, z, ell);
}

double lipschitz_constant(const DriverSpec& driver, std::span<const double> nu) {
  double k_max = 0.0;
  for (const auto& g : driver.periods) {
    double jump = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j) jump += g.gamma_at(j) * g.gamma_at(j) * nu[j];
    k_max = std::max(k_max, std::abs(g.a) + std::abs(g.b) + std::abs(g.b_abs) + std::sqrt(jump));
  }
  return k_max;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string ValidationReport::failures() const {
  std::string out;
  for (const auto& c : checks) {
    if (c.passed) continue;
    if (!out.empty()) out += "; ";
    out += c.name + ": " + c.message;
  }
  return out;
}

ValidationReport validate(const DriverSpec& driver, const Lattice& lattice) {
  ValidationReport report;
  const auto& spec = lattice.spec();
  const std::size_t marks = spec.jump_marks.size();
  const double delta = lattice.delta();
  const auto nu = nu_weights(spec);
  const auto q = jump_probabilities(spec);

  ValidationCheck shape{"shape", true, ""};
  const auto n = driver.periods.size();
  if (n != 1 && n != static_cast<std::size_t>(lattice.macro_periods())) {
    shape = {"shape", false, "driver has " + std::to_string(n) + " period entries; expected 1 or T"};
  }
  for (const auto& g : driver.periods) {
    if (!g.gamma.empty() && g.gamma.size() != marks) {
      shape = {"shape", false, "gamma has " + std::to_string(g.gamma.size()) + " entries for " +
                                   std::to_string(marks) + " jump marks"};
    }
    for (double v : {g.c0, g.a, g.b, g.b_abs}) {
      if (!std::isfinite(v)) shape = {"shape", false, "non-finite coefficient"};
    }
  }
  report.checks.push_back(shape);
  if (!shape.passed) return report;

  ValidationCheck gamma{"gamma_lower_bound", true, ""};
  for (std::size_t p = 0; p < driver.periods.size() && gamma.passed; ++p) {
    for (std::size_t j = 0; j < marks; ++j) {
      const double gj = driver.periods[p].gamma_at(j);
      if (!(gj >= -1.0)) {
        std::ostringstream os;
        os << "gamma_" << j << " = " << gj << " < -1 in period " << p
           << " (jump-sensitivity lower bound gamma >= -1 violated)";
        gamma = {"gamma_lower_bound", false, os.str()};
        break;
      }
    }
  }
  report.checks.push_back(gamma);

  const double K = lipschitz_constant(driver, nu);
  ValidationCheck contraction{"contraction", K * delta < 1.0, ""};
  {
    std::ostringstream os;
    os << "K*delta = " << K * delta << (contraction.passed ? " < 1" : " >= 1");
    contraction.message = os.str();
  }
  report.checks.push_back(contraction);

  // dy/dY'_b >= 0 for every branch and every sign of z: worst case over the
  // z-slope is -(|b| + |b_abs|)/sqrt(delta).
  ValidationCheck monotone{"monotone_step", true, ""};
  const double sqrt_delta = std::sqrt(delta);
  for (std::size_t p = 0; p < driver.periods.size() && monotone.passed; ++p) {
    const auto& g = driver.periods[p];
    double drift = 0.0;
    for (std::size_t j = 0; j < marks; ++j)
      if (q[j] > 0.0) drift += g.gamma_at(j) * nu[j];
    const double base = 1.0 - sqrt_delta * (std::abs(g.b) + std::abs(g.b_abs)) - delta * drift;
    double worst = base;
    for (std::size_t j = 0; j < marks; ++j) {
      if (q[j] > 0.0) worst = std::min(worst, base + g.gamma_at(j) * nu[j] * delta / q[j]);
    }
    if (worst < 0.0) {
      std::ostringstream os;
      os << "one-step map not monotone in period " << p << " (min branch sensitivity factor " << worst << " < 0)";
      monotone = {"monotone_step", false, os.str()};
    }
  }
  report.checks.push_back(monotone);
  return report;
}

void require_valid(const DriverSpec& driver, const Lattice& lattice) {
  auto report = validate(driver, lattice);
  if (!report.passed()) throw ValidationError("invalid driver: " + report.failures());
}

DriverMask DriverMask::all(const Lattice& lattice) {
  DriverMask m;
  for (int k = 0; k < lattice.macro_periods(); ++k) m.active.emplace_back(lattice.macro_layer_size(k), 1);
  return m;
}

DriverMask DriverMask::none(const Lattice& lattice) {
  DriverMask m;
  for (int k = 0; k < lattice.macro_periods(); ++k) m.active.emplace_back(lattice.macro_layer_size(k), 0);
  return m;
}

DriverMask DriverMask::until(const Lattice& lattice, const StoppingRule& tau) {
  StopView view(lattice, tau);
  DriverMask m;
  for (int k = 0; k < lattice.macro_periods(); ++k) {
    auto& layer = m.active.emplace_back(lattice.macro_layer_size(k), 0);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) layer[idx] = view.continuing(k, idx) ? 1 : 0;
  }
  return m;
}

DriverMask operator&(const DriverMask& lhs, const DriverMask& rhs) {
  DriverMask m = lhs;
  for (std::size_t k = 0; k < m.active.size(); ++k)
    for (std::size_t i = 0; i < m.active[k].size(); ++i) m.active[k][i] &= rhs.active[k][i];
  return m;
}

double StoppedDriver::evaluate(const Lattice& lattice, int layer, int index, double y, double z,
                               std::span<const double> ell) const {
  if (layer >= lattice.last_layer()) throw DomainError("no micro step leaves the terminal layer");
  const int k = lattice.period_of(layer);
  const int anchor = lattice.is_macro_layer(layer) ? index : lattice.node(layer, index).anchor;
  StopView view(lattice, horizon);
  if (!view.continuing(k, anchor)) return 0.0;
  return dynkin::evaluate(base, nu_weights(lattice.spec()), k, y, z, ell);
}

StoppedDriver stop_driver(const DriverSpec& driver, const StoppingRule& tau) { return StoppedDriver{driver, tau}; }

}  // namespace dynkin
