#include "dynkin/gexp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dynkin/errors.hpp"
#include "dynkin/parallel.hpp"

namespace dynkin {

namespace {

constexpr int kMaxPicard = 100;
constexpr double kPicardTol = 1e-12;
constexpr double kPicardTight = 1e-14;
constexpr int kParallelMinNodes = 256;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fills ell (size J) and returns (E[Y'], z).
std::pair<double, double> project(const StepContext& ctx, std::span<const double> v, std::span<double> ell) {
  double e = 0.0;
  double zs = 0.0;
  for (std::size_t b = 0; b < ctx.branches.size(); ++b) {
    e += ctx.branches[b].prob * v[b];
    zs += ctx.branches[b].prob * v[b] * ctx.branches[b].dW;
  }
  for (std::size_t j = 0; j < ell.size(); ++j) {
    const double q = ctx.jump_prob[j];
    if (q <= 0.0) {
      ell[j] = 0.0;
      continue;
    }
    double s = 0.0;
    for (std::size_t b = 0; b < ctx.branches.size(); ++b) {
      const double hit = ctx.branches[b].jump == static_cast<int>(j) ? 1.0 : 0.0;
      s += ctx.branches[b].prob * v[b] * (hit - q);
    }
    ell[j] = s / q;
  }
  return {e, zs / ctx.delta};
}

double picard(const StepContext& ctx, const DriverCoefficients& g, double e, double z, std::span<const double> ell,
              int* iterations) {
  double y = e;
  double step = 0.0;
  for (int it = 1; it <= kMaxPicard; ++it) {
    const double next = e + ctx.delta * evaluate(g, ctx.nu, y, z, ell);
    step = std::abs(next - y);
    y = next;
    if (step <= kPicardTight * std::max(1.0, std::abs(y))) {
      if (iterations) *iterations = it;
      return y;
    }
  }
  if (step <= kPicardTol) {
    if (iterations) *iterations = kMaxPicard;
    return y;
  }
  throw SolverError("Picard iteration did not converge in 100 steps (last step " + std::to_string(step) +
                    "); driver bypassed validation?");
}

// Value of one node inside period_backward; `kids` and `ell` are scratch.
double node_value(const Lattice& lattice, const StepContext& ctx, const DriverSpec& driver, const DriverMask& mask,
                  int k, std::span<const double> frozen, const AdaptedProcess& values, int i, int idx,
                  std::vector<double>& kids, std::vector<double>& ell) {
  const int anchor = lattice.is_macro_layer(i) ? idx : lattice.node(i, idx).anchor;
  if (!frozen.empty() && !std::isnan(frozen[anchor])) return frozen[anchor];
  const auto child = lattice.child_indices(i, idx);
  const auto& next = values.values[i + 1];
  for (std::size_t b = 0; b < child.size(); ++b) kids[b] = next[child[b]];
  auto [e, z] = project(ctx, kids, ell);
  if (!mask.on(k, anchor)) return e;
  return picard(ctx, driver.at(k), e, z, ell, nullptr);
}

void layer_serial(const Lattice& lattice, const StepContext& ctx, const DriverSpec& driver, const DriverMask& mask,
                  int k, std::span<const double> frozen, AdaptedProcess& values, int i) {
  std::vector<double> kids(ctx.branches.size());
  std::vector<double> ell(ctx.nu.size());
  auto& out = values.values[i];
  for (int idx = 0; idx < lattice.layer_size(i); ++idx) {
    out[idx] = node_value(lattice, ctx, driver, mask, k, frozen, values, i, idx, kids, ell);
  }
}

void layer_parallel(const Lattice& lattice, const StepContext& ctx, const DriverSpec& driver, const DriverMask& mask,
                    int k, std::span<const double> frozen, AdaptedProcess& values, int i) {
  const int n = lattice.layer_size(i);
  const int threads = thread_count();
  if (threads <= 1 || n < kParallelMinNodes) {
    layer_serial(lattice, ctx, driver, mask, k, frozen, values, i);
    return;
  }
  auto& out = values.values[i];
  bool failed = false;
  std::string message;
#pragma omp parallel num_threads(threads)
  {
    std::vector<double> kids(ctx.branches.size());
    std::vector<double> ell(ctx.nu.size());
#pragma omp for schedule(static)
    for (int idx = 0; idx < n; ++idx) {
      try {
        out[idx] = node_value(lattice, ctx, driver, mask, k, frozen, values, i, idx, kids, ell);
      } catch (const std::exception& e) {
#pragma omp critical(dynkin_gexp_error)
        {
          if (!failed) message = e.what();
          failed = true;
        }
      }
    }
  }
  if (failed) throw SolverError(message);
}

AdaptedProcess period_scratch(const Lattice& lattice, int k) {
  AdaptedProcess p;
  p.grid = Grid::Micro;
  p.values.resize(lattice.micro_layers());
  const int m = lattice.micro_per_period();
  for (int i = m * k; i <= m * (k + 1); ++i) p.values[i].assign(lattice.layer_size(i), 0.0);
  p.first_layer = m * k;
  return p;
}

void check_macro_shape(const Lattice& lattice, const AdaptedProcess& p, const char* what) {
  if (p.grid != Grid::Macro || p.layers() != lattice.macro_periods() + 1) {
    throw PreconditionError(std::string(what) + ": expected a macro-grid process with T+1 layers");
  }
  for (int k = p.first_layer; k <= lattice.macro_periods(); ++k) {
    if (static_cast<int>(p.values[k].size()) != lattice.macro_layer_size(k)) {
      throw PreconditionError(std::string(what) + ": layer " + std::to_string(k) + " has wrong node count");
    }
  }
}

}  // namespace

StepContext::StepContext(const Lattice& lattice)
    : branches(lattice.branches()),
      delta(lattice.delta()),
      nu(nu_weights(lattice.spec())),
      jump_prob(jump_probabilities(lattice.spec())) {}

StepContext::StepContext(std::span<const Branch> b, double d, std::vector<double> n, std::vector<double> q)
    : branches(b), delta(d), nu(std::move(n)), jump_prob(std::move(q)) {}

OneStepSolution solve_one_step(const StepContext& ctx, const DriverCoefficients* g, std::span<const double> next) {
  if (next.size() != ctx.branches.size()) {
    throw PreconditionError("one_step: " + std::to_string(next.size()) + " child values for " +
                            std::to_string(ctx.branches.size()) + " branches");
  }
  OneStepSolution s;
  s.ell.assign(ctx.nu.size(), 0.0);
  auto [e, z] = project(ctx, next, s.ell);
  s.z = z;
  s.y = g ? picard(ctx, *g, e, z, s.ell, &s.iterations) : e;
  return s;
}

OneStepSolution one_step(const Lattice& lattice, NodeRef node, const DriverSpec& driver,
                         std::span<const double> next_values) {
  lattice.child_indices(node.layer, node.index);
  StepContext ctx(lattice);
  return solve_one_step(ctx, &driver.at(lattice.period_of(node.layer)), next_values);
}

void period_backward(const Lattice& lattice, const StepContext& ctx, const DriverSpec& driver, const DriverMask& mask,
                     int k, std::span<const double> frozen, AdaptedProcess& values, Exec exec) {
  const int m = lattice.micro_per_period();
  for (int i = m * (k + 1) - 1; i >= m * k; --i) {
    if (exec == Exec::Serial) {
      layer_serial(lattice, ctx, driver, mask, k, frozen, values, i);
    } else {
      layer_parallel(lattice, ctx, driver, mask, k, frozen, values, i);
    }
  }
}

std::vector<double> one_period_expectation(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                           int k, std::span<const double> next, Exec exec) {
  const int m = lattice.micro_per_period();
  if (static_cast<int>(next.size()) != lattice.macro_layer_size(k + 1)) {
    throw PreconditionError("one_period_expectation: wrong node count on layer " + std::to_string(k + 1));
  }
  StepContext ctx(lattice);
  AdaptedProcess scratch = period_scratch(lattice, k);
  scratch.values[m * (k + 1)].assign(next.begin(), next.end());
  period_backward(lattice, ctx, driver, mask, k, {}, scratch, exec);
  return std::move(scratch.values[m * k]);
}

GExpectationProcess g_expectation(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                  const StoppingRule& terminal_rule, const AdaptedProcess& terminal_values,
                                  int from_k, Exec exec) {
  const int T = lattice.macro_periods();
  const int m = lattice.micro_per_period();
  if (from_k < 0 || from_k > T) throw PreconditionError("g_expectation: from_k outside 0..T");
  check_macro_shape(lattice, terminal_values, "g_expectation terminal values");

  StopView view(lattice, terminal_rule);
  const DriverMask effective = mask & DriverMask::until(lattice, terminal_rule);
  StepContext ctx(lattice);

  GExpectationProcess out;
  out.terminal = terminal_rule;
  out.values.grid = Grid::Micro;
  out.values.first_layer = m * from_k;
  out.values.values.resize(lattice.micro_layers());
  for (int i = m * from_k; i < lattice.micro_layers(); ++i) out.values.values[i].assign(lattice.layer_size(i), 0.0);

  auto& last = out.values.values[m * T];
  for (int idx = 0; idx < lattice.macro_layer_size(T); ++idx) {
    last[idx] = terminal_values.at(view.stop_layer(T, idx), view.stop_index(T, idx));
  }
  std::vector<double> frozen;
  for (int k = T - 1; k >= from_k; --k) {
    frozen.assign(lattice.macro_layer_size(k), kNaN);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (view.stopped(k, idx)) frozen[idx] = terminal_values.at(view.stop_layer(k, idx), view.stop_index(k, idx));
    }
    period_backward(lattice, ctx, driver, effective, k, frozen, out.values, exec);
  }
  return out;
}

GExpectationProcess g_expectation(const Lattice& lattice, const DriverSpec& driver, const StoppingRule& terminal_rule,
                                  const AdaptedProcess& terminal_values, int from_k, Exec exec) {
  return g_expectation(lattice, driver, DriverMask::all(lattice), terminal_rule, terminal_values, from_k, exec);
}

GExpectationProcess g_expectation(const Lattice& lattice, const StoppedDriver& driver,
                                  const StoppingRule& terminal_rule, const AdaptedProcess& terminal_values,
                                  int from_k, Exec exec) {
  return g_expectation(lattice, driver.base, driver.mask(lattice), terminal_rule, terminal_values, from_k, exec);
}

AdaptedProcess risk_measure(const AdaptedProcess& values) {
  AdaptedProcess out = values;
  for (auto& layer : out.values)
    for (auto& v : layer) v = -v;
  return out;
}

AdaptedProcess risk_measure(const GExpectationProcess& process) { return risk_measure(process.values); }

SupermartingaleReport check_supermartingale(const Lattice& lattice, const DriverSpec& driver, const DriverMask& mask,
                                            const AdaptedProcess& phi, int from_k) {
  check_macro_shape(lattice, phi, "check_supermartingale");
  SupermartingaleReport report;
  for (int k = from_k; k < lattice.macro_periods(); ++k) {
    const auto e = one_period_expectation(lattice, driver, mask, k, phi.values[k + 1]);
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      const double diff = e[idx] - phi.at(k, idx);
      ++report.nodes_checked;
      report.max_violation = std::max(report.max_violation, diff);
      report.max_gap = std::max(report.max_gap, std::abs(diff));
      if (std::abs(diff) <= kSupermartingaleTol) {
        ++report.equal_nodes;
      } else {
        report.martingale = false;
      }
      if (diff > kSupermartingaleTol) {
        report.supermartingale = false;
        ++report.violations;
        if (report.violating_nodes.size() < 8) {
          report.violating_nodes.push_back(lattice.node_id(lattice.macro_to_micro(k), idx));
        }
      }
    }
  }
  return report;
}

SupermartingaleReport check_supermartingale(const Lattice& lattice, const DriverSpec& driver,
                                            const AdaptedProcess& phi, int from_k) {
  return check_supermartingale(lattice, driver, DriverMask::all(lattice), phi, from_k);
}

SupermartingaleReport check_supermartingale(const Lattice& lattice, const StoppedDriver& driver,
                                            const AdaptedProcess& phi, int from_k) {
  return check_supermartingale(lattice, driver.base, driver.mask(lattice), phi, from_k);
}

OptionalSamplingReport check_optional_sampling(const Lattice& lattice, const DriverSpec& driver,
                                               const AdaptedProcess& phi, const StoppingRule& sigma,
                                               const StoppingRule& tau) {
  if (!pathwise_leq(lattice, sigma, tau)) {
    throw PreconditionError("check_optional_sampling: sigma <= tau violated on some path");
  }
  const auto y = g_expectation(lattice, driver, tau, phi);
  StopView view(lattice, sigma);
  OptionalSamplingReport report;
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (view.stop_layer(k, idx) != k) continue;
      const double diff = y.at_macro(lattice, k, idx) - phi.at(k, idx);
      report.max_excess = std::max(report.max_excess, diff);
      report.max_gap = std::max(report.max_gap, std::abs(diff));
      ++report.nodes_checked;
    }
  }
  return report;
}

MacroEvent empty_event(const Lattice& lattice) {
  MacroEvent e;
  for (int k = 0; k <= lattice.macro_periods(); ++k) e.emplace_back(lattice.macro_layer_size(k), 0);
  return e;
}

LocalizationReport indicator_localization_check(const Lattice& lattice, const DriverSpec& driver,
                                                const StoppingRule& tau, const MacroEvent& event,
                                                const AdaptedProcess& zeta) {
  const int T = lattice.macro_periods();
  check_macro_shape(lattice, zeta, "indicator_localization_check");
  if (static_cast<int>(event.size()) != T + 1) throw PreconditionError("event has wrong layer count");
  StopView view(lattice, tau);
  for (int k = 0; k <= T; ++k) {
    if (static_cast<int>(event[k].size()) != lattice.macro_layer_size(k)) {
      throw PreconditionError("event layer " + std::to_string(k) + " has wrong node count");
    }
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (event[k][idx] && view.stop_layer(k, idx) != k) {
        throw PreconditionError("event is not measurable at tau: node " +
                                lattice.node_id(lattice.macro_to_micro(k), idx) + " is not a stop node");
      }
    }
  }
  auto in_event = [&](int k, int idx) {
    return view.stopped(k, idx) && event[view.stop_layer(k, idx)][view.stop_index(k, idx)] != 0;
  };

  const auto horizon = StoppingRule::at_horizon(lattice);
  const auto full = g_expectation(lattice, driver, horizon, zeta);

  DriverMask localized = DriverMask::none(lattice);
  for (int k = 0; k < T; ++k)
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) localized.active[k][idx] = in_event(k, idx) ? 1 : 0;
  AdaptedProcess zeta_a = zeta;
  for (int idx = 0; idx < lattice.macro_layer_size(T); ++idx) {
    if (!in_event(T, idx)) zeta_a.at(T, idx) = 0.0;
  }
  const auto local = g_expectation(lattice, driver, localized, horizon, zeta_a);

  LocalizationReport report;
  for (int k = 0; k <= T; ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (view.stop_layer(k, idx) != k) continue;
      const double lhs = event[k][idx] ? full.at_macro(lattice, k, idx) : 0.0;
      const double rhs = local.at_macro(lattice, k, idx);
      report.lhs.push_back(lhs);
      report.rhs.push_back(rhs);
      report.max_gap = std::max(report.max_gap, std::abs(lhs - rhs));
      ++report.nodes_checked;
    }
  }
  return report;
}

}  // namespace dynkin
