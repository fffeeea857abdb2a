#include "dynkin/lattice.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dynkin/errors.hpp"

namespace dynkin {

namespace {

constexpr std::size_t kMaxNodes = 5'000'000;

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

void LatticeSpec::validate() const {
  require(macro_periods >= 1, "macro_periods must be >= 1 (T >= 1)");
  require(micro_per_period >= 1, "micro_per_period must be >= 1 (m >= 1)");
  require(std::isfinite(state0), "state0 must be finite");
  require(up > 0.0 && std::isfinite(up), "up factor must be > 0");
  require(down > 0.0 && std::isfinite(down), "down factor must be > 0");
  double total = 0.0;
  std::set<std::string> ids;
  for (const auto& mark : jump_marks) {
    require(ids.insert(mark.id).second, "duplicate jump mark id '" + mark.id + "'");
    require(mark.intensity >= 0.0 && std::isfinite(mark.intensity),
            "jump mark '" + mark.id + "': intensity must be >= 0");
    require(mark.nu_weight > 0.0 && std::isfinite(mark.nu_weight),
            "jump mark '" + mark.id + "': nu_weight must be > 0");
    require(mark.jump_factor > 0.0 && std::isfinite(mark.jump_factor),
            "jump mark '" + mark.id + "': jump_factor must be > 0");
    total += mark.intensity;
  }
  if (total * delta() >= 1.0) {
    std::ostringstream os;
    os << "lambda*delta >= 1 violates sub-distribution (delta * sum lambda_j = " << total * delta() << ")";
    throw ValidationError(os.str());
  }
}

Lattice::Lattice(LatticeSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int marks = static_cast<int>(spec_.jump_marks.size());
  const double delta = spec_.delta();
  const double sqrt_delta = std::sqrt(delta);

  double jump_mass = 0.0;
  for (const auto& mark : spec_.jump_marks) jump_mass += mark.intensity * delta;
  for (double sign : {1.0, -1.0}) {
    branches_.push_back({0.5 * (1.0 - jump_mass), sign * sqrt_delta, -1});
    for (int j = 0; j < marks; ++j) {
      const double p = spec_.jump_marks[j].intensity * delta;
      if (p > 0.0) branches_.push_back({0.5 * p, sign * sqrt_delta, j});
    }
  }

  const int steps = spec_.macro_periods * spec_.micro_per_period;
  const int fan = branch_count();
  layers_.resize(steps + 1);
  children_.resize(steps);

  Node root;
  root.jumps.assign(marks, 0);
  root.local_jumps.assign(marks, 0);
  root.state = spec_.state0;
  layers_[0].push_back(std::move(root));

  std::size_t total = 1;
  for (int i = 0; i < steps; ++i) {
    const bool opens_period = is_macro_layer(i);
    std::map<std::vector<int>, int> keys;
    auto& next = layers_[i + 1];
    auto& kids = children_[i];
    kids.resize(layers_[i].size() * fan);
    for (std::size_t idx = 0; idx < layers_[i].size(); ++idx) {
      for (int b = 0; b < fan; ++b) {
        const Node& parent = layers_[i][idx];
        const Branch& br = branches_[b];
        Node child;
        child.anchor = opens_period ? static_cast<int>(idx) : parent.anchor;
        child.local_up = (opens_period ? 0 : parent.local_up) + (br.dW > 0.0 ? 1 : 0);
        child.local_jumps = opens_period ? std::vector<int>(marks, 0) : parent.local_jumps;
        child.jumps = parent.jumps;
        if (br.jump >= 0) {
          ++child.local_jumps[br.jump];
          ++child.jumps[br.jump];
        }
        child.up_count = parent.up_count + (br.dW > 0.0 ? 1 : 0);

        std::vector<int> key;
        key.reserve(2 + marks);
        key.push_back(child.anchor);
        key.push_back(child.local_up);
        key.insert(key.end(), child.local_jumps.begin(), child.local_jumps.end());
        auto [it, inserted] = keys.emplace(std::move(key), static_cast<int>(next.size()));
        if (inserted) {
          const int downs = (i + 1) - child.up_count;
          double s = spec_.state0 * std::pow(spec_.up, child.up_count) * std::pow(spec_.down, downs);
          for (int j = 0; j < marks; ++j) {
            if (child.jumps[j] > 0) s *= std::pow(spec_.jump_marks[j].jump_factor, child.jumps[j]);
          }
          child.state = s;
          next.push_back(std::move(child));
          if (++total > kMaxNodes) throw ValidationError("lattice exceeds the node cap of 5000000 nodes");
        }
        kids[idx * fan + b] = it->second;
      }
    }
  }
}

std::size_t Lattice::node_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.size();
  return n;
}

std::size_t Lattice::nonterminal_macro_nodes() const {
  std::size_t n = 0;
  for (int k = 0; k < macro_periods(); ++k) n += macro_layer_size(k);
  return n;
}

std::span<const int> Lattice::child_indices(int layer, int index) const {
  if (layer < 0 || layer >= last_layer()) {
    throw DomainError("node " + node_id(layer, index) + " is terminal and has no children");
  }
  const auto fan = static_cast<std::size_t>(branch_count());
  return std::span<const int>(children_[layer]).subspan(static_cast<std::size_t>(index) * fan, fan);
}

double Lattice::conditional_expectation(std::span<const double> child_values) const {
  return dynkin::conditional_expectation(branches(), child_values);
}

void Lattice::append_segment(std::string& out, const Node& n, int steps) const {
  out += std::to_string(2 * n.local_up - steps);
  for (int c : n.local_jumps) {
    out += '.';
    out += std::to_string(c);
  }
}

std::string Lattice::node_id(int layer, int index) const {
  if (layer == 0) return "0";
  const int m = micro_per_period();
  std::vector<std::string> segments;
  int i = layer;
  int idx = index;
  while (i > 0) {
    const Node& n = node(i, idx);
    const int anchor_layer = is_macro_layer(i) ? i - m : m * period_of(i);
    std::string seg;
    append_segment(seg, n, i - anchor_layer);
    segments.push_back(std::move(seg));
    idx = n.anchor;
    i = anchor_layer;
  }
  std::string out = std::to_string(layer);
  out += '-';
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (it != segments.rbegin()) out += '/';
    out += *it;
  }
  return out;
}

std::optional<NodeRef> Lattice::find(std::string_view id) const {
  int layer = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), layer);
  if (ec != std::errc() || layer < 0 || layer > last_layer()) return std::nullopt;
  for (int idx = 0; idx < layer_size(layer); ++idx) {
    if (node_id(layer, idx) == id) return NodeRef{layer, idx};
  }
  return std::nullopt;
}

std::vector<Child> children(const Lattice& lattice, NodeRef node) {
  auto kids = lattice.child_indices(node.layer, node.index);
  std::vector<Child> out;
  out.reserve(kids.size());
  for (std::size_t b = 0; b < kids.size(); ++b) {
    out.push_back({lattice.branches()[b], NodeRef{node.layer + 1, kids[b]}});
  }
  return out;
}

double conditional_expectation(std::span<const Branch> branches, std::span<const double> values) {
  if (branches.size() != values.size()) {
    throw PreconditionError("conditional_expectation: " + std::to_string(values.size()) + " values for " +
                            std::to_string(branches.size()) + " branches");
  }
  double s = 0.0;
  for (std::size_t b = 0; b < branches.size(); ++b) s += branches[b].prob * values[b];
  return s;
}

double conditional_expectation(const Lattice& lattice, NodeRef node, std::span<const double> values) {
  lattice.child_indices(node.layer, node.index);  // terminal check
  return conditional_expectation(lattice.branches(), values);
}

AdaptedProcess AdaptedProcess::macro(const Lattice& lattice, double fill) {
  AdaptedProcess p;
  p.grid = Grid::Macro;
  for (int k = 0; k <= lattice.macro_periods(); ++k) p.values.emplace_back(lattice.macro_layer_size(k), fill);
  return p;
}

AdaptedProcess AdaptedProcess::micro(const Lattice& lattice, double fill) {
  AdaptedProcess p;
  p.grid = Grid::Micro;
  for (int i = 0; i < lattice.micro_layers(); ++i) p.values.emplace_back(lattice.layer_size(i), fill);
  return p;
}

AdaptedProcess macro_layers_of(const Lattice& lattice, const AdaptedProcess& micro) {
  if (micro.grid != Grid::Micro) return micro;
  AdaptedProcess p;
  p.grid = Grid::Macro;
  p.first_layer = (micro.first_layer + lattice.micro_per_period() - 1) / lattice.micro_per_period();
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    p.values.push_back(k < p.first_layer ? std::vector<double>{} : micro.values[lattice.macro_to_micro(k)]);
  }
  return p;
}

StoppingRule StoppingRule::at_horizon(const Lattice& lattice) { return constant(lattice, lattice.macro_periods()); }

StoppingRule StoppingRule::constant(const Lattice& lattice, int k) {
  if (k < 0 || k > lattice.macro_periods()) {
    throw PreconditionError("constant stopping time " + std::to_string(k) + " outside 0.." +
                            std::to_string(lattice.macro_periods()));
  }
  StoppingRule r;
  for (int l = 0; l <= lattice.macro_periods(); ++l) {
    r.marks_.emplace_back(lattice.macro_layer_size(l), static_cast<std::uint8_t>(l == k || l == lattice.macro_periods()));
  }
  return r;
}

StoppingRule StoppingRule::from_marks(const Lattice& lattice, std::vector<std::vector<std::uint8_t>> marks) {
  const int T = lattice.macro_periods();
  if (static_cast<int>(marks.size()) != T + 1) {
    throw PreconditionError("stopping rule has " + std::to_string(marks.size()) + " layers, lattice has " +
                            std::to_string(T + 1));
  }
  for (int k = 0; k <= T; ++k) {
    if (static_cast<int>(marks[k].size()) != lattice.macro_layer_size(k)) {
      throw PreconditionError("stopping rule layer " + std::to_string(k) + " has wrong node count");
    }
    for (auto& v : marks[k]) v = (k == T || v) ? 1 : 0;
  }
  StoppingRule r;
  r.marks_ = std::move(marks);
  return r;
}

void StoppingRule::set(int k, int index, bool stop) {
  if (k == periods()) return;
  marks_[k][index] = stop ? 1 : 0;
}

std::size_t StoppingRule::stop_count() const {
  std::size_t n = 0;
  for (const auto& layer : marks_)
    for (auto v : layer) n += v;
  return n;
}

StopView::StopView(const Lattice& lattice, const StoppingRule& rule) {
  const int T = lattice.macro_periods();
  layer_.resize(T + 1);
  index_.resize(T + 1);
  for (int k = 0; k <= T; ++k) {
    const int n = lattice.macro_layer_size(k);
    layer_[k].assign(n, -1);
    index_[k].assign(n, -1);
    for (int idx = 0; idx < n; ++idx) {
      if (k > 0) {
        const int parent = lattice.macro_parent(k, idx);
        if (layer_[k - 1][parent] >= 0) {
          layer_[k][idx] = layer_[k - 1][parent];
          index_[k][idx] = index_[k - 1][parent];
          continue;
        }
      }
      if (rule.stops(k, idx)) {
        layer_[k][idx] = k;
        index_[k][idx] = idx;
      }
    }
  }
}

StoppingRule canonical(const Lattice& lattice, const StoppingRule& rule) {
  StopView view(lattice, rule);
  auto marks = rule.marks();
  for (int k = 0; k < lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      marks[k][idx] = view.stop_layer(k, idx) == k ? 1 : 0;
    }
  }
  return StoppingRule::from_marks(lattice, std::move(marks));
}

int stopping_time_of_path(const Lattice& lattice, const StoppingRule& rule, std::span<const int> path) {
  int index = 0;
  for (int i = 0;; ++i) {
    if (lattice.is_macro_layer(i)) {
      const int k = lattice.period_of(i);
      if (rule.stops(k, index)) return k;
    }
    if (i >= static_cast<int>(path.size())) {
      throw PreconditionError("path of length " + std::to_string(path.size()) + " ends before the stop");
    }
    const int b = path[i];
    if (b < 0 || b >= lattice.branch_count()) throw PreconditionError("path branch index out of range");
    index = lattice.child_indices(i, index)[b];
  }
}

std::vector<int> path_times(const Lattice& lattice, const StoppingRule& rule) {
  StopView view(lattice, rule);
  const int T = lattice.macro_periods();
  std::vector<int> out(lattice.macro_layer_size(T));
  for (int idx = 0; idx < lattice.macro_layer_size(T); ++idx) out[idx] = view.stop_layer(T, idx);
  return out;
}

bool pathwise_leq(const Lattice& lattice, const StoppingRule& a, const StoppingRule& b) {
  const auto ta = path_times(lattice, a);
  const auto tb = path_times(lattice, b);
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (ta[i] > tb[i]) return false;
  return true;
}

StoppingRule rule_min(const Lattice& lattice, const StoppingRule& a, const StoppingRule& b) {
  auto marks = a.marks();
  for (std::size_t k = 0; k < marks.size(); ++k)
    for (std::size_t i = 0; i < marks[k].size(); ++i) marks[k][i] = marks[k][i] | b.marks()[k][i];
  return canonical(lattice, StoppingRule::from_marks(lattice, std::move(marks)));
}

AdaptedProcess stopped_process(const Lattice& lattice, const AdaptedProcess& phi, const StoppingRule& tau) {
  StopView view(lattice, tau);
  AdaptedProcess out = AdaptedProcess::macro(lattice);
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      out.at(k, idx) = view.stopped(k, idx) ? phi.at(view.stop_layer(k, idx), view.stop_index(k, idx)) : phi.at(k, idx);
    }
  }
  return out;
}

std::vector<std::vector<std::string>> stop_region_ids(const Lattice& lattice, const StoppingRule& rule) {
  StopView view(lattice, rule);
  std::vector<std::vector<std::string>> out(lattice.macro_periods() + 1);
  for (int k = 0; k <= lattice.macro_periods(); ++k) {
    for (int idx = 0; idx < lattice.macro_layer_size(k); ++idx) {
      if (view.stop_layer(k, idx) == k) out[k].push_back(lattice.node_id(lattice.macro_to_micro(k), idx));
    }
  }
  return out;
}

}  // namespace dynkin
