#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dynkin {

struct JumpMark {
  std::string id;
  double intensity = 0.0;    // lambda_j
  double nu_weight = 1.0;    // nu_j, weight of mark j in <., .>_nu
  double jump_factor = 1.0;  // multiplies the state walk when mark j fires
};

struct LatticeSpec {
  int macro_periods = 1;     // T
  int micro_per_period = 1;  // m
  std::vector<JumpMark> jump_marks;
  double state0 = 1.0;
  double up = 1.0;
  double down = 1.0;

  double delta() const { return 1.0 / static_cast<double>(micro_per_period); }

  // Throws ValidationError naming the first violated invariant.
  void validate() const;
};

// One micro-step outcome. Every non-terminal node shares the same branch law.
struct Branch {
  double prob = 0.0;
  double dW = 0.0;  // +sqrt(delta) or -sqrt(delta)
  int jump = -1;    // index into LatticeSpec::jump_marks, -1 for no jump
};

struct NodeRef {
  int layer = 0;  // micro layer i
  int index = 0;
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct Node {
  int anchor = -1;  // macro node (index in micro layer m*k) opening this node's period; -1 at the root
  int up_count = 0;
  int local_up = 0;  // up moves since the anchor
  std::vector<int> jumps;        // total count per mark
  std::vector<int> local_jumps;  // counts since the anchor
  double state = 0.0;
};

// Finite event tree realising the filtration. Micro layers 0..m*T; macro
// layer k lives at micro layer m*k. Nodes recombine within a macro period
// under a common macro ancestor, so macro nodes are history-unique and any
// stopping time of the macro filtration is a marking of macro nodes.
class Lattice {
 public:
  explicit Lattice(LatticeSpec spec);

  const LatticeSpec& spec() const { return spec_; }
  int macro_periods() const { return spec_.macro_periods; }
  int micro_per_period() const { return spec_.micro_per_period; }
  double delta() const { return spec_.delta(); }
  int micro_layers() const { return static_cast<int>(layers_.size()); }
  int last_layer() const { return micro_layers() - 1; }
  int macro_to_micro(int k) const { return k * spec_.micro_per_period; }
  bool is_macro_layer(int i) const { return i % spec_.micro_per_period == 0; }
  // Macro period k such that micro layer i lies in [m*k, m*(k+1)).
  int period_of(int i) const { return i / spec_.micro_per_period; }

  int layer_size(int i) const { return static_cast<int>(layers_[i].size()); }
  int macro_layer_size(int k) const { return layer_size(macro_to_micro(k)); }
  std::size_t node_count() const;
  std::size_t nonterminal_macro_nodes() const;

  std::span<const Branch> branches() const { return branches_; }
  int branch_count() const { return static_cast<int>(branches_.size()); }

  const Node& node(int layer, int index) const { return layers_[layer][index]; }
  const Node& node(NodeRef r) const { return node(r.layer, r.index); }

  // Child indices (in layer + 1), aligned with branches(). Throws DomainError
  // for terminal nodes.
  std::span<const int> child_indices(int layer, int index) const;

  // Macro parent of macro node (k, index), as an index in macro layer k - 1.
  int macro_parent(int k, int index) const { return node(macro_to_micro(k), index).anchor; }

  // Sum over branches p_b * v_b; v has one entry per branch.
  double conditional_expectation(std::span<const double> child_values) const;

  std::string node_id(int layer, int index) const;
  std::string node_id(NodeRef r) const { return node_id(r.layer, r.index); }
  std::optional<NodeRef> find(std::string_view id) const;

 private:
  void append_segment(std::string& out, const Node& n, int steps) const;

  LatticeSpec spec_;
  std::vector<Branch> branches_;
  std::vector<std::vector<Node>> layers_;
  std::vector<std::vector<int>> children_;  // per layer, flattened [index * branch_count + b]
};

struct Child {
  Branch branch;
  NodeRef node;
};

std::vector<Child> children(const Lattice& lattice, NodeRef node);

// Sum p_b v_b for an explicit branch list; throws PreconditionError on arity mismatch.
double conditional_expectation(std::span<const Branch> branches, std::span<const double> values);
double conditional_expectation(const Lattice& lattice, NodeRef node, std::span<const double> values);

enum class Grid { Macro, Micro };

// Real value per node on a contiguous range of layers [first_layer, end).
// Layers below first_layer are empty.
struct AdaptedProcess {
  Grid grid = Grid::Macro;
  int first_layer = 0;
  std::vector<std::vector<double>> values;

  static AdaptedProcess macro(const Lattice& lattice, double fill = 0.0);
  static AdaptedProcess micro(const Lattice& lattice, double fill = 0.0);

  int layers() const { return static_cast<int>(values.size()); }
  double at(int layer, int index) const { return values[layer][index]; }
  double& at(int layer, int index) { return values[layer][index]; }
};

// Macro-layer view of a micro-grid process (copies layers m*k).
AdaptedProcess macro_layers_of(const Lattice& lattice, const AdaptedProcess& micro);

// {stop, continue} per macro node. Layer T is always stop.
class StoppingRule {
 public:
  StoppingRule() = default;

  static StoppingRule at_horizon(const Lattice& lattice);
  static StoppingRule constant(const Lattice& lattice, int k);
  // Throws PreconditionError if the shape does not match the macro layers.
  static StoppingRule from_marks(const Lattice& lattice, std::vector<std::vector<std::uint8_t>> marks);

  int periods() const { return static_cast<int>(marks_.size()) - 1; }
  bool stops(int k, int index) const { return marks_[k][index] != 0; }
  void set(int k, int index, bool stop);
  const std::vector<std::vector<std::uint8_t>>& marks() const { return marks_; }
  std::size_t stop_count() const;

  friend bool operator==(const StoppingRule&, const StoppingRule&) = default;

 private:
  std::vector<std::vector<std::uint8_t>> marks_;
};

// First stop of a rule along each macro node's ancestry (the node included).
class StopView {
 public:
  StopView(const Lattice& lattice, const StoppingRule& rule);

  bool stopped(int k, int index) const { return layer_[k][index] >= 0; }
  // Layer of the first stop at or before k, or -1.
  int stop_layer(int k, int index) const { return layer_[k][index]; }
  // Index of that stop node in its macro layer.
  int stop_index(int k, int index) const { return index_[k][index]; }
  // tau >= k + 1 at macro node (k, index), i.e. not yet stopped.
  bool continuing(int k, int index) const { return layer_[k][index] < 0; }

 private:
  std::vector<std::vector<int>> layer_;
  std::vector<std::vector<int>> index_;
};

// Clears marks strictly after an earlier ancestor stop (layer T stays stop),
// so equal canonical rules are equal stopping times.
StoppingRule canonical(const Lattice& lattice, const StoppingRule& rule);

// A path is one branch index per micro step (length m*T, or a prefix long
// enough to reach the stop).
int stopping_time_of_path(const Lattice& lattice, const StoppingRule& rule, std::span<const int> path);

// Stopping time per terminal macro node (each is one macro path).
std::vector<int> path_times(const Lattice& lattice, const StoppingRule& rule);

// True iff a <= b on every path.
bool pathwise_leq(const Lattice& lattice, const StoppingRule& a, const StoppingRule& b);

// Pathwise minimum (union of canonical stop sets).
StoppingRule rule_min(const Lattice& lattice, const StoppingRule& a, const StoppingRule& b);

// Phi stopped at tau: phi(k ^ tau) per macro node.
AdaptedProcess stopped_process(const Lattice& lattice, const AdaptedProcess& phi, const StoppingRule& tau);

// Stop-node ids per macro layer.
std::vector<std::vector<std::string>> stop_region_ids(const Lattice& lattice, const StoppingRule& rule);

}  // namespace dynkin
