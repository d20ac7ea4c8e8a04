#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace radopf {

/// Dense node index after interning. The root is always 0, the remaining
/// nodes are numbered 1..n in breadth-first order from the root.
using NodeId = int;

/// One directed branch of the spanning tree, written child -> parent.
/// Power flow variables on branch (i,j) are oriented from the child i
/// towards its parent j. Impedance z = r + ix, all per-unit.
struct Branch {
  NodeId child = -1;
  NodeId parent = -1;
  double r = 0.0;      ///< series resistance, > 0
  double x = 0.0;      ///< series reactance, > 0
  double l_max = 0.0;  ///< upper bound on squared current magnitude, > 0

  double z_abs2() const { return r * r + x * x; }
};

/// Per-node operating box. Voltages are squared magnitudes, injections are
/// net (generation minus load), so a pure load has negative p bounds.
struct NodeLimits {
  double v_min = 0.0;
  double v_max = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
};

/// Thrown when structurally well-formed input violates a network invariant
/// (non-positive impedance, cycles, bound ordering, ...). element() names
/// the offending node or branch using the input's original labels.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& element, const std::string& what)
      : std::runtime_error(what + " (element: " + element + ")"),
        element_(element) {}
  const std::string& element() const { return element_; }

 private:
  std::string element_;
};

/// Thrown on malformed input bytes (bad JSON, missing CSV column, ...).
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unvalidated network description in terms of the input's own labels.
/// The root node is identified implicitly: it is the unique branch endpoint
/// that carries no NodeLimits entry.
struct NetworkData {
  struct Node {
    std::string label;
    NodeLimits limits;
  };
  struct BranchSpec {
    std::string child;
    std::string parent;
    double r = 0.0;
    double x = 0.0;
    double l_max = 0.0;
  };
  double v0 = 0.0;  ///< squared reference voltage at the root
  std::vector<Node> nodes;
  std::vector<BranchSpec> branches;
};

/// A validated rooted radial distribution network.
///
/// Immutable after construction; safe to share across threads. Node ids are
/// interned to 0..n with 0 = root; branches are indexed by their child node
/// (branch e has child e+1), which puts them in breadth-first order, so a
/// branch's parent always has a smaller id than its child. Reverse index
/// order is therefore a valid bottom-up (leaves first) traversal.
class Network {
 public:
  /// Validates `data` and interns labels. Throws ValidationError with the
  /// offending element on any invariant violation.
  static Network from_data(const NetworkData& data);

  double v0() const { return v0_; }

  /// Number of non-root nodes n = |N+|. Total node count is n + 1.
  int node_count() const { return static_cast<int>(branches_.size()); }
  int branch_count() const { return static_cast<int>(branches_.size()); }

  /// Original input label of a node (root included).
  const std::string& label(NodeId i) const;

  /// Interned id of an original label; throws std::out_of_range if unknown.
  NodeId node_id(const std::string& label) const;

  /// Operating box of non-root node i (1 <= i <= n). The root carries no
  /// limits: its injection is free and its voltage is fixed to v0.
  const NodeLimits& limits(NodeId i) const;

  /// The unique parent-side branch of non-root node i.
  const Branch& branch_of(NodeId i) const;

  /// All branches, indexed by child-1.
  const std::vector<Branch>& branches() const { return branches_; }

  NodeId parent(NodeId i) const { return branch_of(i).parent; }

  /// Child nodes of i; empty for leaves. The root (i = 0) is allowed.
  const std::vector<NodeId>& children(NodeId i) const;

  /// The path Gamma_i from node i up to the root, child-first. The first
  /// branch has child i, the last has parent 0, and consecutive entries
  /// chain child <- parent.
  std::vector<Branch> path_to_root(NodeId i) const;

  /// Number of branches between node i and the root; depth(root) = 0.
  int depth(NodeId i) const;

  /// Branch indices sorted by ascending depth (leaves last). Iterating in
  /// reverse visits every branch after all branches below it, which is the
  /// traversal order the Slater construction needs.
  const std::vector<int>& depth_order() const { return depth_order_; }

  /// Round-trips the network into its canonical JSON form, preserving the
  /// original labels.
  std::string to_json_string(int indent = 2) const;

  /// Convenience: rebuild a copy with different limits (used by the
  /// experiment drivers; revalidates).
  Network with_limits(const std::vector<NodeLimits>& limits_by_node) const;
  Network with_branches(const std::vector<Branch>& branches_by_child) const;

 private:
  Network() = default;
  void check_node(NodeId i, bool allow_root) const;

  double v0_ = 0.0;
  std::vector<std::string> labels_;       // size n+1, [0] = root label
  std::vector<NodeLimits> limits_;        // size n, node i at [i-1]
  std::vector<Branch> branches_;          // size n, child i at [i-1]
  std::vector<std::vector<NodeId>> children_;  // size n+1
  std::vector<int> depths_;               // size n+1
  std::vector<int> depth_order_;          // branch indices, ascending depth
};

enum class NetworkFormat { json, csv_pair };

/// Parses and validates a network. For csv_pair the stream holds the
/// contents of nodes.csv followed by branches.csv; the branches header line
/// (starting with the "child" column) marks the boundary, so the two files
/// can simply be concatenated.
Network parse_network(std::istream& source, NetworkFormat format);

/// Parses nodes.csv and branches.csv from separate streams.
Network parse_network_csv_pair(std::istream& nodes_csv,
                               std::istream& branches_csv);

/// Loads from a path: "*.json" is parsed as JSON, a directory is expected
/// to contain nodes.csv and branches.csv.
Network load_network_file(const std::string& path);

}  // namespace radopf
