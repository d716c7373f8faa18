#pragma once

#include "hbnf/expr.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hbnf {

struct Interval {
  double lo = 0;
  double hi = 0;
};

enum class NodeKind { Discrete, Continuous };

/// Conditional probability table. Rows are indexed row-major over the parent
/// list (first parent varies slowest); each row holds one probability per
/// child state. Roots have an empty parent list and a single row.
struct TableCpd {
  std::vector<NodeId> parents;
  std::vector<std::vector<double>> rows;
};

/// Continuous CPD given entirely by a distribution head over parent variables.
struct ExpressionCpd {
  ParsedCpd parsed;
};

/// Continuous CPD switching between expressions by the joint state of the
/// discrete control parents. Cases are indexed row-major over the control
/// list (first control varies slowest); a missing case is kept as nullopt so
/// validation can report it rather than construction failing.
struct PartitionedCpd {
  std::vector<NodeId> control;
  std::vector<std::optional<ParsedCpd>> cases;
};

using Cpd = std::variant<TableCpd, ExpressionCpd, PartitionedCpd>;

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Continuous;
  std::vector<std::string> states;         // discrete nodes only
  std::optional<Interval> declared_range;  // continuous nodes only
  Cpd cpd;
};

/// Observed value: a state label for discrete nodes, a real for continuous.
using EvidenceValue = std::variant<std::string, double>;
using Evidence = std::map<NodeId, EvidenceValue>;

/// Directed network of discrete/continuous nodes. Edges are not stored:
/// a node's parents are exactly the ids its CPD references, so rewrites
/// that replace CPDs rewire the graph implicitly.
class BayesianNetwork {
 public:
  /// Throws std::invalid_argument on an empty or duplicate id.
  void add(Node n);

  bool has(const NodeId& id) const;
  const Node& at(const NodeId& id) const;  // throws std::out_of_range
  Node& at(const NodeId& id);
  std::size_t index_of(const NodeId& id) const;  // throws std::out_of_range
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// Parent ids referenced by the node's CPD, in CPD order: table parents as
  /// listed; expression free variables in first-occurrence order; control
  /// nodes then case free variables for partitioned CPDs.
  std::vector<NodeId> parents_of(const NodeId& id) const;
  std::vector<NodeId> children_of(const NodeId& id) const;

  Evidence evidence;

  static std::vector<NodeId> cpd_parents(const Cpd& cpd);

 private:
  std::vector<Node> nodes_;
  std::map<NodeId, std::size_t> index_;
};

/// Number of variables in the node's CPD: the node itself plus all parents.
int cpd_size(const BayesianNetwork& bn, const NodeId& id);
int continuous_parent_count(const BayesianNetwork& bn, const NodeId& id);
int max_cpd_size(const BayesianNetwork& bn);
int max_continuous_parents(const BayesianNetwork& bn);

/// Topological order over the CPD-derived edges, or std::nullopt if cyclic.
std::optional<std::vector<NodeId>> topo_order(const BayesianNetwork& bn);

/// Joint states of an ordered list of discrete nodes, row-major (first node
/// varies slowest). Labels of multi-node joints are joined with ','.
std::size_t joint_state_count(const BayesianNetwork& bn, const std::vector<NodeId>& control);
std::vector<std::string> joint_state_labels(const BayesianNetwork& bn,
                                            const std::vector<NodeId>& control);

struct Violation {
  NodeId node;
  std::string kind;
  std::string detail;
};

/// Reports every structural violation, sorted by (node id, kind).
/// Violations are data, not failures: this never throws on bad models.
std::vector<Violation> validate(const BayesianNetwork& bn);

std::string describe(const Violation& v);

}  // namespace hbnf
