#include "hbnf/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace hbnf {

void BayesianNetwork::add(Node n) {
  if (n.id.empty()) throw std::invalid_argument("node id must be nonempty");
  if (index_.count(n.id))
    throw std::invalid_argument("duplicate node id: " + n.id);
  index_[n.id] = nodes_.size();
  nodes_.push_back(std::move(n));
}

bool BayesianNetwork::has(const NodeId& id) const { return index_.count(id) != 0; }

const Node& BayesianNetwork::at(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown node id: " + id);
  return nodes_[it->second];
}

Node& BayesianNetwork::at(const NodeId& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown node id: " + id);
  return nodes_[it->second];
}

std::size_t BayesianNetwork::index_of(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown node id: " + id);
  return it->second;
}

namespace {
void push_unique(std::vector<NodeId>& out, const NodeId& id) {
  if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
}
}  // namespace

std::vector<NodeId> BayesianNetwork::cpd_parents(const Cpd& cpd) {
  std::vector<NodeId> out;
  if (const auto* t = std::get_if<TableCpd>(&cpd)) {
    out = t->parents;
  } else if (const auto* e = std::get_if<ExpressionCpd>(&cpd)) {
    out = e->parsed.free_vars;
  } else if (const auto* p = std::get_if<PartitionedCpd>(&cpd)) {
    out = p->control;
    for (const auto& c : p->cases) {
      if (!c) continue;
      for (const auto& v : c->free_vars) push_unique(out, v);
    }
  }
  return out;
}

std::vector<NodeId> BayesianNetwork::parents_of(const NodeId& id) const {
  return cpd_parents(at(id).cpd);
}

std::vector<NodeId> BayesianNetwork::children_of(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    auto ps = cpd_parents(n.cpd);
    if (std::find(ps.begin(), ps.end(), id) != ps.end()) out.push_back(n.id);
  }
  return out;
}

int cpd_size(const BayesianNetwork& bn, const NodeId& id) {
  return 1 + static_cast<int>(bn.parents_of(id).size());
}

int continuous_parent_count(const BayesianNetwork& bn, const NodeId& id) {
  int count = 0;
  for (const auto& p : bn.parents_of(id))
    if (bn.has(p) && bn.at(p).kind == NodeKind::Continuous) ++count;
  return count;
}

int max_cpd_size(const BayesianNetwork& bn) {
  int best = 0;
  for (const auto& n : bn.nodes()) best = std::max(best, cpd_size(bn, n.id));
  return best;
}

int max_continuous_parents(const BayesianNetwork& bn) {
  int best = 0;
  for (const auto& n : bn.nodes())
    best = std::max(best, continuous_parent_count(bn, n.id));
  return best;
}

std::optional<std::vector<NodeId>> topo_order(const BayesianNetwork& bn) {
  const auto& nodes = bn.nodes();
  std::map<NodeId, int> indegree;
  std::map<NodeId, std::vector<NodeId>> out_edges;
  for (const auto& n : nodes) indegree[n.id] = 0;
  for (const auto& n : nodes) {
    for (const auto& p : bn.parents_of(n.id)) {
      if (!bn.has(p)) continue;  // unknown references are validate's concern
      out_edges[p].push_back(n.id);
      ++indegree[n.id];
    }
  }
  // std::map iteration keeps the ready set ordered, so the result is stable.
  std::set<NodeId> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.insert(id);
  std::vector<NodeId> order;
  while (!ready.empty()) {
    NodeId id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& c : out_edges[id])
      if (--indegree[c] == 0) ready.insert(c);
  }
  if (order.size() != nodes.size()) return std::nullopt;
  return order;
}

std::size_t joint_state_count(const BayesianNetwork& bn, const std::vector<NodeId>& control) {
  std::size_t n = 1;
  for (const auto& id : control) n *= bn.at(id).states.size();
  return n;
}

std::vector<std::string> joint_state_labels(const BayesianNetwork& bn,
                                            const std::vector<NodeId>& control) {
  std::vector<std::string> labels{""};
  for (const auto& id : control) {
    std::vector<std::string> next;
    next.reserve(labels.size() * bn.at(id).states.size());
    for (const auto& prefix : labels)
      for (const auto& s : bn.at(id).states)
        next.push_back(prefix.empty() ? s : prefix + "," + s);
    labels = std::move(next);
  }
  return labels;
}

namespace {

constexpr double kRowSumTol = 1e-12;

bool const_folds(const Expr& e, double& out) {
  if (!e.vars().empty()) return false;
  out = e.eval({});
  return true;
}

void flag_constant_zero_operands(const Expr& e, const NodeId& node,
                                 std::vector<Violation>& out) {
  if (e.kind() != Expr::Kind::Op) return;
  flag_constant_zero_operands(e.lhs(), node, out);
  flag_constant_zero_operands(e.rhs(), node, out);
  double v = 0;
  if (e.binary_op() == BinaryOp::Div && const_folds(e.rhs(), v) && v == 0.0)
    out.push_back({node, "constant zero divisor", "division by an expression that folds to 0"});
  if (e.binary_op() == BinaryOp::Pow && const_folds(e.rhs(), v) && v == 0.0)
    out.push_back({node, "constant zero exponent", "power with an exponent that folds to 0"});
}

void check_parsed_cpd(const BayesianNetwork& bn, const Node& node, const ParsedCpd& cpd,
                      const std::string& where, std::vector<Violation>& out) {
  for (const auto& v : cpd.free_vars) {
    if (!bn.has(v)) {
      out.push_back({node.id, "unknown parent", where + " references unknown node " + v});
    } else if (bn.at(v).kind != NodeKind::Continuous) {
      out.push_back({node.id, "discrete operand",
                     where + " references discrete node " + v + " inside an expression"});
    }
  }
  if (cpd.head == DistKind::Normal) {
    double var = 0;
    if (!cpd.args[1].vars().empty()) {
      out.push_back({node.id, "variance", where + " variance must be a constant expression"});
    } else if (const_folds(cpd.args[1], var) && !(var > 0)) {
      out.push_back({node.id, "variance",
                     where + " variance folds to " + std::to_string(var) + ", must be > 0"});
    }
  }
  if (cpd.head == DistKind::Uniform) {
    double lo = 0, hi = 0;
    if (const_folds(cpd.args[0], lo) && const_folds(cpd.args[1], hi) && !(lo < hi))
      out.push_back({node.id, "uniform bounds", where + " requires lo < hi"});
  }
  for (const auto& a : cpd.args) flag_constant_zero_operands(a, node.id, out);
}

void check_table(const BayesianNetwork& bn, const Node& node, const TableCpd& t,
                 std::vector<Violation>& out) {
  bool parents_ok = true;
  std::size_t expected_rows = 1;
  for (const auto& p : t.parents) {
    if (!bn.has(p)) {
      out.push_back({node.id, "unknown parent", "table parent " + p + " does not exist"});
      parents_ok = false;
    } else if (bn.at(p).kind != NodeKind::Discrete) {
      out.push_back({node.id, "table parent", "table parent " + p + " is not discrete"});
      parents_ok = false;
    } else {
      expected_rows *= bn.at(p).states.size();
    }
  }
  if (parents_ok && t.rows.size() != expected_rows) {
    out.push_back({node.id, "table shape",
                   "expected " + std::to_string(expected_rows) + " rows, got " +
                       std::to_string(t.rows.size())});
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != node.states.size()) {
      out.push_back({node.id, "table shape",
                     "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                         " entries, expected " + std::to_string(node.states.size())});
      continue;
    }
    double sum = 0;
    bool negative = false;
    for (double x : row) {
      sum += x;
      if (x < 0) negative = true;
    }
    if (negative)
      out.push_back({node.id, "negative entry", "row " + std::to_string(r) + " has a negative probability"});
    if (std::abs(sum - 1.0) > kRowSumTol)
      out.push_back({node.id, "row sum",
                     "row " + std::to_string(r) + " sums to " + std::to_string(sum)});
  }
}

}  // namespace

std::vector<Violation> validate(const BayesianNetwork& bn) {
  std::vector<Violation> out;

  for (const auto& node : bn.nodes()) {
    if (node.kind == NodeKind::Discrete) {
      if (node.states.empty())
        out.push_back({node.id, "empty states", "discrete node has no states"});
      std::set<std::string> seen;
      for (const auto& s : node.states)
        if (!seen.insert(s).second)
          out.push_back({node.id, "duplicate state", "state label " + s + " repeats"});
      if (!std::holds_alternative<TableCpd>(node.cpd)) {
        out.push_back({node.id, "wrong cpd kind", "discrete node needs a table CPD"});
      } else {
        check_table(bn, node, std::get<TableCpd>(node.cpd), out);
      }
    } else {
      if (node.declared_range && !(node.declared_range->lo < node.declared_range->hi))
        out.push_back({node.id, "bad range", "declared range requires lo < hi"});
      if (const auto* e = std::get_if<ExpressionCpd>(&node.cpd)) {
        check_parsed_cpd(bn, node, e->parsed, "expression", out);
      } else if (const auto* p = std::get_if<PartitionedCpd>(&node.cpd)) {
        if (p->control.empty())
          out.push_back({node.id, "empty control", "partitioned CPD has no control nodes"});
        bool control_ok = !p->control.empty();
        for (const auto& c : p->control) {
          if (!bn.has(c)) {
            out.push_back({node.id, "unknown parent", "control node " + c + " does not exist"});
            control_ok = false;
          } else if (bn.at(c).kind != NodeKind::Discrete) {
            out.push_back({node.id, "control not discrete", "control node " + c + " is continuous"});
            control_ok = false;
          }
        }
        if (control_ok) {
          std::size_t want = joint_state_count(bn, p->control);
          auto labels = joint_state_labels(bn, p->control);
          if (p->cases.size() != want) {
            out.push_back({node.id, "incomplete partition",
                           "expected " + std::to_string(want) + " cases, got " +
                               std::to_string(p->cases.size())});
          } else {
            for (std::size_t j = 0; j < p->cases.size(); ++j)
              if (!p->cases[j])
                out.push_back({node.id, "incomplete partition", "missing case for state " + labels[j]});
          }
        }
        for (std::size_t j = 0; j < p->cases.size(); ++j)
          if (p->cases[j])
            check_parsed_cpd(bn, node, *p->cases[j], "case " + std::to_string(j), out);
      } else {
        out.push_back({node.id, "wrong cpd kind",
                       "continuous node needs an expression or partitioned CPD"});
      }
    }
  }

  // Evidence refers to existing nodes with type-appropriate values.
  for (const auto& [id, value] : bn.evidence) {
    if (!bn.has(id)) {
      out.push_back({id, "unknown evidence", "evidence on unknown node"});
      continue;
    }
    const Node& node = bn.at(id);
    if (node.kind == NodeKind::Discrete) {
      const auto* s = std::get_if<std::string>(&value);
      if (!s) {
        out.push_back({id, "bad evidence type", "discrete node needs a state label"});
      } else if (std::find(node.states.begin(), node.states.end(), *s) == node.states.end()) {
        out.push_back({id, "bad evidence state", "no state named " + *s});
      }
    } else if (!std::holds_alternative<double>(value)) {
      out.push_back({id, "bad evidence type", "continuous node needs a numeric value"});
    }
  }

  if (!topo_order(bn)) {
    // Find the smallest id on a cycle: peel away nodes of zero remaining
    // indegree; what remains is the cyclic core.
    std::map<NodeId, int> indegree;
    std::map<NodeId, std::vector<NodeId>> out_edges;
    for (const auto& n : bn.nodes()) indegree[n.id] = 0;
    for (const auto& n : bn.nodes())
      for (const auto& p : bn.parents_of(n.id)) {
        if (!bn.has(p)) continue;
        out_edges[p].push_back(n.id);
        ++indegree[n.id];
      }
    std::deque<NodeId> queue;
    for (const auto& [id, d] : indegree)
      if (d == 0) queue.push_back(id);
    while (!queue.empty()) {
      NodeId id = queue.front();
      queue.pop_front();
      indegree[id] = -1;
      for (const auto& c : out_edges[id])
        if (--indegree[c] == 0) queue.push_back(c);
    }
    NodeId cyclic;
    for (const auto& [id, d] : indegree)
      if (d >= 1 && (cyclic.empty() || id < cyclic)) cyclic = id;
    out.push_back({cyclic, "cycle", "node participates in a directed cycle"});
  }

  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    if (a.node != b.node) return a.node < b.node;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.detail < b.detail;
  });
  return out;
}

std::string describe(const Violation& v) {
  return v.node + ": " + v.kind + " (" + v.detail + ")";
}

}  // namespace hbnf
