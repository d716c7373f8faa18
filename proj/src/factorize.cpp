#include "hbnf/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hbnf {

namespace {

void push_unique(std::vector<NodeId>& out, const NodeId& id) {
  if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
}

NodeId fresh_name(const BayesianNetwork& bn, const NodeId& child, char role, int k) {
  NodeId base = child + "_" + role + std::to_string(k);
  NodeId name = base;
  int r = 0;
  while (bn.has(name)) name = base + "_r" + std::to_string(++r);
  return name;
}

std::size_t distinct_vars(const ParsedCpd& cpd) {
  std::vector<NodeId> vs;
  for (const auto& a : cpd.args) a.collect_vars(vs);
  return vs.size();
}

struct ExtractResult {
  Expr rewritten;
  Expr extracted;
  bool found = false;
};

/// Post-order search for the leftmost-innermost binary operation whose
/// subtree spans exactly two distinct variables while each operand spans at
/// most one; that subtree is replaced by a fresh variable.
ExtractResult extract_once(const Expr& e, const NodeId& new_var) {
  if (e.kind() != Expr::Kind::Op) return {e, Expr(), false};
  auto l = extract_once(e.lhs(), new_var);
  if (l.found) return {Expr::op(e.binary_op(), l.rewritten, e.rhs()), l.extracted, true};
  auto r = extract_once(e.rhs(), new_var);
  if (r.found) return {Expr::op(e.binary_op(), e.lhs(), r.rewritten), r.extracted, true};
  if (e.var_count() == 2 && e.lhs().var_count() <= 1 && e.rhs().var_count() <= 1)
    return {Expr::var(new_var), e, true};
  return {e, Expr(), false};
}

/// Repeatedly extracts two-variable operations out of the CPD's argument
/// trees into fresh deterministic nodes until at most `bound` distinct
/// variables remain or nothing further is extractable.
void reduce_to_bound(ParsedCpd& cpd, std::size_t bound, BayesianNetwork& out,
                     const NodeId& child, int& counter, std::vector<CreatedNode>& created) {
  while (distinct_vars(cpd) > bound) {
    bool extracted = false;
    for (auto& arg : cpd.args) {
      NodeId name = fresh_name(out, child, 'E', counter);
      auto res = extract_once(arg, name);
      if (!res.found) continue;
      arg = res.rewritten;
      Node n;
      n.id = name;
      n.kind = NodeKind::Continuous;
      n.cpd = ExpressionCpd{make_cpd(DistKind::Arithmetic, {res.extracted})};
      out.add(std::move(n));
      created.push_back({name, 'E', child});
      ++counter;
      extracted = true;
      break;
    }
    if (!extracted) break;  // operands are all single variables; nothing to split
  }
}

void fill_metrics_before(RewriteReport& rep, const BayesianNetwork& bn) {
  rep.max_cpd_size_before = max_cpd_size(bn);
  rep.max_continuous_parents_before = max_continuous_parents(bn);
}

void fill_metrics_after(RewriteReport& rep, const BayesianNetwork& bn) {
  rep.max_cpd_size_after = max_cpd_size(bn);
  rep.max_continuous_parents_after = max_continuous_parents(bn);
}

void collect_partition_stats(RewriteReport& rep, const BayesianNetwork& bn) {
  for (const auto& node : bn.nodes()) {
    const auto* p = std::get_if<PartitionedCpd>(&node.cpd);
    if (!p) continue;
    std::vector<NodeId> multi;
    for (const auto& c : p->cases) {
      if (!c || c->free_vars.size() < 2) continue;
      for (const auto& v : c->free_vars) push_unique(multi, v);
    }
    rep.partitions.push_back({node.id, static_cast<int>(p->cases.size()),
                              static_cast<int>(multi.size())});
  }
}

}  // namespace

std::pair<BayesianNetwork, RewriteReport> binary_factorize(const BayesianNetwork& bn) {
  BayesianNetwork out = bn;
  RewriteReport rep;
  fill_metrics_before(rep, bn);
  collect_partition_stats(rep, bn);

  const std::size_t original_count = bn.size();
  for (std::size_t i = 0; i < original_count; ++i) {
    const NodeId id = bn.nodes()[i].id;
    const int size_before = cpd_size(bn, id);
    int counter = 0;
    std::size_t created_before = rep.created.size();
    Cpd cpd = out.at(id).cpd;  // copy: adding nodes may reallocate storage
    if (auto* e = std::get_if<ExpressionCpd>(&cpd)) {
      reduce_to_bound(e->parsed, 2, out, id, counter, rep.created);
      e->parsed = make_cpd(e->parsed.head, std::move(e->parsed.args));
    } else if (auto* p = std::get_if<PartitionedCpd>(&cpd)) {
      for (auto& c : p->cases) {
        if (!c) continue;
        reduce_to_bound(*c, 1, out, id, counter, rep.created);
        *c = make_cpd(c->head, std::move(c->args));
      }
    }
    if (rep.created.size() > created_before) {
      out.at(id).cpd = std::move(cpd);
      rep.rewritten.push_back({id, size_before, cpd_size(out, id)});
    }
  }

  fill_metrics_after(rep, out);
  return {std::move(out), std::move(rep)};
}

std::pair<BayesianNetwork, RewriteReport> stacking_factorize(const BayesianNetwork& bn,
                                                             SfMode mode) {
  BayesianNetwork out = bn;
  RewriteReport rep;
  fill_metrics_before(rep, bn);

  const std::size_t original_count = bn.size();
  for (std::size_t i = 0; i < original_count; ++i) {
    const NodeId id = bn.nodes()[i].id;
    Cpd cpd = out.at(id).cpd;
    const auto* part = std::get_if<PartitionedCpd>(&cpd);
    if (!part) continue;

    const std::size_t n = joint_state_count(out, part->control);
    std::vector<NodeId> continuous_parents;
    for (const auto& c : part->cases)
      if (c)
        for (const auto& v : c->free_vars) push_unique(continuous_parents, v);
    // Nothing to do once the child already meets the two-parent bound, which
    // also makes the rewrite a fixpoint on its own output.
    if (n <= 2 || continuous_parents.size() <= 2) continue;

    if (part->cases.size() != n)
      throw FactorizeError(id, "incomplete partition on node " + id);
    auto labels = joint_state_labels(out, part->control);
    for (std::size_t j = 0; j < n; ++j) {
      if (!part->cases[j])
        throw FactorizeError(id, "incomplete partition on node " + id + ": missing case " + labels[j]);
      if (part->cases[j]->free_vars.size() >= 2)
        throw FactorizeError(
            id, "unfactorized case on node " + id + ": state " + labels[j] + " references " +
                    std::to_string(part->cases[j]->free_vars.size()) +
                    " continuous parents; apply binary factorization first");
    }

    const int size_before = cpd_size(bn, id);

    std::vector<NodeId> indicator_names;
    if (mode == SfMode::Explicit) {
      for (std::size_t k = 1; k + 1 <= n; ++k) {
        NodeId name = fresh_name(out, id, 'B', static_cast<int>(k));
        Node b;
        b.id = name;
        b.kind = NodeKind::Discrete;
        b.states = {"True", "False"};
        TableCpd table;
        table.parents = part->control;
        table.rows.resize(n);
        for (std::size_t j = 0; j < n; ++j)
          table.rows[j] = (j + 1 <= k) ? std::vector<double>{1.0, 0.0}
                                       : std::vector<double>{0.0, 1.0};
        b.cpd = std::move(table);
        out.add(std::move(b));
        rep.created.push_back({name, 'B', id});
        indicator_names.push_back(name);
      }
    }

    std::vector<NodeId> stack_names;
    for (std::size_t k = 1; k + 2 <= n; ++k) {
      NodeId name = fresh_name(out, id, 'F', static_cast<int>(k));
      ParsedCpd low = (k == 1)
                          ? *part->cases[0]
                          : make_cpd(DistKind::Arithmetic, {Expr::var(stack_names[k - 2])});
      ParsedCpd high = *part->cases[k];  // component k+1, zero-based index k
      PartitionedCpd chain;
      if (mode == SfMode::Compact) {
        chain.control = part->control;
        chain.cases.resize(n);
        for (std::size_t j = 0; j < n; ++j) chain.cases[j] = (j + 1 <= k) ? low : high;
      } else {
        chain.control = {indicator_names[k - 1]};
        chain.cases = {low, high};
      }
      Node f;
      f.id = name;
      f.kind = NodeKind::Continuous;
      f.cpd = std::move(chain);
      out.add(std::move(f));
      rep.created.push_back({name, 'F', id});
      stack_names.push_back(name);
    }

    ParsedCpd reuse_top = make_cpd(DistKind::Arithmetic, {Expr::var(stack_names.back())});
    ParsedCpd last = *part->cases[n - 1];
    PartitionedCpd rewired;
    if (mode == SfMode::Compact) {
      rewired.control = part->control;
      rewired.cases.resize(n);
      for (std::size_t j = 0; j < n; ++j) rewired.cases[j] = (j + 1 < n) ? reuse_top : last;
    } else {
      rewired.control = {indicator_names[n - 2]};
      rewired.cases = {reuse_top, last};
    }
    out.at(id).cpd = std::move(rewired);
    rep.rewritten.push_back({id, size_before, cpd_size(out, id)});
  }

  fill_metrics_after(rep, out);
  return {std::move(out), std::move(rep)};
}

RewriteReport merge_reports(const RewriteReport& first, const RewriteReport& second) {
  RewriteReport rep;
  rep.created = first.created;
  rep.created.insert(rep.created.end(), second.created.begin(), second.created.end());
  rep.partitions = first.partitions;
  rep.rewritten = first.rewritten;
  for (const auto& change : second.rewritten) {
    auto it = std::find_if(rep.rewritten.begin(), rep.rewritten.end(),
                           [&](const CpdChange& c) { return c.node == change.node; });
    if (it == rep.rewritten.end())
      rep.rewritten.push_back(change);
    else
      it->size_after = change.size_after;
  }
  rep.max_cpd_size_before = first.max_cpd_size_before;
  rep.max_continuous_parents_before = first.max_continuous_parents_before;
  rep.max_cpd_size_after = second.max_cpd_size_after;
  rep.max_continuous_parents_after = second.max_continuous_parents_after;
  return rep;
}

std::pair<BayesianNetwork, RewriteReport> sf_bf(const BayesianNetwork& bn) {
  auto [split, split_report] = binary_factorize(bn);
  auto [stacked, stack_report] = stacking_factorize(split, SfMode::Compact);
  return {std::move(stacked), merge_reports(split_report, stack_report)};
}

StackPlan alpha_weights(const std::vector<double>& weights) {
  if (weights.empty()) throw std::invalid_argument("mixture weights must be nonempty");
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("mixture weights must sum to 1");
  StackPlan plan;
  double prefix = weights[0];
  for (std::size_t k = 1; k < weights.size(); ++k) {
    double next = prefix + weights[k];
    plan.alphas.push_back(next == 0.0 ? 0.0 : prefix / next);
    prefix = next;
  }
  return plan;
}

double stack_mixture(const MixtureSpec& spec, double x) {
  if (spec.weights.size() != spec.components.size())
    throw std::invalid_argument("weight and component counts differ");
  StackPlan plan = alpha_weights(spec.weights);
  double g = spec.components[0](x);
  for (std::size_t k = 0; k < plan.alphas.size(); ++k) {
    double a = plan.alphas[k];
    g = a * g + (1.0 - a) * spec.components[k + 1](x);
  }
  return g;
}

double direct_mixture(const MixtureSpec& spec, double x) {
  if (spec.weights.size() != spec.components.size())
    throw std::invalid_argument("weight and component counts differ");
  double total = 0;
  for (std::size_t k = 0; k < spec.weights.size(); ++k)
    total += spec.weights[k] * spec.components[k](x);
  return total;
}

}  // namespace hbnf
