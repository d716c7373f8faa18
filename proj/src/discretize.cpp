#include "hbnf/discretize.hpp"

#include "hbnf/inference.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace hbnf {

namespace {

constexpr double kRangeClamp = 1e9;

std::string fmt_double(double v) {
  std::array<char, 32> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

Interval make_interval(double lo, double hi) {
  Interval r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

Interval widest() { return make_interval(-kRangeClamp, kRangeClamp); }

Interval from_candidates(const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi)) return widest();
  return make_interval(lo, hi);
}

Interval ia_eval(const Expr& e, const std::map<NodeId, Interval>& env) {
  switch (e.kind()) {
    case Expr::Kind::Var: {
      auto it = env.find(e.var_id());
      return it == env.end() ? make_interval(0, 0) : it->second;
    }
    case Expr::Kind::Const:
      return make_interval(e.const_value(), e.const_value());
    case Expr::Kind::Op: {
      Interval a = ia_eval(e.lhs(), env);
      Interval b = ia_eval(e.rhs(), env);
      switch (e.binary_op()) {
        case BinaryOp::Add:
          return make_interval(a.lo + b.lo, a.hi + b.hi);
        case BinaryOp::Sub:
          return make_interval(a.lo - b.hi, a.hi - b.lo);
        case BinaryOp::Mul:
          return from_candidates({a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi});
        case BinaryOp::Div:
          if (b.lo <= 0 && 0 <= b.hi) return widest();
          return from_candidates({a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi});
        case BinaryOp::Pow: {
          std::vector<double> c = {std::pow(a.lo, b.lo), std::pow(a.lo, b.hi),
                                   std::pow(a.hi, b.lo), std::pow(a.hi, b.hi)};
          if (a.lo <= 0 && 0 <= a.hi) {
            c.push_back(std::pow(0.0, b.lo));
            c.push_back(std::pow(0.0, b.hi));
          }
          return from_candidates(c);
        }
      }
      return widest();
    }
  }
  return widest();
}

Interval parsed_range(const ParsedCpd& cpd, const std::map<NodeId, Interval>& env) {
  switch (cpd.head) {
    case DistKind::Arithmetic:
      if (cpd.args.empty()) return make_interval(0, 0);
      return ia_eval(cpd.args[0], env);
    case DistKind::Normal: {
      if (cpd.args.size() < 2) return widest();
      Interval mean = ia_eval(cpd.args[0], env);
      Interval var = ia_eval(cpd.args[1], env);
      double sigma = std::sqrt(std::max(var.hi, 0.0));
      return make_interval(mean.lo - 5 * sigma, mean.hi + 5 * sigma);
    }
    case DistKind::Uniform: {
      if (cpd.args.size() < 2) return widest();
      Interval a = ia_eval(cpd.args[0], env);
      Interval b = ia_eval(cpd.args[1], env);
      return make_interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
    }
    case DistKind::Student:
      return widest();
  }
  return widest();
}

double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

/// Discrete masses one expression places on a partition, given fixed parent
/// values. Every column is normalized; point masses stay exact (sum is 1).
std::vector<double> density_column(const NodeId& node, const Partition& part,
                                   const ParsedCpd& cpd,
                                   const std::map<NodeId, double>& env) {
  auto ev = [&](const Expr& e) {
    try {
      return e.eval(env);
    } catch (const std::logic_error& ex) {
      throw CompileError(node, ex.what());
    }
  };

  std::size_t m = part.size();
  std::vector<double> col(m, 0.0);
  switch (cpd.head) {
    case DistKind::Arithmetic: {
      if (cpd.args.empty()) throw CompileError(node, "empty arithmetic expression");
      double v = ev(cpd.args[0]);
      if (std::isnan(v)) throw CompileError(node, "expression evaluates to NaN");
      col[part.locate(v)] = 1.0;
      break;
    }
    case DistKind::Normal: {
      if (cpd.args.size() < 2) throw CompileError(node, "normal needs mean and variance");
      double mu = ev(cpd.args[0]);
      double var = ev(cpd.args[1]);
      if (!(var > 0)) throw CompileError(node, "nonpositive variance");
      double sigma = std::sqrt(var);
      if (m == 1) {
        col[0] = 1.0;
        break;
      }
      double prev = normal_cdf(part.cuts[0], mu, sigma);
      col[0] = prev;
      for (std::size_t i = 1; i + 1 < m; ++i) {
        double c = normal_cdf(part.cuts[i], mu, sigma);
        col[i] = c - prev;
        prev = c;
      }
      col[m - 1] = 1.0 - prev;
      break;
    }
    case DistKind::Uniform: {
      if (cpd.args.size() < 2) throw CompileError(node, "uniform needs two bounds");
      double lo = ev(cpd.args[0]);
      double hi = ev(cpd.args[1]);
      if (!(lo < hi)) throw CompileError(node, "uniform bounds out of order");
      double width = hi - lo;
      constexpr double inf = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        double a = i == 0 ? -inf : part.lower(i);
        double b = i + 1 == m ? inf : part.upper(i);
        double overlap = std::min(hi, b) - std::max(lo, a);
        if (overlap > 0) col[i] = overlap / width;
      }
      break;
    }
    case DistKind::Student:
      throw CompileError(node, "unsupported distribution: Student");
  }

  double sum = 0;
  for (double& x : col) {
    if (x < 0) x = 0;
    sum += x;
  }
  if (!(sum > 0)) throw CompileError(node, "distribution places no mass on the partition");
  if (sum != 1.0)
    for (double& x : col) x /= sum;
  return col;
}

Factor compile_node(const BayesianNetwork& bn, const DiscretizedBn& d, const Node& node) {
  int self = static_cast<int>(bn.index_of(node.id));
  std::vector<NodeId> parents = BayesianNetwork::cpd_parents(node.cpd);

  std::vector<int> pvars;
  pvars.reserve(parents.size());
  for (const NodeId& p : parents) {
    if (!bn.has(p)) throw CompileError(node.id, "unknown parent: " + p);
    pvars.push_back(static_cast<int>(bn.index_of(p)));
  }

  Factor f;
  f.scope = pvars;
  f.scope.push_back(self);
  std::sort(f.scope.begin(), f.scope.end());
  if (std::adjacent_find(f.scope.begin(), f.scope.end()) != f.scope.end())
    throw CompileError(node.id, "duplicate variable in conditional table scope");
  f.card.reserve(f.scope.size());
  for (int v : f.scope) f.card.push_back(d.card[static_cast<std::size_t>(v)]);
  f.data.assign(table_size(f.card), 0.0);

  auto fstrides = strides_of(f);
  auto stride_in_scope = [&](int var) {
    auto it = std::lower_bound(f.scope.begin(), f.scope.end(), var);
    return fstrides[static_cast<std::size_t>(it - f.scope.begin())];
  };
  std::size_t self_stride = stride_in_scope(self);
  std::size_t self_card = d.card[static_cast<std::size_t>(self)];

  std::vector<std::size_t> pstrides, pcards;
  for (int v : pvars) {
    pstrides.push_back(stride_in_scope(v));
    pcards.push_back(d.card[static_cast<std::size_t>(v)]);
  }

  if (const auto* table = std::get_if<TableCpd>(&node.cpd)) {
    std::size_t row_count = 1;
    for (std::size_t c : pcards) row_count *= c;
    if (table->rows.size() != row_count)
      throw CompileError(node.id, "table has " + std::to_string(table->rows.size()) +
                                      " rows; parent states require " +
                                      std::to_string(row_count));
    std::vector<std::size_t> assign(parents.size(), 0);
    for (std::size_t row = 0; row < row_count; ++row) {
      const auto& r = table->rows[row];
      if (r.size() != self_card)
        throw CompileError(node.id, "table row length does not match state count");
      double sum = 0;
      for (double x : r) {
        if (x < 0) throw CompileError(node.id, "negative table entry");
        sum += x;
      }
      if (!(sum > 0)) throw CompileError(node.id, "table row has no mass");
      std::size_t base = 0;
      for (std::size_t k = 0; k < assign.size(); ++k) base += assign[k] * pstrides[k];
      for (std::size_t s = 0; s < self_card; ++s)
        f.data[base + s * self_stride] = r[s] / sum;
      for (std::size_t k = assign.size(); k-- > 0;) {
        if (++assign[k] < pcards[k]) break;
        assign[k] = 0;
      }
    }
    return f;
  }

  const ExpressionCpd* expr = std::get_if<ExpressionCpd>(&node.cpd);
  const PartitionedCpd* part_cpd = std::get_if<PartitionedCpd>(&node.cpd);
  if (node.kind != NodeKind::Continuous)
    throw CompileError(node.id, "discrete node needs a table");
  const Partition& self_part = d.partitions.at(node.id);

  std::size_t control_count = part_cpd ? part_cpd->control.size() : 0;
  std::size_t combos = 1;
  for (std::size_t c : pcards) combos *= c;

  std::vector<std::size_t> assign(parents.size(), 0);
  std::map<NodeId, double> env;
  for (std::size_t n = 0; n < combos; ++n) {
    env.clear();
    for (std::size_t k = 0; k < parents.size(); ++k) {
      const Node& pn = bn.nodes()[static_cast<std::size_t>(pvars[k])];
      if (pn.kind == NodeKind::Continuous)
        env[pn.id] = d.partitions.at(pn.id).midpoint(assign[k]);
    }

    const ParsedCpd* active = nullptr;
    if (expr) {
      active = &expr->parsed;
    } else {
      std::size_t idx = 0;
      for (std::size_t k = 0; k < control_count; ++k) idx = idx * pcards[k] + assign[k];
      if (idx >= part_cpd->cases.size() || !part_cpd->cases[idx])
        throw CompileError(node.id, "missing case for a control state");
      active = &*part_cpd->cases[idx];
    }

    std::vector<double> col = density_column(node.id, self_part, *active, env);
    std::size_t base = 0;
    for (std::size_t k = 0; k < assign.size(); ++k) base += assign[k] * pstrides[k];
    for (std::size_t s = 0; s < self_card; ++s) f.data[base + s * self_stride] = col[s];

    for (std::size_t k = assign.size(); k-- > 0;) {
      if (++assign[k] < pcards[k]) break;
      assign[k] = 0;
    }
  }
  return f;
}

}  // namespace

std::size_t Partition::locate(double x) const {
  return static_cast<std::size_t>(
      std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

std::vector<std::string> Partition::labels() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    std::string s = i == 0 ? "[" : "(";
    s += fmt_double(lower(i));
    s += ", ";
    s += fmt_double(upper(i));
    s += "]";
    out.push_back(std::move(s));
  }
  return out;
}

Partition uniform_partition(const NodeId& node, double lo, double hi, std::size_t m) {
  if (m == 0) throw std::invalid_argument("partition needs at least one interval");
  if (!(lo < hi)) throw std::invalid_argument("partition range is empty: " + node);
  Partition p;
  p.node = node;
  p.lo = lo;
  p.hi = hi;
  double width = (hi - lo) / static_cast<double>(m);
  double last = lo;
  for (std::size_t i = 1; i < m; ++i) {
    double c = lo + width * static_cast<double>(i);
    if (c > last && c < hi) {
      p.cuts.push_back(c);
      last = c;
    }
  }
  return p;
}

std::map<NodeId, Interval> working_ranges(const BayesianNetwork& bn) {
  std::map<NodeId, Interval> out;
  std::vector<NodeId> order;
  if (auto topo = topo_order(bn)) {
    order = *topo;
  } else {
    for (const Node& nd : bn.nodes()) order.push_back(nd.id);
  }

  for (const NodeId& id : order) {
    const Node& nd = bn.at(id);
    if (nd.kind != NodeKind::Continuous) continue;

    Interval r;
    if (nd.declared_range) {
      r = *nd.declared_range;
    } else if (const auto* e = std::get_if<ExpressionCpd>(&nd.cpd)) {
      r = parsed_range(e->parsed, out);
    } else if (const auto* p = std::get_if<PartitionedCpd>(&nd.cpd)) {
      bool any = false;
      for (const auto& c : p->cases) {
        if (!c) continue;
        Interval cr = parsed_range(*c, out);
        if (!any) {
          r = cr;
          any = true;
        } else {
          r.lo = std::min(r.lo, cr.lo);
          r.hi = std::max(r.hi, cr.hi);
        }
      }
      if (!any) r = make_interval(0, 0);
    } else {
      r = make_interval(0, 0);
    }

    if (!(r.lo <= r.hi)) r = widest();
    r.lo = std::max(r.lo, -kRangeClamp);
    r.hi = std::min(r.hi, kRangeClamp);
    if (r.lo == r.hi) {
      r.lo -= 0.5;
      r.hi += 0.5;
    }
    out[id] = r;
  }
  return out;
}

int DiscretizedBn::var_of(const NodeId& id) const {
  return static_cast<int>(source.index_of(id));
}

DiscretizedBn compile(const BayesianNetwork& bn, const PartitionMap& partitions) {
  DiscretizedBn d;
  d.source = bn;
  d.var_names.reserve(bn.size());
  for (const Node& nd : bn.nodes()) {
    d.var_names.push_back(nd.id);
    if (nd.kind == NodeKind::Discrete) {
      if (nd.states.empty()) throw CompileError(nd.id, "discrete node has no states");
      d.card.push_back(nd.states.size());
      d.state_labels.push_back(nd.states);
    } else {
      auto it = partitions.find(nd.id);
      if (it == partitions.end())
        throw CompileError(nd.id, "no partition for continuous node: " + nd.id);
      d.partitions[nd.id] = it->second;
      d.card.push_back(it->second.size());
      d.state_labels.push_back(it->second.labels());
    }
  }

  d.cpts.reserve(bn.size());
  for (const Node& nd : bn.nodes()) d.cpts.push_back(compile_node(bn, d, nd));

  for (const auto& [id, value] : bn.evidence) {
    if (!bn.has(id)) throw CompileError(id, "evidence on unknown node: " + id);
    const Node& nd = bn.at(id);
    int var = static_cast<int>(bn.index_of(id));
    if (nd.kind == NodeKind::Discrete) {
      const auto* label = std::get_if<std::string>(&value);
      if (!label) throw CompileError(id, "discrete evidence must be a state label");
      auto it = std::find(nd.states.begin(), nd.states.end(), *label);
      if (it == nd.states.end())
        throw CompileError(id, "unknown evidence state: " + *label);
      d.evidence_states[var] = static_cast<std::size_t>(it - nd.states.begin());
    } else {
      const auto* x = std::get_if<double>(&value);
      if (!x) throw CompileError(id, "continuous evidence must be numeric");
      d.evidence_states[var] = d.partitions.at(id).locate(*x);
    }
  }
  return d;
}

ReeEstimate ree(const DiscretizedBn& dbn, const NodeId& node,
                const std::map<NodeId, std::vector<double>>& marginals) {
  ReeEstimate est;
  const Node& nd = dbn.source.at(node);
  if (nd.kind != NodeKind::Continuous) return est;
  auto part_it = dbn.partitions.find(node);
  auto post_it = marginals.find(node);
  if (part_it == dbn.partitions.end() || post_it == marginals.end()) return est;
  const Partition& part = part_it->second;
  const std::vector<double>& post = post_it->second;
  est.per_interval.assign(part.size(), 0.0);

  // Mixture components active at this node under the posterior: weight plus
  // the expression, with continuous parents fixed at their posterior means.
  std::vector<std::pair<double, const ParsedCpd*>> comps;
  if (const auto* e = std::get_if<ExpressionCpd>(&nd.cpd)) {
    comps.emplace_back(1.0, &e->parsed);
  } else if (const auto* p = std::get_if<PartitionedCpd>(&nd.cpd)) {
    std::vector<const std::vector<double>*> cm;
    std::vector<std::size_t> ccard;
    for (const NodeId& ctrl : p->control) {
      auto it = marginals.find(ctrl);
      if (it == marginals.end()) return est;
      cm.push_back(&it->second);
      ccard.push_back(it->second.size());
    }
    std::vector<std::size_t> assign(cm.size(), 0);
    for (std::size_t idx = 0; idx < p->cases.size(); ++idx) {
      double weight = 1.0;
      for (std::size_t k = 0; k < cm.size(); ++k)
        weight *= assign[k] < ccard[k] ? (*cm[k])[assign[k]] : 0.0;
      if (p->cases[idx] && weight > 0) comps.emplace_back(weight, &*p->cases[idx]);
      for (std::size_t k = assign.size(); k-- > 0;) {
        if (++assign[k] < ccard[k]) break;
        assign[k] = 0;
      }
    }
  } else {
    return est;
  }

  std::map<NodeId, double> env;
  for (const auto& [weight, cpd] : comps) {
    for (const NodeId& v : cpd->free_vars) {
      if (env.count(v) || !dbn.source.has(v)) continue;
      const Node& pn = dbn.source.at(v);
      if (pn.kind != NodeKind::Continuous) continue;
      auto mit = marginals.find(v);
      auto pit = dbn.partitions.find(v);
      if (mit == marginals.end() || pit == dbn.partitions.end()) continue;
      double mean = 0;
      for (std::size_t i = 0; i < mit->second.size() && i < pit->second.size(); ++i)
        mean += mit->second[i] * pit->second.midpoint(i);
      env[v] = mean;
    }
  }

  // Reduce each component to a closed-form density; point masses drop out.
  struct DensityComp {
    int kind = 0;  // 0 none, 1 normal, 2 uniform
    double w = 0, a = 0, b = 0;
  };
  std::vector<DensityComp> dens;
  for (const auto& [weight, cpd] : comps) {
    DensityComp c;
    c.w = weight;
    try {
      if (cpd->head == DistKind::Normal && cpd->args.size() >= 2) {
        double mu = cpd->args[0].eval(env);
        double var = cpd->args[1].eval(env);
        if (var > 0) {
          c.kind = 1;
          c.a = mu;
          c.b = std::sqrt(var);
        }
      } else if (cpd->head == DistKind::Uniform && cpd->args.size() >= 2) {
        double lo = cpd->args[0].eval(env);
        double hi = cpd->args[1].eval(env);
        if (lo < hi) {
          c.kind = 2;
          c.a = lo;
          c.b = hi;
        }
      }
    } catch (const std::logic_error&) {
      c.kind = 0;
    }
    if (c.kind != 0) dens.push_back(c);
  }

  const double inv_sqrt_2pi = 1.0 / std::sqrt(8.0 * std::atan(1.0));
  auto h = [&](double x) {
    double s = 0;
    for (const DensityComp& c : dens) {
      if (c.kind == 1) {
        double z = (x - c.a) / c.b;
        s += c.w * std::exp(-0.5 * z * z) * inv_sqrt_2pi / c.b;
      } else if (x >= c.a && x <= c.b) {
        s += c.w / (c.b - c.a);
      }
    }
    return s;
  };

  constexpr int kSamples = 16;
  for (std::size_t i = 0; i < part.size(); ++i) {
    double a = part.lower(i);
    double b = part.upper(i);
    double step = (b - a) / kSamples;
    std::array<double, kSamples> sample{};
    double total = 0;
    for (int t = 0; t < kSamples; ++t) {
      sample[static_cast<std::size_t>(t)] = h(a + (t + 0.5) * step);
      total += sample[static_cast<std::size_t>(t)];
    }
    double kl = 0;
    if (total > 0) {
      for (double s : sample) {
        double q = s / total;
        if (q > 0) kl += q * std::log(kSamples * q);
      }
    }
    double mass = i < post.size() ? post[i] : 0.0;
    est.per_interval[i] = mass * kl;
    est.total += est.per_interval[i];
  }
  return est;
}

DdResult dynamic_discretize(const BayesianNetwork& bn, const DdConfig& config) {
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  auto ranges = working_ranges(bn);
  DdResult res;
  std::size_t initial = std::max<std::size_t>(config.initial_states, 1);
  for (const Node& nd : bn.nodes()) {
    if (nd.kind != NodeKind::Continuous) continue;
    const Interval& r = ranges.at(nd.id);
    res.partitions[nd.id] = uniform_partition(nd.id, r.lo, r.hi, initial);
  }

  MarkovNet mn = moral_graph(bn);
  for (;;) {
    std::vector<std::size_t> card;
    card.reserve(bn.size());
    for (const Node& nd : bn.nodes())
      card.push_back(nd.kind == NodeKind::Discrete ? nd.states.size()
                                                   : res.partitions.at(nd.id).size());
    JtPlan plan = plan_junction_tree(mn, &card);
    if (config.budget_entries != 0 && plan.total_entries > config.budget_entries)
      throw BudgetExceeded(
          "memory", "cluster tables need " + std::to_string(plan.total_entries) +
                        " entries; budget is " + std::to_string(config.budget_entries));
    if (config.budget_seconds > 0 && elapsed() > config.budget_seconds)
      throw BudgetExceeded("time", "wall clock exceeded " +
                                       std::to_string(config.budget_seconds) + " seconds");
    res.tree_width = plan.tree_width;
    res.max_potential_size = plan.max_potential_size;

    res.compiled = compile(bn, res.partitions);
    JunctionTree jt = propagate(res.compiled, plan);
    res.consistent = jt.consistent;
    res.marginals.clear();
    for (const Node& nd : bn.nodes())
      res.marginals[nd.id] = marginal(jt, res.compiled, nd.id).probs;
    ++res.iterations;
    if (!jt.consistent) break;

    res.ree_totals.clear();
    std::map<NodeId, ReeEstimate> estimates;
    for (const Node& nd : bn.nodes()) {
      if (nd.kind != NodeKind::Continuous) continue;
      ReeEstimate est = ree(res.compiled, nd.id, res.marginals);
      res.ree_totals[nd.id] = est.total;
      estimates.emplace(nd.id, std::move(est));
    }

    bool split_any = false;
    for (const Node& nd : bn.nodes()) {
      if (nd.kind != NodeKind::Continuous) continue;
      Partition& part = res.partitions.at(nd.id);
      const ReeEstimate& est = estimates.at(nd.id);
      if (est.total < config.ree_threshold) continue;
      if (part.size() >= config.max_states) continue;
      std::size_t worst = 0;
      double worst_score = -1;
      for (std::size_t i = 0; i < est.per_interval.size(); ++i) {
        if (est.per_interval[i] > worst_score) {
          worst_score = est.per_interval[i];
          worst = i;
        }
      }
      double mid = part.midpoint(worst);
      if (mid > part.lower(worst) && mid < part.upper(worst)) {
        part.cuts.insert(part.cuts.begin() + static_cast<std::ptrdiff_t>(worst), mid);
        split_any = true;
      }
    }
    if (!split_any || res.iterations >= config.max_iterations) break;
  }
  return res;
}

PartitionMap equivalence_partitions(const BayesianNetwork& bn, std::size_t max_states,
                                    const RewriteReport* rewrite) {
  if (max_states < 2) max_states = 2;
  auto ranges = working_ranges(bn);

  std::map<NodeId, NodeId> copy_from;  // stacked intermediate -> its child
  std::set<NodeId> chained;            // split intermediates: hold partial sums
  if (rewrite) {
    for (const CreatedNode& c : rewrite->created) {
      if (!bn.has(c.id)) continue;
      if (c.role == 'F' && bn.has(c.source)) copy_from[c.id] = c.source;
      if (c.role == 'E') chained.insert(c.id);
    }
  }

  std::vector<NodeId> order;
  if (auto topo = topo_order(bn)) {
    order = *topo;
  } else {
    for (const Node& nd : bn.nodes()) order.push_back(nd.id);
  }

  double max_width = 0;
  for (const Node& nd : bn.nodes()) {
    if (nd.kind != NodeKind::Continuous || copy_from.count(nd.id) || chained.count(nd.id))
      continue;
    const Interval& r = ranges.at(nd.id);
    max_width = std::max(max_width, r.hi - r.lo);
  }

  // A shared grid of width w keeps every interval midpoint at an integer
  // multiple k*w, so sums of midpoints land exactly on other midpoints.  A
  // node introduced by arithmetic splitting must cover every value its
  // parents' midpoints can combine to, or the partial result gets squeezed
  // into an end interval and the split chain drifts off the direct
  // computation; its span therefore comes from interval arithmetic over the
  // parents' midpoint hulls rather than from its own scalar range.
  struct Span {
    long long kf, kl;
  };
  auto fit = [&](double w, std::map<NodeId, Span>& spans) {
    spans.clear();
    std::map<NodeId, Interval> mids;
    std::size_t biggest = 1;
    for (const NodeId& id : order) {
      const Node& nd = bn.at(id);
      if (nd.kind != NodeKind::Continuous || copy_from.count(id)) continue;
      Interval r = ranges.at(id);
      if (chained.count(id)) {
        if (const auto* e = std::get_if<ExpressionCpd>(&nd.cpd))
          r = parsed_range(e->parsed, mids);
      }
      Span s;
      s.kf = std::llround(r.lo / w);
      s.kl = std::llround(r.hi / w);
      if (s.kl < s.kf) s.kl = s.kf;
      spans[id] = s;
      mids[id] = make_interval(static_cast<double>(s.kf) * w, static_cast<double>(s.kl) * w);
      biggest = std::max(biggest, static_cast<std::size_t>(s.kl - s.kf) + 1);
    }
    return biggest;
  };

  double w = max_width / static_cast<double>(max_states - 1);
  if (!(w > 0)) w = 1.0;
  std::map<NodeId, Span> spans;
  for (int guard = 0; guard < 400; ++guard) {
    if (fit(w, spans) <= max_states) break;
    w *= 1.05;
  }

  PartitionMap out;
  for (const auto& [id, s] : spans) {
    Partition p;
    p.node = id;
    p.lo = (static_cast<double>(s.kf) - 0.5) * w;
    p.hi = (static_cast<double>(s.kl) + 0.5) * w;
    for (long long k = s.kf; k < s.kl; ++k)
      p.cuts.push_back((static_cast<double>(k) + 0.5) * w);
    out[id] = p;
  }

  for (const auto& [fid, source] : copy_from) {
    auto it = out.find(source);
    if (it == out.end()) continue;  // child not continuous; cannot happen for stacks
    Partition p = it->second;
    p.node = fid;
    out[fid] = p;
  }
  return out;
}

}  // namespace hbnf
