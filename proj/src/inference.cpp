#include "hbnf/inference.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hbnf {

namespace {

MarkovNet build_markov(std::vector<NodeId> names, std::vector<std::vector<int>> families) {
  MarkovNet mn;
  mn.var_names = std::move(names);
  mn.adjacency.assign(mn.var_names.size(), {});
  mn.potential_scopes = std::move(families);
  for (const auto& fam : mn.potential_scopes) {
    for (std::size_t i = 0; i < fam.size(); ++i)
      for (std::size_t j = i + 1; j < fam.size(); ++j) {
        mn.adjacency[static_cast<std::size_t>(fam[i])].insert(fam[j]);
        mn.adjacency[static_cast<std::size_t>(fam[j])].insert(fam[i]);
      }
  }
  return mn;
}

/// Disjoint-set forest for the spanning-tree construction.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<int> sorted_intersection(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool contains_all(const std::vector<int>& big, const std::vector<int>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

MarkovNet moralize(const DiscretizedBn& dbn) {
  std::vector<std::vector<int>> families;
  families.reserve(dbn.cpts.size());
  for (const Factor& f : dbn.cpts) families.push_back(f.scope);
  return build_markov(dbn.var_names, std::move(families));
}

MarkovNet moral_graph(const BayesianNetwork& bn) {
  std::vector<NodeId> names;
  std::vector<std::vector<int>> families;
  names.reserve(bn.size());
  for (const Node& nd : bn.nodes()) names.push_back(nd.id);
  for (const Node& nd : bn.nodes()) {
    std::vector<int> fam;
    fam.push_back(static_cast<int>(bn.index_of(nd.id)));
    for (const NodeId& p : bn.parents_of(nd.id))
      if (bn.has(p)) fam.push_back(static_cast<int>(bn.index_of(p)));
    std::sort(fam.begin(), fam.end());
    fam.erase(std::unique(fam.begin(), fam.end()), fam.end());
    families.push_back(std::move(fam));
  }
  return build_markov(std::move(names), std::move(families));
}

Triangulation triangulate(const MarkovNet& mn) {
  std::size_t n = mn.adjacency.size();
  Triangulation tri;
  tri.chordal = mn.adjacency;
  std::vector<std::set<int>> work = mn.adjacency;
  std::vector<bool> eliminated(n, false);

  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    std::size_t best_fill = 0, best_degree = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (eliminated[v]) continue;
      std::vector<int> live;
      for (int u : work[v])
        if (!eliminated[static_cast<std::size_t>(u)]) live.push_back(u);
      std::size_t fill = 0;
      for (std::size_t i = 0; i < live.size(); ++i)
        for (std::size_t j = i + 1; j < live.size(); ++j)
          if (!work[static_cast<std::size_t>(live[i])].count(live[j])) ++fill;
      bool better = false;
      if (best == n) {
        better = true;
      } else if (fill != best_fill) {
        better = fill < best_fill;
      } else if (live.size() != best_degree) {
        better = live.size() < best_degree;
      } else {
        better = mn.var_names[v] < mn.var_names[best];
      }
      if (better) {
        best = v;
        best_fill = fill;
        best_degree = live.size();
      }
    }

    std::vector<int> live;
    for (int u : work[best])
      if (!eliminated[static_cast<std::size_t>(u)]) live.push_back(u);
    std::vector<int> clique = live;
    clique.push_back(static_cast<int>(best));
    std::sort(clique.begin(), clique.end());
    tri.cliques.push_back(std::move(clique));
    tri.elimination_order.push_back(static_cast<int>(best));

    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        auto a = static_cast<std::size_t>(live[i]);
        auto b = static_cast<std::size_t>(live[j]);
        if (work[a].insert(live[j]).second) {
          work[b].insert(live[i]);
          tri.chordal[a].insert(live[j]);
          tri.chordal[b].insert(live[i]);
          ++tri.fill_edges;
        }
      }
    eliminated[best] = true;
  }
  return tri;
}

JtPlan plan_junction_tree(const MarkovNet& mn, const std::vector<std::size_t>* card) {
  Triangulation tri = triangulate(mn);

  JtPlan plan;
  // Keep only maximal elimination cliques; exact duplicates keep the earliest.
  for (std::size_t i = 0; i < tri.cliques.size(); ++i) {
    bool maximal = true;
    for (std::size_t j = 0; j < tri.cliques.size() && maximal; ++j) {
      if (j == i) continue;
      if (!contains_all(tri.cliques[j], tri.cliques[i])) continue;
      if (tri.cliques[j].size() > tri.cliques[i].size() || j < i) maximal = false;
    }
    if (maximal) plan.clusters.push_back(tri.cliques[i]);
  }

  for (const auto& c : plan.clusters)
    plan.tree_width = std::max(plan.tree_width, static_cast<int>(c.size()) - 1);
  for (const auto& scope : mn.potential_scopes)
    plan.max_potential_size =
        std::max(plan.max_potential_size, static_cast<int>(scope.size()));

  struct Edge {
    std::size_t i, j, weight;
  };
  std::vector<Edge> candidates;
  for (std::size_t i = 0; i < plan.clusters.size(); ++i)
    for (std::size_t j = i + 1; j < plan.clusters.size(); ++j)
      candidates.push_back(
          {i, j, sorted_intersection(plan.clusters[i], plan.clusters[j]).size()});
  std::sort(candidates.begin(), candidates.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  UnionFind uf(plan.clusters.size());
  for (const Edge& e : candidates) {
    if (!uf.unite(e.i, e.j)) continue;
    plan.edges.emplace_back(static_cast<int>(e.i), static_cast<int>(e.j));
    plan.separators.push_back(sorted_intersection(plan.clusters[e.i], plan.clusters[e.j]));
  }

  for (const auto& scope : mn.potential_scopes) {
    std::size_t home = plan.clusters.size();
    for (std::size_t c = 0; c < plan.clusters.size(); ++c) {
      if (contains_all(plan.clusters[c], scope)) {
        home = c;
        break;
      }
    }
    if (home == plan.clusters.size())
      throw std::logic_error("potential scope missing from every cluster");
    plan.assignment.push_back(static_cast<int>(home));
  }

  if (card) {
    for (const auto& c : plan.clusters) {
      std::size_t entries = 1;
      for (int v : c) entries *= (*card)[static_cast<std::size_t>(v)];
      plan.total_entries += entries;
    }
  }
  return plan;
}

JunctionTree propagate(const DiscretizedBn& dbn, const JtPlan& plan) {
  JunctionTree jt;
  jt.plan = plan;
  std::size_t nc = plan.clusters.size();

  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<std::size_t> card;
    card.reserve(plan.clusters[c].size());
    for (int v : plan.clusters[c]) card.push_back(dbn.card[static_cast<std::size_t>(v)]);
    jt.beliefs.push_back(make_ones(plan.clusters[c], std::move(card)));
  }
  for (std::size_t k = 0; k < dbn.cpts.size(); ++k)
    multiply_into(jt.beliefs[static_cast<std::size_t>(plan.assignment[k])], dbn.cpts[k]);
  for (const auto& [var, state] : dbn.evidence_states) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (std::binary_search(plan.clusters[c].begin(), plan.clusters[c].end(), var)) {
        apply_indicator(jt.beliefs[c], var, state);
        break;
      }
    }
  }
  for (std::size_t c = 0; c < nc; ++c)
    if (normalize(jt.beliefs[c]) == 0.0) jt.consistent = false;

  for (const auto& sep : plan.separators) {
    std::vector<std::size_t> card;
    card.reserve(sep.size());
    for (int v : sep) card.push_back(dbn.card[static_cast<std::size_t>(v)]);
    jt.edge_separators.push_back(make_ones(sep, std::move(card)));
  }

  // Tree walk from cluster 0, neighbors in ascending order.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nc);
  for (std::size_t e = 0; e < plan.edges.size(); ++e) {
    auto [a, b] = plan.edges[e];
    adj[static_cast<std::size_t>(a)].emplace_back(static_cast<std::size_t>(b), e);
    adj[static_cast<std::size_t>(b)].emplace_back(static_cast<std::size_t>(a), e);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());

  std::vector<std::size_t> order, parent(nc, nc), parent_edge(nc, 0);
  std::vector<bool> seen(nc, false);
  if (nc > 0) {
    order.push_back(0);
    seen[0] = true;
    for (std::size_t head = 0; head < order.size(); ++head) {
      std::size_t v = order[head];
      for (const auto& [u, e] : adj[v]) {
        if (seen[u]) continue;
        seen[u] = true;
        parent[u] = v;
        parent_edge[u] = e;
        order.push_back(u);
      }
    }
  }

  auto send = [&](std::size_t from, std::size_t to, std::size_t edge) {
    Factor message = project(jt.beliefs[from], jt.edge_separators[edge].scope);
    Factor update = divide(message, jt.edge_separators[edge]);
    multiply_into(jt.beliefs[to], update);
    jt.edge_separators[edge] = std::move(message);
    if (normalize(jt.beliefs[to]) == 0.0) jt.consistent = false;
  };

  for (std::size_t k = order.size(); k-- > 1;) {
    std::size_t v = order[k];
    send(v, parent[v], parent_edge[v]);
  }
  for (std::size_t v : order)
    for (const auto& [u, e] : adj[v])
      if (parent[u] == v) send(v, u, e);

  for (std::size_t c = 0; c < nc; ++c)
    if (normalize(jt.beliefs[c]) == 0.0) jt.consistent = false;
  return jt;
}

MarginalTable marginal(const JunctionTree& jt, const DiscretizedBn& dbn, const NodeId& node) {
  int var = dbn.var_of(node);
  MarginalTable mt;
  mt.node = node;
  mt.states = dbn.state_labels[static_cast<std::size_t>(var)];
  for (std::size_t c = 0; c < jt.plan.clusters.size(); ++c) {
    if (!std::binary_search(jt.plan.clusters[c].begin(), jt.plan.clusters[c].end(), var))
      continue;
    Factor m = project(jt.beliefs[c], {var});
    normalize(m);
    mt.probs = std::move(m.data);
    return mt;
  }
  throw std::logic_error("variable missing from every cluster: " + node);
}

InferenceResult run_inference(const DiscretizedBn& dbn) {
  MarkovNet mn = moralize(dbn);
  JtPlan plan = plan_junction_tree(mn, &dbn.card);
  JunctionTree jt = propagate(dbn, plan);

  InferenceResult res;
  res.consistent = jt.consistent;
  res.tree_width = plan.tree_width;
  res.max_potential_size = plan.max_potential_size;
  res.total_entries = plan.total_entries;
  for (const NodeId& id : dbn.var_names) res.marginals[id] = marginal(jt, dbn, id).probs;
  return res;
}

StructureMetrics metrics(const BayesianNetwork& bn) {
  MarkovNet mn = moral_graph(bn);
  JtPlan plan = plan_junction_tree(mn, nullptr);
  StructureMetrics m;
  m.tree_width = plan.tree_width;
  m.max_potential_size = plan.max_potential_size;
  for (const auto& c : plan.clusters) m.cluster_sizes.push_back(static_cast<int>(c.size()));
  return m;
}

BruteForceResult brute_force_joint(const DiscretizedBn& dbn, std::size_t max_entries) {
  double approx = 1;
  for (std::size_t c : dbn.card) approx *= static_cast<double>(c);
  if (approx > static_cast<double>(max_entries))
    throw std::invalid_argument("joint state space has " + std::to_string(approx) +
                                " entries; limit is " + std::to_string(max_entries));

  std::vector<int> scope(dbn.card.size());
  std::iota(scope.begin(), scope.end(), 0);
  BruteForceResult res;
  res.joint = make_ones(std::move(scope), dbn.card);
  for (const Factor& cpt : dbn.cpts) multiply_into(res.joint, cpt);
  for (const auto& [var, state] : dbn.evidence_states)
    apply_indicator(res.joint, var, state);
  res.consistent = normalize(res.joint) > 0.0;
  return res;
}

std::vector<double> marginal_from_joint(const Factor& joint, int var) {
  Factor m = project(joint, {var});
  normalize(m);
  return m.data;
}

}  // namespace hbnf
