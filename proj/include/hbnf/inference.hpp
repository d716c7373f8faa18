#pragma once

#include "hbnf/discretize.hpp"
#include "hbnf/factor.hpp"
#include "hbnf/model.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace hbnf {

/// Undirected graph over factor variables, with one attached potential scope
/// per node family ({child} + parents, sorted by variable index).
struct MarkovNet {
  std::vector<NodeId> var_names;
  std::vector<std::set<int>> adjacency;
  std::vector<std::vector<int>> potential_scopes;
};

/// Drops edge directions and marries co-parents of every family.
MarkovNet moralize(const DiscretizedBn& dbn);

/// Same construction from the raw network; lets structural metrics run
/// without discretizing anything.
MarkovNet moral_graph(const BayesianNetwork& bn);

struct Triangulation {
  std::vector<std::set<int>> chordal;
  std::vector<int> elimination_order;
  std::vector<std::vector<int>> cliques;  // one elimination clique per step
  std::size_t fill_edges = 0;
};

/// Greedy minimum-fill elimination; ties broken by fewest neighbors, then by
/// variable name.
Triangulation triangulate(const MarkovNet& mn);

struct JtPlan {
  std::vector<std::vector<int>> clusters;       // maximal cliques, sorted
  std::vector<std::pair<int, int>> edges;       // spanning-tree edges
  std::vector<std::vector<int>> separators;     // per edge
  std::vector<int> assignment;                  // potential index -> cluster
  int tree_width = 0;
  int max_potential_size = 0;                   // largest family, in variables
  std::size_t total_entries = 0;                // sum of cluster table sizes
};

/// Extracts maximal cliques from the triangulation, joins them by a
/// maximum-separator-weight spanning tree, and assigns each potential to the
/// first cluster containing it. `card` (when given) prices cluster tables so
/// memory budgets can be checked before anything is allocated.
JtPlan plan_junction_tree(const MarkovNet& mn,
                          const std::vector<std::size_t>* card = nullptr);

struct JunctionTree {
  JtPlan plan;
  std::vector<Factor> beliefs;
  std::vector<Factor> edge_separators;
  bool consistent = true;
};

/// Two-pass sum-product message passing with the bound evidence entered as
/// indicator likelihoods and every message followed by normalization.
/// Contradictory evidence surfaces as consistent=false, never an exception.
JunctionTree propagate(const DiscretizedBn& dbn, const JtPlan& plan);

struct MarginalTable {
  NodeId node;
  std::vector<std::string> states;
  std::vector<double> probs;
};

MarginalTable marginal(const JunctionTree& jt, const DiscretizedBn& dbn, const NodeId& node);

struct InferenceResult {
  std::map<NodeId, std::vector<double>> marginals;
  bool consistent = true;
  int tree_width = 0;
  int max_potential_size = 0;
  std::size_t total_entries = 0;
};

/// moralize + plan + propagate + all marginals in one call.
InferenceResult run_inference(const DiscretizedBn& dbn);

struct StructureMetrics {
  int tree_width = 0;
  int max_potential_size = 0;
  std::vector<int> cluster_sizes;
};

/// Structural cost of exact inference on the network, independent of any
/// discretization (every variable priced as one symbol).
StructureMetrics metrics(const BayesianNetwork& bn);

struct BruteForceResult {
  Factor joint;      // normalized full joint over every variable
  bool consistent = true;
};

/// Explicit product of all compiled tables with evidence applied; refuses
/// state spaces above max_entries.
BruteForceResult brute_force_joint(const DiscretizedBn& dbn,
                                   std::size_t max_entries = 10'000'000);

std::vector<double> marginal_from_joint(const Factor& joint, int var);

}  // namespace hbnf
