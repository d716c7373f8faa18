#pragma once

#include "hbnf/factor.hpp"
#include "hbnf/factorize.hpp"
#include "hbnf/model.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbnf {

/// Ordered interval partition of one continuous node over [lo, hi].
/// `cuts` are the strictly increasing interior boundaries.
struct Partition {
  NodeId node;
  double lo = 0;
  double hi = 0;
  std::vector<double> cuts;

  std::size_t size() const { return cuts.size() + 1; }
  double lower(std::size_t i) const { return i == 0 ? lo : cuts[i - 1]; }
  double upper(std::size_t i) const { return i == cuts.size() ? hi : cuts[i]; }
  double midpoint(std::size_t i) const { return 0.5 * (lower(i) + upper(i)); }

  /// Index of the interval containing x. A value on an interior boundary
  /// belongs to the LEFT interval; values outside [lo, hi] clamp to the
  /// nearest end interval.
  std::size_t locate(double x) const;

  std::vector<std::string> labels() const;
};

/// m equal-width intervals over [lo, hi]; throws std::invalid_argument when
/// lo >= hi or m == 0.
Partition uniform_partition(const NodeId& node, double lo, double hi, std::size_t m);

using PartitionMap = std::map<NodeId, Partition>;

/// Ranges every node's values can reach: a declared range wins; otherwise
/// distribution heads and interval arithmetic over parent ranges decide,
/// with Normal tails cut at five standard deviations, everything clamped to
/// +/-1e9, and degenerate points widened by 0.5 each side.
std::map<NodeId, Interval> working_ranges(const BayesianNetwork& bn);

struct CompileError : std::runtime_error {
  NodeId node;
  CompileError(NodeId n, const std::string& msg)
      : std::runtime_error(msg), node(std::move(n)) {}
};

/**
 * All-discrete compilation of a network: every node becomes a conditional
 * table (a Factor over {node} + parents, scope sorted by variable index).
 * Continuous parents enter expressions at interval midpoints; Normal mass is
 * taken by CDF differences with tail mass folded into the end intervals;
 * Uniform by overlap fraction; Arithmetic as a point mass with boundary ties
 * going left. Every row is normalized. Numeric evidence binds here to the
 * interval containing the observed value.
 */
struct DiscretizedBn {
  BayesianNetwork source;
  PartitionMap partitions;
  std::vector<NodeId> var_names;                      // index = factor variable id
  std::vector<std::size_t> card;                      // per variable
  std::vector<std::vector<std::string>> state_labels; // per variable
  std::vector<Factor> cpts;                           // one per node, same order
  std::map<int, std::size_t> evidence_states;         // bound observations

  int var_of(const NodeId& id) const;
};

DiscretizedBn compile(const BayesianNetwork& bn, const PartitionMap& partitions);

/// Per-interval discretization error of one node: the KL divergence between
/// the conditional density sampled by a 16-point midpoint rule (continuous
/// parents at posterior means, discrete controls at their posterior mixture)
/// and its constant approximation, weighted by the interval's posterior
/// mass. Point-mass (Arithmetic) components carry no density and contribute
/// zero.
struct ReeEstimate {
  std::vector<double> per_interval;
  double total = 0;
};

ReeEstimate ree(const DiscretizedBn& dbn, const NodeId& node,
                const std::map<NodeId, std::vector<double>>& marginals);

struct DdConfig {
  std::size_t initial_states = 20;
  std::size_t max_states = 40;
  double ree_threshold = 1e-3;
  std::size_t max_iterations = 60;
  double budget_seconds = 0;       // 0 = unlimited wall clock
  std::size_t budget_entries = 0;  // 0 = unlimited total cluster-table entries
};

/// Raised when a DdConfig budget is exceeded; reason is "time" or "memory".
struct BudgetExceeded : std::runtime_error {
  std::string reason;
  BudgetExceeded(std::string r, const std::string& msg)
      : std::runtime_error(msg), reason(std::move(r)) {}
};

struct DdResult {
  PartitionMap partitions;
  DiscretizedBn compiled;
  std::map<NodeId, std::vector<double>> marginals;
  std::map<NodeId, double> ree_totals;
  bool consistent = true;
  std::size_t iterations = 0;
  int tree_width = 0;
  int max_potential_size = 0;
};

/**
 * Alternates compilation, tree propagation, and refinement: each round, every
 * continuous node whose total error is at or above the threshold and whose
 * state count is below max_states has its single worst interval split at the
 * midpoint. Stops when all nodes are below the threshold or saturated, or
 * after max_iterations. Deterministic given the config. Contradictory
 * evidence stops refinement and is reported via `consistent`, not an
 * exception.
 */
DdResult dynamic_discretize(const BayesianNetwork& bn, const DdConfig& config = {});

/**
 * Lattice-aligned partitions for exact equivalence checks: one shared
 * interval width for every continuous node, with boundaries on the global
 * half-step lattice so interval midpoints are integer multiples of the
 * width. Sums of midpoints then land exactly on midpoints again, which makes
 * deterministic rewrite chains reproduce the original compiled tables. When
 * a rewrite report is given, every stacked intermediate (role 'F') inherits
 * the full partition of the child it was created for, so folded tail mass
 * agrees between the original and rewritten networks.
 */
PartitionMap equivalence_partitions(const BayesianNetwork& bn, std::size_t max_states,
                                    const RewriteReport* rewrite = nullptr);

}  // namespace hbnf
