#pragma once

#include "hbnf/model.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hbnf {

enum class SfMode { Compact, Explicit };

/// Role of a node created by a rewrite: 'E' = arithmetic intermediate from
/// expression splitting, 'F' = stacked density intermediate, 'B' = binary
/// indicator (explicit stacking mode only).
struct CreatedNode {
  NodeId id;
  char role;
  NodeId source;  // the child whose rewrite created this node
};

struct CpdChange {
  NodeId node;
  int size_before;
  int size_after;
};

/// Per-partitioned-node statistics: `components` is the number of mixture
/// cases and `splittable_parents` counts the distinct continuous parents
/// appearing in multi-variable case expressions.
struct PartitionStat {
  NodeId node;
  int components;
  int splittable_parents;
};

struct RewriteReport {
  std::vector<CreatedNode> created;
  std::vector<CpdChange> rewritten;
  std::vector<PartitionStat> partitions;
  int max_cpd_size_before = 0;
  int max_cpd_size_after = 0;
  int max_continuous_parents_before = 0;
  int max_continuous_parents_after = 0;
};

struct FactorizeError : std::runtime_error {
  NodeId node;
  FactorizeError(NodeId n, const std::string& msg)
      : std::runtime_error(msg), node(std::move(n)) {}
};

/**
 * Splits arithmetic expression CPDs by introducing deterministic intermediate
 * nodes, each computing one two-variable operation, until every plain
 * expression references at most two distinct continuous parents and every
 * case inside a partitioned CPD references at most one. Intermediates are
 * named `<child>_E<k>` (k from 0 per child) and appended after the existing
 * nodes; subtrees are never shared between extractions.
 */
std::pair<BayesianNetwork, RewriteReport> binary_factorize(const BayesianNetwork& bn);

/**
 * Rebuilds each partitioned CPD whose cases span more than two distinct
 * continuous parents (and whose control has more than two joint states) as a
 * chain of stacked intermediates F_1..F_{n-2} named `<child>_F<k>`, so the
 * child keeps at most two continuous parents. Compact mode keeps the original
 * control nodes on every intermediate; Explicit mode adds binary indicator
 * nodes `<child>_B<k>` with cumulative-membership tables and controls each
 * intermediate by one indicator instead.
 *
 * Throws FactorizeError ("unfactorized case") if a CPD it must rebuild has a
 * case referencing two or more continuous parents; run binary_factorize
 * first.
 */
std::pair<BayesianNetwork, RewriteReport> stacking_factorize(const BayesianNetwork& bn,
                                                             SfMode mode = SfMode::Compact);

/// Combines the reports of two rewrites applied in sequence: before-metrics
/// from the first, after-metrics from the second, created nodes concatenated,
/// per-node size changes chained through both passes.
RewriteReport merge_reports(const RewriteReport& first, const RewriteReport& second);

/// binary_factorize followed by compact stacking_factorize, with the reports
/// merged (before-metrics from the input, after-metrics from the result).
std::pair<BayesianNetwork, RewriteReport> sf_bf(const BayesianNetwork& bn);

/// Mixture of one-dimensional densities with fixed weights.
struct MixtureSpec {
  std::vector<double> weights;
  std::vector<std::function<double(double)>> components;
};

/// Pairwise stacking coefficients alpha_k = prefix(k)/prefix(k+1) for
/// k = 1..n-1; a zero prefix mass yields alpha_k = 0.
struct StackPlan {
  std::vector<double> alphas;
};

/// Throws std::invalid_argument on an empty or negative weight vector or a
/// total differing from 1 by more than 1e-9.
StackPlan alpha_weights(const std::vector<double>& weights);

/// Evaluates the mixture by the pairwise stacking recursion
/// g_k = alpha_k * g_{k-1} + (1 - alpha_k) * f_{k+1}.
double stack_mixture(const MixtureSpec& spec, double x);

/// Direct evaluation of the weighted component sum, for cross-checking.
double direct_mixture(const MixtureSpec& spec, double x);

}  // namespace hbnf
