#include "doctest.h"

#include "hbnf/discretize.hpp"
#include "hbnf/factorize.hpp"
#include "hbnf/fixtures.hpp"
#include "hbnf/inference.hpp"
#include "hbnf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

using namespace hbnf;

namespace {

Node expr_node(NodeId id, const std::string& text) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::Continuous;
  n.cpd = ExpressionCpd{parse_cpd(text)};
  return n;
}

Node discrete_node(NodeId id, std::vector<std::string> states, std::vector<double> prior) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::Discrete;
  n.states = std::move(states);
  n.cpd = TableCpd{{}, {std::move(prior)}};
  return n;
}

Node table_node(NodeId id, std::vector<std::string> states, std::vector<NodeId> parents,
                std::vector<std::vector<double>> rows) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::Discrete;
  n.states = std::move(states);
  n.cpd = TableCpd{std::move(parents), std::move(rows)};
  return n;
}

/// Smallest max-clique size over every elimination order of the graph;
/// exhaustive, so only usable on small graphs. Serves as an independent
/// check on the greedy triangulation.
int exhaustive_best_max_clique(const MarkovNet& mn) {
  const std::size_t n = mn.adjacency.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int best = static_cast<int>(n) + 1;
  do {
    std::vector<std::set<int>> g = mn.adjacency;
    std::vector<bool> gone(n, false);
    int worst = 0;
    for (int v : order) {
      std::vector<int> live;
      for (int u : g[static_cast<std::size_t>(v)])
        if (!gone[static_cast<std::size_t>(u)]) live.push_back(u);
      worst = std::max(worst, static_cast<int>(live.size()) + 1);
      for (std::size_t i = 0; i < live.size(); ++i)
        for (std::size_t j = i + 1; j < live.size(); ++j) {
          g[static_cast<std::size_t>(live[i])].insert(live[j]);
          g[static_cast<std::size_t>(live[j])].insert(live[i]);
        }
      gone[static_cast<std::size_t>(v)] = true;
    }
    best = std::min(best, worst);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

/// The wet-grass classic; posterior known in closed form.
BayesianNetwork sprinkler_net() {
  BayesianNetwork bn;
  bn.add(discrete_node("Rain", {"yes", "no"}, {0.2, 0.8}));
  bn.add(table_node("Sprinkler", {"on", "off"}, {"Rain"}, {{0.01, 0.99}, {0.4, 0.6}}));
  bn.add(table_node("Grass", {"wet", "dry"}, {"Sprinkler", "Rain"},
                    {{0.99, 0.01}, {0.9, 0.1}, {0.8, 0.2}, {0.0, 1.0}}));
  return bn;
}

}  // namespace

TEST_CASE("factor algebra on handmade tables") {
  Factor a;  // over variable 0 (card 2)
  a.scope = {0};
  a.card = {2};
  a.data = {0.25, 0.75};
  Factor b;  // over variables 0,1 (cards 2,3)
  b.scope = {0, 1};
  b.card = {2, 3};
  b.data = {1, 2, 3, 4, 5, 6};

  Factor ab = multiply(a, b);
  REQUIRE(ab.scope == std::vector<int>{0, 1});
  CHECK(ab.data == std::vector<double>{0.25, 0.5, 0.75, 3.0, 3.75, 4.5});

  Factor onto0 = project(ab, {0});
  CHECK(onto0.data[0] == doctest::Approx(1.5));
  CHECK(onto0.data[1] == doctest::Approx(11.25));

  Factor ratio = divide(ab, ab);
  for (double x : ratio.data) CHECK(x == 1.0);
  Factor zero = ab;
  for (double& x : zero.data) x = 0;
  Factor safe = divide(ab, zero);
  for (double x : safe.data) CHECK(x == 0.0);  // x/0 -> 0 by convention

  apply_indicator(ab, 1, 2);
  CHECK(ab.data == std::vector<double>{0, 0, 0.75, 0, 0, 4.5});
}

TEST_CASE("moralization marries co-parents") {
  BayesianNetwork bn;
  bn.add(discrete_node("D", {"a", "b"}, {0.5, 0.5}));
  bn.add(expr_node("X", "Normal(0, 1)"));
  Node c;
  c.id = "C";
  c.kind = NodeKind::Continuous;
  PartitionedCpd p;
  p.control = {"D"};
  p.cases.emplace_back(parse_cpd("X"));
  p.cases.emplace_back(parse_cpd("X + 1"));
  c.cpd = std::move(p);
  bn.add(std::move(c));

  MarkovNet mn = moral_graph(bn);
  REQUIRE(mn.var_names.size() == 3);
  int d = 0, x = 1, cc = 2;
  CHECK(mn.adjacency[d].count(x) == 1);  // married co-parents
  CHECK(mn.adjacency[d].count(cc) == 1);
  CHECK(mn.adjacency[x].count(cc) == 1);
}

TEST_CASE("triangulation fills chordless cycles") {
  // A 4-cycle 0-1-2-3-0 needs exactly one fill edge.
  MarkovNet mn;
  mn.var_names = {"a", "b", "c", "d"};
  mn.adjacency.resize(4);
  auto link = [&](int u, int v) {
    mn.adjacency[static_cast<std::size_t>(u)].insert(v);
    mn.adjacency[static_cast<std::size_t>(v)].insert(u);
  };
  link(0, 1);
  link(1, 2);
  link(2, 3);
  link(3, 0);
  mn.potential_scopes = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};

  Triangulation t = triangulate(mn);
  CHECK(t.fill_edges == 1);
  JtPlan plan = plan_junction_tree(mn);
  CHECK(plan.tree_width == 2);
  CHECK(plan.clusters.size() == 2);
  REQUIRE(plan.edges.size() == 1);
  CHECK(plan.separators[0].size() == 2);
}

TEST_CASE("junction tree plans satisfy tree and covering properties") {
  auto [fig6, rep] = sf_bf(make_fixture("fig2"));
  MarkovNet mn = moral_graph(fig6);
  JtPlan plan = plan_junction_tree(mn);

  // Spanning tree over the clusters.
  CHECK(plan.edges.size() + 1 == plan.clusters.size());
  // Every potential fits inside its assigned cluster.
  REQUIRE(plan.assignment.size() == mn.potential_scopes.size());
  for (std::size_t i = 0; i < mn.potential_scopes.size(); ++i) {
    const auto& cluster = plan.clusters[static_cast<std::size_t>(plan.assignment[i])];
    for (int v : mn.potential_scopes[i])
      CHECK(std::binary_search(cluster.begin(), cluster.end(), v));
  }
  // Clusters are maximal: none contains another.
  for (std::size_t i = 0; i < plan.clusters.size(); ++i)
    for (std::size_t j = 0; j < plan.clusters.size(); ++j) {
      if (i == j) continue;
      CHECK_FALSE(std::includes(plan.clusters[i].begin(), plan.clusters[i].end(),
                                plan.clusters[j].begin(), plan.clusters[j].end()));
    }
  CHECK(plan.tree_width == 4);
  CHECK(plan.max_potential_size == 4);
}

TEST_CASE("greedy elimination matches the exhaustive optimum on the chain rewrite") {
  // The split chain keeps width 4: its moral graph holds a 4-clique, and
  // enumerating all 8! elimination orders shows every one of them fills a
  // 5-clique (the two split heads share {X0, X1, X2} and fuse when the tail
  // is eliminated). Splitting shrinks the tables, not the width, here.
  BayesianNetwork fig1b = make_fixture("fig1b");
  MarkovNet mn = moral_graph(fig1b);
  REQUIRE(mn.var_names.size() == 8);
  int best_clique = exhaustive_best_max_clique(mn);
  CHECK(best_clique == 5);

  StructureMetrics sm = metrics(fig1b);
  CHECK(sm.tree_width == best_clique - 1);
  CHECK(sm.tree_width == 4);
  // The family tables themselves did shrink to three variables.
  CHECK(sm.max_potential_size == 3);

  // The unsplit original also pays width 4 (its five-variable family).
  CHECK(metrics(make_fixture("fig1a")).tree_width == 4);
}

TEST_CASE("greedy elimination matches the exhaustive optimum on small random nets") {
  std::mt19937_64 seeder(base_seed() ^ 0x5eedULL);
  for (int trial = 0; trial < 6; ++trial) {
    BayesianNetwork bn = random_partitioned_net(seeder());
    MarkovNet mn = moral_graph(bn);
    if (mn.var_names.size() > 8) continue;
    StructureMetrics sm = metrics(bn);
    CHECK(sm.tree_width == exhaustive_best_max_clique(mn) - 1);
  }
}

TEST_CASE("hand-checked posterior on the sprinkler classic") {
  BayesianNetwork bn = sprinkler_net();
  bn.evidence["Grass"] = std::string("wet");
  DiscretizedBn d = compile(bn, {});
  InferenceResult res = run_inference(d);
  REQUIRE(res.consistent);

  // P(rain, wet) = 0.2*(0.01*0.99 + 0.99*0.8); P(~rain, wet) = 0.8*(0.4*0.9).
  double joint_rain = 0.2 * (0.01 * 0.99 + 0.99 * 0.8);
  double joint_dry = 0.8 * (0.4 * 0.9 + 0.6 * 0.0);
  double want = joint_rain / (joint_rain + joint_dry);
  CHECK(std::abs(res.marginals.at("Rain")[0] - want) <= 1e-12);

  // And without evidence the prior comes straight back.
  BayesianNetwork prior = sprinkler_net();
  InferenceResult res2 = run_inference(compile(prior, {}));
  CHECK(std::abs(res2.marginals.at("Rain")[0] - 0.2) <= 1e-12);
  CHECK(std::abs(res2.marginals.at("Sprinkler")[0] - (0.2 * 0.01 + 0.8 * 0.4)) <= 1e-12);
}

TEST_CASE("propagation agrees with the brute-force joint") {
  SUBCASE("discrete network with evidence") {
    BayesianNetwork bn = sprinkler_net();
    bn.evidence["Sprinkler"] = std::string("on");
    DiscretizedBn d = compile(bn, {});
    InferenceResult jt = run_inference(d);
    BruteForceResult bf = brute_force_joint(d);
    REQUIRE(jt.consistent);
    REQUIRE(bf.consistent);
    for (const NodeId& id : {"Rain", "Sprinkler", "Grass"}) {
      auto direct = marginal_from_joint(bf.joint, d.var_of(id));
      const auto& fast = jt.marginals.at(id);
      REQUIRE(direct.size() == fast.size());
      for (std::size_t s = 0; s < direct.size(); ++s)
        CHECK(std::abs(direct[s] - fast[s]) <= 1e-9);
    }
  }
  SUBCASE("hybrid mixture with continuous evidence") {
    BayesianNetwork bn = make_fixture("fig4_analog");
    bn.evidence["C"] = 12.0;
    PartitionMap parts = equivalence_partitions(bn, 7);
    DiscretizedBn d = compile(bn, parts);
    InferenceResult jt = run_inference(d);
    BruteForceResult bf = brute_force_joint(d);
    REQUIRE(jt.consistent);
    for (const Node& nd : bn.nodes()) {
      auto direct = marginal_from_joint(bf.joint, d.var_of(nd.id));
      const auto& fast = jt.marginals.at(nd.id);
      for (std::size_t s = 0; s < direct.size(); ++s)
        CHECK(std::abs(direct[s] - fast[s]) <= 1e-9);
    }
  }
}

TEST_CASE("beliefs are calibrated across every separator") {
  auto check_calibration = [](const DiscretizedBn& d) {
    MarkovNet mn = moralize(d);
    JtPlan plan = plan_junction_tree(mn);
    JunctionTree jt = propagate(d, plan);
    REQUIRE(jt.consistent);
    for (std::size_t e = 0; e < plan.edges.size(); ++e) {
      Factor left = project(jt.beliefs[static_cast<std::size_t>(plan.edges[e].first)],
                            plan.separators[e]);
      Factor right = project(jt.beliefs[static_cast<std::size_t>(plan.edges[e].second)],
                             plan.separators[e]);
      normalize(left);
      normalize(right);
      REQUIRE(left.data.size() == right.data.size());
      for (std::size_t i = 0; i < left.data.size(); ++i)
        CHECK(std::abs(left.data[i] - right.data[i]) <= 1e-9);
    }
  };

  auto [fig6, rep] = sf_bf(make_fixture("fig2"));
  check_calibration(compile(fig6, equivalence_partitions(fig6, 5, &rep)));

  BayesianNetwork v = make_v_structure(4);
  auto [vs, vrep] = sf_bf(v);
  check_calibration(compile(vs, equivalence_partitions(vs, 6, &vrep)));
}

TEST_CASE("contradictory evidence surfaces as an inconsistent tree") {
  BayesianNetwork bn;
  bn.add(discrete_node("D", {"a", "b"}, {1.0, 0.0}));
  bn.add(table_node("E", {"x", "y"}, {"D"}, {{1.0, 0.0}, {0.5, 0.5}}));
  bn.evidence["D"] = std::string("a");
  bn.evidence["E"] = std::string("y");  // impossible given D=a
  DiscretizedBn d = compile(bn, {});
  InferenceResult res = run_inference(d);
  CHECK_FALSE(res.consistent);
  BruteForceResult bf = brute_force_joint(d);
  CHECK_FALSE(bf.consistent);
}

TEST_CASE("selector cliques shrink from linear to constant under stacking") {
  for (std::size_t n = 3; n <= 7; ++n) {
    CAPTURE(n);
    BayesianNetwork v = make_v_structure(n);
    CHECK(metrics(v).tree_width == static_cast<int>(n) + 1);
    auto [rewritten, rep] = sf_bf(v);
    int after = metrics(rewritten).tree_width;
    CHECK(after == 3);
  }
}

TEST_CASE("rewrites never increase the tree width of a fixture") {
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    BayesianNetwork bn = make_fixture(name);
    int before = metrics(bn).tree_width;
    auto [rewritten, rep] = sf_bf(bn);
    int after = metrics(rewritten).tree_width;
    CHECK(after <= before);
  }
}

TEST_CASE("structural metrics price cluster tables when cards are given") {
  BayesianNetwork bn = sprinkler_net();
  DiscretizedBn d = compile(bn, {});
  MarkovNet mn = moralize(d);
  JtPlan plan = plan_junction_tree(mn, &d.card);
  // One cluster over all three binary variables.
  CHECK(plan.total_entries == 8);
  CHECK(plan.max_potential_size == 3);
}

TEST_CASE("the brute-force joint refuses oversized state spaces") {
  BayesianNetwork bn;
  bn.add(expr_node("X", "Normal(0, 1)"));
  bn.add(expr_node("Y", "Normal(X, 1)"));
  PartitionMap parts;
  parts["X"] = uniform_partition("X", -5, 5, 1000);
  parts["Y"] = uniform_partition("Y", -10, 10, 1000);
  DiscretizedBn d = compile(bn, parts);
  CHECK_THROWS_AS(brute_force_joint(d, 100), std::invalid_argument);
}

TEST_CASE("disconnected networks still form one spanning tree") {
  BayesianNetwork bn;
  bn.add(discrete_node("A", {"x", "y"}, {0.5, 0.5}));
  bn.add(discrete_node("B", {"x", "y"}, {0.25, 0.75}));
  DiscretizedBn d = compile(bn, {});
  MarkovNet mn = moralize(d);
  JtPlan plan = plan_junction_tree(mn);
  CHECK(plan.clusters.size() == 2);
  CHECK(plan.edges.size() == 1);  // zero-weight link keeps it a tree
  InferenceResult res = run_inference(d);
  CHECK(res.marginals.at("A")[0] == doctest::Approx(0.5));
  CHECK(res.marginals.at("B")[1] == doctest::Approx(0.75));
}
