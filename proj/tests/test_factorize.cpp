#include "doctest.h"

#include "hbnf/factorize.hpp"
#include "hbnf/fixtures.hpp"
#include "hbnf/model.hpp"
#include "hbnf/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

using namespace hbnf;

namespace {

std::string case_text(const BayesianNetwork& bn, const NodeId& id, std::size_t j) {
  const auto& p = std::get<PartitionedCpd>(bn.at(id).cpd);
  REQUIRE(j < p.cases.size());
  REQUIRE(p.cases[j].has_value());
  return print_cpd(*p.cases[j]);
}

std::string expr_text(const BayesianNetwork& bn, const NodeId& id) {
  return print_cpd(std::get<ExpressionCpd>(bn.at(id).cpd).parsed);
}

}  // namespace

TEST_CASE("pairwise mixing coefficients reproduce prefix-mass ratios") {
  StackPlan plan = alpha_weights({0.1, 0.2, 0.3, 0.4});
  REQUIRE(plan.alphas.size() == 3);
  CHECK(std::abs(plan.alphas[0] - 1.0 / 3.0) <= 1e-15);
  CHECK(std::abs(plan.alphas[1] - 1.0 / 2.0) <= 1e-15);
  CHECK(std::abs(plan.alphas[2] - 3.0 / 5.0) <= 1e-15);

  // Leading zero weights produce zero coefficients, not NaN.
  StackPlan z = alpha_weights({0.0, 0.0, 0.5, 0.5});
  CHECK(z.alphas[0] == 0.0);
  CHECK(z.alphas[1] == 0.0);
  CHECK(z.alphas[2] == 0.5);

  CHECK_THROWS_AS(alpha_weights({}), std::invalid_argument);
  CHECK_THROWS_AS(alpha_weights({0.5, -0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(alpha_weights({0.5, 0.6}), std::invalid_argument);
}

TEST_CASE("stacked evaluation equals the direct mixture") {
  std::mt19937_64 rng(base_seed());
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_real_distribution<double> mu(-5.0, 5.0);
  std::uniform_real_distribution<double> sigma(0.2, 3.0);
  std::uniform_int_distribution<int> ncomp(2, 8);
  std::uniform_real_distribution<double> point(-10.0, 10.0);

  for (int trial = 0; trial < 25; ++trial) {
    int n = ncomp(rng);
    MixtureSpec spec;
    double total = 0;
    for (int i = 0; i < n; ++i) {
      spec.weights.push_back(unit(rng));
      total += spec.weights.back();
    }
    for (double& w : spec.weights) w /= total;
    for (int i = 0; i < n; ++i) {
      double m = mu(rng), s = sigma(rng);
      spec.components.push_back([m, s](double x) {
        double z = (x - m) / s;
        return std::exp(-0.5 * z * z) / (s * std::sqrt(8.0 * std::atan(1.0)));
      });
    }
    for (int k = 0; k < 20; ++k) {
      double x = point(rng);
      CHECK(std::abs(stack_mixture(spec, x) - direct_mixture(spec, x)) <= 1e-12);
    }
  }
}

TEST_CASE("expression splitting rewrites a deterministic chain") {
  BayesianNetwork fig1a = make_fixture("fig1a");
  auto [out, rep] = binary_factorize(fig1a);

  // Exactly the three intermediates, in discovery order.
  REQUIRE(rep.created.size() == 3);
  CHECK(rep.created[0].id == "X3_E0");
  CHECK(rep.created[0].role == 'E');
  CHECK(rep.created[0].source == "X3");
  CHECK(rep.created[1].id == "X4_E0");
  CHECK(rep.created[2].id == "X4_E1");

  // New nodes append after the originals in creation order.
  REQUIRE(out.size() == 8);
  CHECK(out.nodes()[5].id == "X3_E0");
  CHECK(out.nodes()[6].id == "X4_E0");
  CHECK(out.nodes()[7].id == "X4_E1");

  CHECK(expr_text(out, "X3_E0") == "X0 + X1");
  CHECK(expr_text(out, "X3") == "X3_E0 + X2");
  CHECK(expr_text(out, "X4_E0") == "X0 + X1");
  CHECK(expr_text(out, "X4_E1") == "X4_E0 + X2");
  CHECK(expr_text(out, "X4") == "X4_E1 + X3");
  CHECK(expr_text(out, "X2") == "X0 + X1");  // already within the bound

  CHECK(rep.max_cpd_size_before == 5);
  CHECK(rep.max_cpd_size_after == 3);
  CHECK(max_cpd_size(out) == 3);
  CHECK(max_continuous_parents(out) == 2);

  // The chain computes the same function of the original parents.
  std::map<NodeId, double> env{{"X0", 1.5}, {"X1", -2.0}, {"X2", 4.0}, {"X3", 0.25}};
  for (const NodeId& id : {"X3_E0", "X4_E0", "X4_E1"})
    env[id] = std::get<ExpressionCpd>(out.at(id).cpd).parsed.args[0].eval(env);
  double x4 = std::get<ExpressionCpd>(out.at("X4").cpd).parsed.args[0].eval(env);
  CHECK(x4 == 1.5 - 2.0 + 4.0 + 0.25);

  // Idempotent: a second pass creates nothing.
  auto [again, rep2] = binary_factorize(out);
  CHECK(rep2.created.empty());
  CHECK(again.size() == out.size());
}

TEST_CASE("expression splitting drives partitioned cases to one variable") {
  BayesianNetwork fig2 = make_fixture("fig2");
  auto [out, rep] = binary_factorize(fig2);

  REQUIRE(rep.created.size() == 2);
  CHECK(rep.created[0].id == "C_E0");
  CHECK(rep.created[1].id == "C_E1");
  CHECK(expr_text(out, "C_E0") == "X1 + X2");
  CHECK(expr_text(out, "C_E1") == "C_E0 + X3");
  CHECK(case_text(out, "C", 0) == "Normal(C_E1, 1000)");
  CHECK(case_text(out, "C", 1) == "Normal(X2, 1000)");
  CHECK(case_text(out, "C", 3) == "Normal(X4, 1000)");
}

TEST_CASE("splitting respects nested structure") {
  BayesianNetwork bn;
  for (const char* id : {"A", "B", "C3", "D4"}) {
    Node n;
    n.id = id;
    n.kind = NodeKind::Continuous;
    n.cpd = ExpressionCpd{parse_cpd("Normal(0, 1)")};
    bn.add(std::move(n));
  }
  Node y;
  y.id = "Y";
  y.kind = NodeKind::Continuous;
  y.cpd = ExpressionCpd{parse_cpd("A*(B + C3) + D4")};
  bn.add(std::move(y));

  auto [out, rep] = binary_factorize(bn);
  // Innermost two-variable group goes first.
  CHECK(expr_text(out, "Y_E0") == "B + C3");
  CHECK(expr_text(out, "Y_E1") == "A*Y_E0");
  CHECK(expr_text(out, "Y") == "Y_E1 + D4");
}

TEST_CASE("generated names avoid existing ids") {
  BayesianNetwork bn;
  for (const char* id : {"A", "B", "C3"}) {
    Node n;
    n.id = id;
    n.kind = NodeKind::Continuous;
    n.cpd = ExpressionCpd{parse_cpd("Normal(0, 1)")};
    bn.add(std::move(n));
  }
  Node taken;
  taken.id = "Y_E0";
  taken.kind = NodeKind::Continuous;
  taken.cpd = ExpressionCpd{parse_cpd("Normal(0, 1)")};
  bn.add(std::move(taken));
  Node y;
  y.id = "Y";
  y.kind = NodeKind::Continuous;
  y.cpd = ExpressionCpd{parse_cpd("A + B + C3")};
  bn.add(std::move(y));

  auto [out, rep] = binary_factorize(bn);
  REQUIRE(rep.created.size() == 1);
  CHECK(rep.created[0].id == "Y_E0_r1");
  CHECK(expr_text(out, "Y") == "Y_E0_r1 + C3");
}

TEST_CASE("stacking rebuilds a wide mixture as a chain") {
  auto [split, rep0] = binary_factorize(make_fixture("fig2"));
  auto [out, rep] = stacking_factorize(split);

  REQUIRE(rep.created.size() == 2);
  CHECK(rep.created[0].id == "C_F1");
  CHECK(rep.created[0].role == 'F');
  CHECK(rep.created[1].id == "C_F2");

  // Every piece keeps the original control.
  for (const NodeId& id : {"C_F1", "C_F2", "C"}) {
    const auto& p = std::get<PartitionedCpd>(out.at(id).cpd);
    CHECK(p.control == std::vector<NodeId>{"D"});
    CHECK(p.cases.size() == 4);
  }
  CHECK(case_text(out, "C_F1", 0) == "Normal(C_E1, 1000)");
  CHECK(case_text(out, "C_F1", 1) == "Normal(X2, 1000)");
  CHECK(case_text(out, "C_F1", 2) == "Normal(X2, 1000)");
  CHECK(case_text(out, "C_F2", 0) == "C_F1");
  CHECK(case_text(out, "C_F2", 1) == "C_F1");
  CHECK(case_text(out, "C_F2", 2) == "Normal(X3, 1000)");
  CHECK(case_text(out, "C", 0) == "C_F2");
  CHECK(case_text(out, "C", 2) == "C_F2");
  CHECK(case_text(out, "C", 3) == "Normal(X4, 1000)");

  // The control stays a parent of the child in this flavor.
  auto parents = out.parents_of("C");
  CHECK(std::find(parents.begin(), parents.end(), "D") != parents.end());

  CHECK(max_cpd_size(out) == 4);
  CHECK(max_continuous_parents(out) == 2);

  // Fixpoint: stacking its own output changes nothing.
  auto [again, rep2] = stacking_factorize(out);
  CHECK(rep2.created.empty());
}

TEST_CASE("stacking is skipped when already narrow") {
  SUBCASE("two control states") {
    BayesianNetwork bn;
    Node d;
    d.id = "D";
    d.kind = NodeKind::Discrete;
    d.states = {"a", "b"};
    d.cpd = TableCpd{{}, {{0.5, 0.5}}};
    bn.add(std::move(d));
    for (const char* id : {"X1", "X2"}) {
      Node n;
      n.id = id;
      n.kind = NodeKind::Continuous;
      n.cpd = ExpressionCpd{parse_cpd("Normal(0, 1)")};
      bn.add(std::move(n));
    }
    Node c;
    c.id = "C";
    c.kind = NodeKind::Continuous;
    PartitionedCpd p;
    p.control = {"D"};
    p.cases.emplace_back(parse_cpd("X1"));
    p.cases.emplace_back(parse_cpd("X2"));
    c.cpd = std::move(p);
    bn.add(std::move(c));

    auto [out, rep] = stacking_factorize(bn);
    CHECK(rep.created.empty());
    CHECK(out.size() == bn.size());
  }
  SUBCASE("two distinct continuous parents across many cases") {
    BayesianNetwork bn;
    Node d;
    d.id = "D";
    d.kind = NodeKind::Discrete;
    d.states = {"a", "b", "c", "d"};
    d.cpd = TableCpd{{}, {{0.25, 0.25, 0.25, 0.25}}};
    bn.add(std::move(d));
    for (const char* id : {"X1", "X2"}) {
      Node n;
      n.id = id;
      n.kind = NodeKind::Continuous;
      n.cpd = ExpressionCpd{parse_cpd("Normal(0, 1)")};
      bn.add(std::move(n));
    }
    Node c;
    c.id = "C";
    c.kind = NodeKind::Continuous;
    PartitionedCpd p;
    p.control = {"D"};
    for (const char* t : {"X1", "X2", "X1", "Normal(X2, 1)"}) p.cases.emplace_back(parse_cpd(t));
    c.cpd = std::move(p);
    bn.add(std::move(c));

    auto [out, rep] = stacking_factorize(bn);
    CHECK(rep.created.empty());
  }
}

TEST_CASE("stacking refuses unfactorized cases") {
  BayesianNetwork fig2 = make_fixture("fig2");  // case 0 references three parents
  CHECK_THROWS_WITH_AS(auto r = stacking_factorize(fig2),
                       doctest::Contains("apply binary factorization first"),
                       FactorizeError);
}

TEST_CASE("indicator flavor reroutes the control through binary gates") {
  auto [split, rep0] = binary_factorize(make_fixture("fig2"));
  auto [out, rep] = stacking_factorize(split, SfMode::Explicit);

  // Three gates and two stacked intermediates for a four-state control.
  std::vector<NodeId> gates, stacks;
  for (const auto& c : rep.created)
    (c.role == 'B' ? gates : stacks).push_back(c.id);
  CHECK(gates == std::vector<NodeId>{"C_B1", "C_B2", "C_B3"});
  CHECK(stacks == std::vector<NodeId>{"C_F1", "C_F2"});

  // Gate k is true exactly on the first k control states.
  const auto& b2 = std::get<TableCpd>(out.at("C_B2").cpd);
  CHECK(b2.parents == std::vector<NodeId>{"D"});
  REQUIRE(b2.rows.size() == 4);
  CHECK(b2.rows[0] == std::vector<double>{1.0, 0.0});
  CHECK(b2.rows[1] == std::vector<double>{1.0, 0.0});
  CHECK(b2.rows[2] == std::vector<double>{0.0, 1.0});
  CHECK(b2.rows[3] == std::vector<double>{0.0, 1.0});
  CHECK(out.at("C_B1").states == std::vector<std::string>{"True", "False"});

  // Each stacked piece answers to one gate; the child answers to the last.
  CHECK(std::get<PartitionedCpd>(out.at("C_F1").cpd).control == std::vector<NodeId>{"C_B1"});
  CHECK(std::get<PartitionedCpd>(out.at("C_F2").cpd).control == std::vector<NodeId>{"C_B2"});
  CHECK(std::get<PartitionedCpd>(out.at("C").cpd).control == std::vector<NodeId>{"C_B3"});
  CHECK(case_text(out, "C_F1", 0) == "Normal(C_E1, 1000)");
  CHECK(case_text(out, "C_F1", 1) == "Normal(X2, 1000)");
  CHECK(case_text(out, "C", 0) == "C_F2");
  CHECK(case_text(out, "C", 1) == "Normal(X4, 1000)");

  // The original control no longer feeds the child directly.
  auto parents = out.parents_of("C");
  CHECK(std::find(parents.begin(), parents.end(), "D") == parents.end());
  CHECK(validate(out).empty());
}

TEST_CASE("combined rewrite merges the two reports") {
  auto [out, rep] = sf_bf(make_fixture("fig2"));

  CHECK(rep.max_cpd_size_before == 6);
  CHECK(rep.max_cpd_size_after == 4);
  CHECK(rep.max_continuous_parents_before == 4);
  CHECK(rep.max_continuous_parents_after == 2);

  REQUIRE(rep.created.size() == 4);
  CHECK(rep.created[0].id == "C_E0");
  CHECK(rep.created[1].id == "C_E1");
  CHECK(rep.created[2].id == "C_F1");
  CHECK(rep.created[3].id == "C_F2");

  // C was rewritten by both passes; the merged entry chains them.
  REQUIRE(rep.rewritten.size() == 1);
  CHECK(rep.rewritten[0].node == "C");
  CHECK(rep.rewritten[0].size_before == 6);
  CHECK(rep.rewritten[0].size_after == 4);

  REQUIRE(rep.partitions.size() == 1);
  CHECK(rep.partitions[0].node == "C");
  CHECK(rep.partitions[0].components == 4);
  CHECK(rep.partitions[0].splittable_parents == 3);

  CHECK(validate(out).empty());

  // The bundled wide-mixture fixture is exactly this rewrite.
  BayesianNetwork fig6 = make_fixture("fig6");
  REQUIRE(fig6.size() == out.size());
  for (std::size_t i = 0; i < fig6.size(); ++i)
    CHECK(fig6.nodes()[i].id == out.nodes()[i].id);
}

TEST_CASE("every fixture validates cleanly") {
  for (const std::string& name : fixture_names()) {
    CAPTURE(name);
    BayesianNetwork bn = make_fixture(name);
    CHECK(validate(bn).empty());
    auto order = topo_order(bn);
    CHECK(order.has_value());
  }
  CHECK_THROWS_AS(make_fixture("nope"), std::invalid_argument);
}

TEST_CASE("randomized mixtures validate and stay single-variable per case") {
  std::mt19937_64 seeder(base_seed());
  for (int i = 0; i < 20; ++i) {
    std::uint64_t seed = seeder();
    CAPTURE(seed);
    BayesianNetwork bn = random_partitioned_net(seed);
    CHECK(validate(bn).empty());
    const auto& p = std::get<PartitionedCpd>(bn.at("C").cpd);
    for (const auto& c : p.cases) {
      REQUIRE(c.has_value());
      CHECK(c->free_vars.size() <= 1);
    }
    // Same seed, same network.
    BayesianNetwork again = random_partitioned_net(seed);
    CHECK(serialize_model({bn, {}}) == serialize_model({again, {}}));
  }
}
