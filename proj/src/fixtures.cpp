#include "hbnf/fixtures.hpp"

#include "hbnf/factorize.hpp"

#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace hbnf {

namespace {

Node discrete_node(NodeId id, std::vector<std::string> states, std::vector<double> prior) {
  Node nd;
  nd.id = std::move(id);
  nd.kind = NodeKind::Discrete;
  nd.states = std::move(states);
  TableCpd table;
  table.rows.push_back(std::move(prior));
  nd.cpd = std::move(table);
  return nd;
}

Node discrete_uniform(NodeId id, std::size_t n) {
  std::vector<std::string> states;
  for (std::size_t i = 1; i <= n; ++i) states.push_back("d" + std::to_string(i));
  std::vector<double> prior(n, 1.0 / static_cast<double>(n));
  return discrete_node(std::move(id), std::move(states), std::move(prior));
}

Node expr_node(NodeId id, const std::string& text) {
  Node nd;
  nd.id = std::move(id);
  nd.kind = NodeKind::Continuous;
  nd.cpd = ExpressionCpd{parse_cpd(text)};
  return nd;
}

Node partitioned_node(NodeId id, std::vector<NodeId> control,
                      const std::vector<std::string>& case_texts) {
  Node nd;
  nd.id = std::move(id);
  nd.kind = NodeKind::Continuous;
  PartitionedCpd p;
  p.control = std::move(control);
  for (const std::string& text : case_texts) p.cases.emplace_back(parse_cpd(text));
  nd.cpd = std::move(p);
  return nd;
}

BayesianNetwork fig1a() {
  BayesianNetwork bn;
  bn.add(expr_node("X0", "Normal(0, 1)"));
  bn.add(expr_node("X1", "X0"));
  bn.add(expr_node("X2", "X0 + X1"));
  bn.add(expr_node("X3", "X0 + X1 + X2"));
  bn.add(expr_node("X4", "X0 + X1 + X2 + X3"));
  return bn;
}

BayesianNetwork fig2() {
  BayesianNetwork bn;
  bn.add(discrete_uniform("D", 4));
  for (int i = 1; i <= 4; ++i)
    bn.add(expr_node("X" + std::to_string(i), std::to_string(i * 10)));
  bn.add(partitioned_node("C", {"D"},
                          {"Normal(X1 + X2 + X3, 1000)", "Normal(X2, 1000)",
                           "Normal(X3, 1000)", "Normal(X4, 1000)"}));
  return bn;
}

BayesianNetwork fig4_analog() {
  BayesianNetwork bn;
  bn.add(discrete_uniform("D", 3));
  for (int i = 1; i <= 3; ++i) {
    Node x = expr_node("X" + std::to_string(i),
                       "Normal(" + std::to_string(i * 10) + ", 100)");
    Interval r;
    r.lo = i * 10 - 100;
    r.hi = i * 10 + 100;
    x.declared_range = r;
    bn.add(std::move(x));
  }
  bn.add(partitioned_node("C", {"D"}, {"X1", "X2", "X3"}));
  return bn;
}

BayesianNetwork fig7(int k) {
  BayesianNetwork bn;
  switch (k) {
    case 1:
      bn.add(discrete_uniform("D", 3));
      bn.add(expr_node("X1", "Normal(0, 1)"));
      bn.add(expr_node("X2", "Normal(0, 1)"));
      bn.add(expr_node("X3", "X1 + X2"));
      bn.add(expr_node("X4", "X2 + X3"));
      bn.add(partitioned_node("C", {"D"}, {"X1", "X4", "X3"}));
      break;
    case 2:
      bn.add(discrete_uniform("D", 2));
      bn.add(expr_node("X1", "Normal(0, 1)"));
      bn.add(expr_node("X2", "Normal(0, 1)"));
      bn.add(expr_node("X3", "X1 + X2"));
      bn.add(expr_node("X4", "Normal(0, 1)"));
      bn.add(partitioned_node("C", {"D"}, {"X3", "Normal(X1 + X4, 1)"}));
      break;
    case 3:
      bn.add(discrete_uniform("D", 3));
      bn.add(expr_node("X1", "Normal(0, 1)"));
      bn.add(expr_node("X2", "Normal(0, 1)"));
      bn.add(expr_node("X3", "X1 + X2"));
      bn.add(expr_node("X4", "Normal(0, 1)"));
      bn.add(expr_node("X5", "X3 + X4"));
      bn.add(partitioned_node("C", {"D"}, {"X1", "Normal(X3 + X5, 1)", "X5"}));
      break;
    case 4:
      bn.add(discrete_uniform("D", 5));
      for (int i = 1; i <= 5; ++i)
        bn.add(expr_node("X" + std::to_string(i), "Normal(0, 1)"));
      bn.add(partitioned_node("C", {"D"}, {"X1", "X2", "X3", "X4", "X5"}));
      break;
    case 5:
      bn.add(discrete_uniform("D", 5));
      for (int i = 1; i <= 4; ++i)
        bn.add(expr_node("X" + std::to_string(i), "Normal(0, 1)"));
      bn.add(expr_node("X5", "X3 + X4"));
      bn.add(partitioned_node("C", {"D"}, {"X1", "X2", "X3", "X4", "X5"}));
      break;
    case 6:
      bn.add(discrete_uniform("D", 5));
      for (int i = 1; i <= 5; ++i)
        bn.add(expr_node("X" + std::to_string(i), "Normal(0, 1)"));
      bn.add(partitioned_node(
          "C", {"D"}, {"Normal(X1 + X2 + X3, 1000)", "X2", "X3", "X4", "X5"}));
      break;
    default:
      throw std::invalid_argument("benchmark case id must be 1..6");
  }
  return bn;
}

}  // namespace

std::vector<std::string> fixture_names() {
  std::vector<std::string> names = {"fig1a", "fig1b", "fig2", "fig4_analog", "fig6"};
  for (int k = 1; k <= 6; ++k) names.push_back("fig7_" + std::to_string(k));
  return names;
}

BayesianNetwork make_fixture(const std::string& name) {
  if (name == "fig1a") return fig1a();
  if (name == "fig1b") return binary_factorize(fig1a()).first;
  if (name == "fig2") return fig2();
  if (name == "fig4_analog") return fig4_analog();
  if (name == "fig6") return sf_bf(fig2()).first;
  if (name.rfind("fig7_", 0) == 0 && name.size() == 6 && name[5] >= '1' && name[5] <= '6')
    return fig7(name[5] - '0');
  throw std::invalid_argument("unknown fixture: " + name);
}

BayesianNetwork make_v_structure(std::size_t n, const std::vector<double>& weights) {
  if (n == 0) throw std::invalid_argument("selector needs at least one state");
  if (!weights.empty() && weights.size() != n)
    throw std::invalid_argument("selector prior needs one weight per state");

  BayesianNetwork bn;
  if (weights.empty()) {
    bn.add(discrete_uniform("D", n));
  } else {
    std::vector<std::string> states;
    for (std::size_t i = 1; i <= n; ++i) states.push_back("d" + std::to_string(i));
    bn.add(discrete_node("D", std::move(states), weights));
  }
  std::vector<std::string> cases;
  for (std::size_t i = 1; i <= n; ++i) {
    std::string x = "X" + std::to_string(i);
    bn.add(expr_node(x, "Normal(" + std::to_string(i * 10) + ", 100)"));
    cases.push_back(x);
  }
  bn.add(partitioned_node("C", {"D"}, cases));
  return bn;
}

BayesianNetwork random_partitioned_net(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> state_count(3, 5);
  std::uniform_int_distribution<int> root_count(2, 4);
  std::uniform_real_distribution<double> prior_mass(0.05, 1.0);
  std::uniform_real_distribution<double> root_mean(-20.0, 20.0);
  std::uniform_real_distribution<double> root_var(1.0, 25.0);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  std::uniform_real_distribution<double> case_var(1.0, 100.0);
  std::uniform_real_distribution<double> half_width(1.0, 10.0);

  int n = state_count(rng);
  int roots = root_count(rng);

  BayesianNetwork bn;
  std::vector<std::string> states;
  std::vector<double> prior;
  double total = 0;
  for (int i = 1; i <= n; ++i) {
    states.push_back("d" + std::to_string(i));
    prior.push_back(prior_mass(rng));
    total += prior.back();
  }
  for (double& w : prior) w /= total;
  bn.add(discrete_node("D", std::move(states), std::move(prior)));

  std::vector<NodeId> root_ids;
  for (int i = 1; i <= roots; ++i) {
    NodeId id = "X" + std::to_string(i);
    Node nd;
    nd.id = id;
    nd.kind = NodeKind::Continuous;
    nd.cpd = ExpressionCpd{make_cpd(
        DistKind::Normal, {Expr::constant(root_mean(rng)), Expr::constant(root_var(rng))})};
    bn.add(std::move(nd));
    root_ids.push_back(id);
  }

  std::uniform_int_distribution<int> pick_root(0, roots - 1);
  std::uniform_int_distribution<int> pick_form(0, 3);
  PartitionedCpd cpd;
  cpd.control = {"D"};
  for (int j = 0; j < n; ++j) {
    Expr x = Expr::var(root_ids[static_cast<std::size_t>(pick_root(rng))]);
    switch (pick_form(rng)) {
      case 0:
        cpd.cases.emplace_back(make_cpd(DistKind::Arithmetic, {x}));
        break;
      case 1: {
        Expr affine = Expr::op(BinaryOp::Add,
                               Expr::op(BinaryOp::Mul, Expr::constant(scale(rng)), x),
                               Expr::constant(shift(rng)));
        cpd.cases.emplace_back(make_cpd(DistKind::Arithmetic, {affine}));
        break;
      }
      case 2: {
        Expr affine = Expr::op(BinaryOp::Add,
                               Expr::op(BinaryOp::Mul, Expr::constant(scale(rng)), x),
                               Expr::constant(shift(rng)));
        cpd.cases.emplace_back(
            make_cpd(DistKind::Normal, {affine, Expr::constant(case_var(rng))}));
        break;
      }
      default: {
        double c = half_width(rng);
        cpd.cases.emplace_back(
            make_cpd(DistKind::Uniform, {Expr::op(BinaryOp::Sub, x, Expr::constant(c)),
                                         Expr::op(BinaryOp::Add, x, Expr::constant(c))}));
        break;
      }
    }
  }
  Node child;
  child.id = "C";
  child.kind = NodeKind::Continuous;
  child.cpd = std::move(cpd);
  bn.add(std::move(child));
  return bn;
}

std::uint64_t base_seed() {
  if (const char* env = std::getenv("HBNF_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && end && *end == '\0') return static_cast<std::uint64_t>(v);
  }
  return 20250819ULL;
}

}  // namespace hbnf
