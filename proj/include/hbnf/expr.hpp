#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hbnf {

using NodeId = std::string;

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

/**
 * Immutable arithmetic expression tree. Handles share subtrees, so copies
 * are cheap and rewrites build new trees instead of mutating in place.
 */
class Expr {
 public:
  enum class Kind { Var, Const, Op };

  Expr() = default;

  static Expr var(NodeId id);
  static Expr constant(double value);
  static Expr op(BinaryOp o, Expr lhs, Expr rhs);

  bool valid() const { return node_ != nullptr; }
  Kind kind() const;
  const NodeId& var_id() const;
  double const_value() const;
  BinaryOp binary_op() const;
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool same_structure(const Expr& other) const;
  double eval(const std::map<NodeId, double>& env) const;
  void collect_vars(std::vector<NodeId>& out) const;  // first-occurrence order
  std::vector<NodeId> vars() const;
  int var_count() const;  // distinct variables in the subtree

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Kind kind;
  NodeId id;      // Var
  double value;   // Const
  BinaryOp op;    // Op
  Expr left, right;
};

enum class DistKind { Normal, Arithmetic, Uniform, Student };

/// A parsed CPD expression: a distribution head applied to argument trees.
/// Bare arithmetic input parses as Arithmetic with a single argument.
struct ParsedCpd {
  DistKind head = DistKind::Arithmetic;
  std::vector<Expr> args;
  std::vector<NodeId> free_vars;  // first-occurrence order across args
};

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg), offset(off) {}
};

/// Parses a CPD expression. Throws ParseError with the byte offset of the
/// first offending token.
ParsedCpd parse_cpd(std::string_view text);

/// Canonical text form with minimal parentheses; parse(print(e)) is
/// structurally identical to e.
std::string print_expr(const Expr& e);
std::string print_cpd(const ParsedCpd& cpd);

struct SubstituteResult {
  Expr expr;
  bool replaced;
};

/// Replaces every occurrence of a variable with another expression.
SubstituteResult substitute(const Expr& e, const NodeId& var, const Expr& replacement);

ParsedCpd make_cpd(DistKind head, std::vector<Expr> args);
const char* dist_kind_name(DistKind k);

}  // namespace hbnf
