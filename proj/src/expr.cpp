#include "hbnf/expr.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace hbnf {

Expr Expr::var(NodeId id) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->id = std::move(id);
  n->value = 0;
  n->op = BinaryOp::Add;
  return Expr(std::move(n));
}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = value;
  n->op = BinaryOp::Add;
  return Expr(std::move(n));
}

Expr Expr::op(BinaryOp o, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Op;
  n->value = 0;
  n->op = o;
  n->left = std::move(lhs);
  n->right = std::move(rhs);
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
const NodeId& Expr::var_id() const { return node_->id; }
double Expr::const_value() const { return node_->value; }
BinaryOp Expr::binary_op() const { return node_->op; }
const Expr& Expr::lhs() const { return node_->left; }
const Expr& Expr::rhs() const { return node_->right; }

bool Expr::same_structure(const Expr& other) const {
  if (node_ == other.node_) return true;
  if (!node_ || !other.node_) return false;
  if (node_->kind != other.node_->kind) return false;
  switch (node_->kind) {
    case Kind::Var:
      return node_->id == other.node_->id;
    case Kind::Const:
      return node_->value == other.node_->value;
    case Kind::Op:
      return node_->op == other.node_->op &&
             node_->left.same_structure(other.node_->left) &&
             node_->right.same_structure(other.node_->right);
  }
  return false;
}

double Expr::eval(const std::map<NodeId, double>& env) const {
  switch (node_->kind) {
    case Kind::Var: {
      auto it = env.find(node_->id);
      if (it == env.end())
        throw std::logic_error("unbound variable in expression: " + node_->id);
      return it->second;
    }
    case Kind::Const:
      return node_->value;
    case Kind::Op: {
      double a = node_->left.eval(env);
      double b = node_->right.eval(env);
      switch (node_->op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
        case BinaryOp::Pow: return std::pow(a, b);
      }
    }
  }
  return 0;
}

void Expr::collect_vars(std::vector<NodeId>& out) const {
  if (!node_) return;
  switch (node_->kind) {
    case Kind::Var:
      if (std::find(out.begin(), out.end(), node_->id) == out.end())
        out.push_back(node_->id);
      break;
    case Kind::Const:
      break;
    case Kind::Op:
      node_->left.collect_vars(out);
      node_->right.collect_vars(out);
      break;
  }
}

std::vector<NodeId> Expr::vars() const {
  std::vector<NodeId> out;
  collect_vars(out);
  return out;
}

int Expr::var_count() const { return static_cast<int>(vars().size()); }

SubstituteResult substitute(const Expr& e, const NodeId& var, const Expr& replacement) {
  switch (e.kind()) {
    case Expr::Kind::Var:
      if (e.var_id() == var) return {replacement, true};
      return {e, false};
    case Expr::Kind::Const:
      return {e, false};
    case Expr::Kind::Op: {
      auto l = substitute(e.lhs(), var, replacement);
      auto r = substitute(e.rhs(), var, replacement);
      if (!l.replaced && !r.replaced) return {e, false};
      return {Expr::op(e.binary_op(), l.expr, r.expr), true};
    }
  }
  return {e, false};
}

const char* dist_kind_name(DistKind k) {
  switch (k) {
    case DistKind::Normal: return "Normal";
    case DistKind::Arithmetic: return "Arithmetic";
    case DistKind::Uniform: return "Uniform";
    case DistKind::Student: return "Student";
  }
  return "?";
}

ParsedCpd make_cpd(DistKind head, std::vector<Expr> args) {
  ParsedCpd out;
  out.head = head;
  out.args = std::move(args);
  for (const auto& a : out.args) a.collect_vars(out.free_vars);
  return out;
}

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  double num = 0;
  std::string text;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { cur_ = scan(); }

  const Token& peek() const { return cur_; }
  Token take() {
    Token t = cur_;
    cur_ = scan();
    return t;
  }

 private:
  Token scan() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    std::size_t p = i_;
    if (i_ >= src_.size()) return {Tok::End, 0, "", p};
    char c = src_[i_];
    switch (c) {
      case '+': ++i_; return {Tok::Plus, 0, "+", p};
      case '-': ++i_; return {Tok::Minus, 0, "-", p};
      case '*': ++i_; return {Tok::Star, 0, "*", p};
      case '/': ++i_; return {Tok::Slash, 0, "/", p};
      case '^': ++i_; return {Tok::Caret, 0, "^", p};
      case '(': ++i_; return {Tok::LParen, 0, "(", p};
      case ')': ++i_; return {Tok::RParen, 0, ")", p};
      case ',': ++i_; return {Tok::Comma, 0, ",", p};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return number(p);
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      Token t{Tok::Ident, 0, std::string(src_.substr(i_, j - i_)), p};
      i_ = j;
      return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", p);
  }

  Token number(std::size_t p) {
    std::size_t j = i_;
    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    if (j < src_.size() && src_[j] == '.') {
      ++j;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    }
    // Exponent only when followed by a digit (optionally signed), so a
    // variable right after a literal still lexes as implicit multiplication.
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
        ++k;
        while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
        j = k;
      }
    }
    double v = 0;
    auto res = std::from_chars(src_.data() + i_, src_.data() + j, v);
    if (res.ec != std::errc())
      throw ParseError("malformed number literal", p);
    Token t{Tok::Number, v, std::string(src_.substr(i_, j - i_)), p};
    i_ = j;
    return t;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Token cur_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  ParsedCpd parse_top() {
    ParsedCpd out;
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident) {
      DistKind head;
      if (head_of(t.text, head)) {
        Token name = lex_.take();
        if (lex_.peek().kind != Tok::LParen)
          throw ParseError("expected '(' after distribution head", lex_.peek().pos);
        lex_.take();
        std::vector<Expr> args;
        args.push_back(expression());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.take();
          args.push_back(expression());
        }
        expect(Tok::RParen, "expected ')' or ','");
        expect(Tok::End, "trailing input after expression");
        check_arity(head, args.size(), name.pos);
        return make_cpd(head, std::move(args));
      }
    }
    Expr e = expression();
    expect(Tok::End, "trailing input after expression");
    return make_cpd(DistKind::Arithmetic, {std::move(e)});
  }

 private:
  static bool head_of(const std::string& s, DistKind& out) {
    if (s == "Normal") { out = DistKind::Normal; return true; }
    if (s == "Arithmetic") { out = DistKind::Arithmetic; return true; }
    if (s == "Uniform") { out = DistKind::Uniform; return true; }
    if (s == "Student") { out = DistKind::Student; return true; }
    return false;
  }

  static void check_arity(DistKind head, std::size_t n, std::size_t pos) {
    std::size_t want = (head == DistKind::Normal || head == DistKind::Uniform) ? 2 : 1;
    if (n != want)
      throw ParseError(std::string(dist_kind_name(head)) + " takes " +
                           std::to_string(want) + " argument(s), got " + std::to_string(n),
                       pos);
  }

  void expect(Tok k, const char* msg) {
    if (lex_.peek().kind != k) throw ParseError(msg, lex_.peek().pos);
    lex_.take();
  }

  Expr expression() {
    Expr e = term();
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      Token t = lex_.take();
      Expr r = term();
      e = Expr::op(t.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub, e, r);
    }
    return e;
  }

  Expr term() {
    Expr e = power();
    while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
      Token t = lex_.take();
      Expr r = power();
      e = Expr::op(t.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div, e, r);
    }
    return e;
  }

  Expr power() {
    Expr e = unary();
    if (lex_.peek().kind == Tok::Caret) {
      lex_.take();
      Expr r = power();  // right associative
      e = Expr::op(BinaryOp::Pow, e, r);
    }
    return e;
  }

  Expr unary() {
    if (lex_.peek().kind == Tok::Minus) {
      lex_.take();
      Expr e = unary();
      if (e.kind() == Expr::Kind::Const) return Expr::constant(-e.const_value());
      return Expr::op(BinaryOp::Sub, Expr::constant(0), e);
    }
    return primary();
  }

  Expr primary() {
    Token t = lex_.peek();
    switch (t.kind) {
      case Tok::Number: {
        lex_.take();
        Expr c = Expr::constant(t.num);
        // Implicit multiplication between a literal and a variable.
        if (lex_.peek().kind == Tok::Ident) {
          Token v = lex_.take();
          reject_call(v);
          return Expr::op(BinaryOp::Mul, c, Expr::var(v.text));
        }
        return c;
      }
      case Tok::Ident: {
        lex_.take();
        reject_call(t);
        return Expr::var(t.text);
      }
      case Tok::LParen: {
        lex_.take();
        Expr e = expression();
        expect(Tok::RParen, "expected ')'");
        return e;
      }
      default:
        throw ParseError("expected expression", t.pos);
    }
  }

  void reject_call(const Token& ident) {
    if (lex_.peek().kind == Tok::LParen)
      throw ParseError("unknown distribution head '" + ident.text + "'", ident.pos);
  }

  Lexer lex_;
};

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int precedence(BinaryOp o) {
  switch (o) {
    case BinaryOp::Add:
    case BinaryOp::Sub: return 1;
    case BinaryOp::Mul:
    case BinaryOp::Div: return 2;
    case BinaryOp::Pow: return 3;
  }
  return 0;
}

const char* op_text(BinaryOp o) {
  switch (o) {
    case BinaryOp::Add: return " + ";
    case BinaryOp::Sub: return " - ";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return " / ";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

void print_rec(const Expr& e, std::string& out, bool is_operand) {
  switch (e.kind()) {
    case Expr::Kind::Var:
      out += e.var_id();
      return;
    case Expr::Kind::Const: {
      double v = e.const_value();
      if (is_operand && std::signbit(v)) {
        out += '(';
        out += format_number(v);
        out += ')';
      } else {
        out += format_number(v);
      }
      return;
    }
    case Expr::Kind::Op: {
      int p = precedence(e.binary_op());
      bool right_assoc = e.binary_op() == BinaryOp::Pow;
      auto child = [&](const Expr& c, bool right_side) {
        bool paren = false;
        if (c.kind() == Expr::Kind::Op) {
          int cp = precedence(c.binary_op());
          paren = cp < p || (cp == p && (right_assoc ? !right_side : right_side));
        }
        if (paren) out += '(';
        print_rec(c, out, true);
        if (paren) out += ')';
      };
      child(e.lhs(), false);
      out += op_text(e.binary_op());
      child(e.rhs(), true);
      return;
    }
  }
}

}  // namespace

ParsedCpd parse_cpd(std::string_view text) {
  Parser p(text);
  return p.parse_top();
}

std::string print_expr(const Expr& e) {
  std::string out;
  print_rec(e, out, false);
  return out;
}

std::string print_cpd(const ParsedCpd& cpd) {
  if (cpd.head == DistKind::Arithmetic) return print_expr(cpd.args.at(0));
  std::string out = dist_kind_name(cpd.head);
  out += '(';
  for (std::size_t i = 0; i < cpd.args.size(); ++i) {
    if (i) out += ", ";
    out += print_expr(cpd.args[i]);
  }
  out += ')';
  return out;
}

}  // namespace hbnf
