// Small arithmetic expression language for exponent functions and weights.
//
//   expr    ::= term { ("+" | "-") term }
//   term    ::= unary { ("*" | "/") unary }
//   unary   ::= "-" unary | primary
//   primary ::= number | "absx" | "x" digit+ | call | "(" expr ")"
//   call    ::= ("sin" | "cos" | "exp") "(" expr ")"
//             | "pow" "(" expr "," expr ")"
//             | "chi_ball" "(" expr { "," expr } ")"      (N centre coordinates, then radius)
//
// Variables are the coordinates x1..xN and absx = |x|. Expressions are immutable
// once parsed and may be evaluated concurrently.
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpnehari/error.hpp"

namespace mpnehari {

enum class ExprOp {
  Literal,
  Coordinate,  // index = axis
  AbsX,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Sin,
  Cos,
  Exp,
  Pow,
  ChiBall,
};

struct ExprNode {
  ExprOp op = ExprOp::Literal;
  double value = 0.0;    // Literal
  std::size_t index = 0; // Coordinate
  std::vector<std::shared_ptr<const ExprNode>> args;
};

class Expr {
 public:
  Expr() : root_(std::make_shared<ExprNode>()) {}
  explicit Expr(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}

  static Expr literal(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Literal;
    n->value = v;
    return Expr(std::move(n));
  }
  static Expr coordinate(std::size_t axis) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Coordinate;
    n->index = axis;
    return Expr(std::move(n));
  }
  static Expr absx() {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::AbsX;
    return Expr(std::move(n));
  }
  static Expr apply(ExprOp op, std::vector<Expr> args) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    for (auto& a : args) n->args.push_back(a.root_);
    return Expr(std::move(n));
  }

  const ExprNode& root() const { return *root_; }

  double eval(std::span<const double> point) const;

  /// Canonical, fully parenthesised text; parse(print()) reproduces the tree.
  std::string print() const;

  friend bool operator==(const Expr& a, const Expr& b) { return equal(*a.root_, *b.root_); }

 private:
  static bool equal(const ExprNode& a, const ExprNode& b) {
    if (a.op != b.op || a.args.size() != b.args.size()) return false;
    if (a.op == ExprOp::Literal && !(a.value == b.value)) return false;
    if (a.op == ExprOp::Coordinate && a.index != b.index) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
      if (!equal(*a.args[i], *b.args[i])) return false;
    return true;
  }

  std::shared_ptr<const ExprNode> root_;
};

namespace detail {

class ExprParser {
 public:
  ExprParser(std::string_view src, std::size_t dim) : src_(src), dim_(dim) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expression");
    Expr e = expression();
    skip_ws();
    if (pos_ != src_.size()) fail("operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(pos_, expected, std::string(src_));
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("'") + c + "'");
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = Expr::apply(ExprOp::Add, {lhs, term()});
      else if (accept('-'))
        lhs = Expr::apply(ExprOp::Sub, {lhs, term()});
      else
        return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = Expr::apply(ExprOp::Mul, {lhs, unary()});
      else if (accept('/'))
        lhs = Expr::apply(ExprOp::Div, {lhs, unary()});
      else
        return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::apply(ExprOp::Neg, {unary()});
    return primary();
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("number, identifier or '('");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("number, identifier or '('");
  }

  Expr number() {
    double v = 0.0;
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc() || !std::isfinite(v)) fail("number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return Expr::literal(v);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    if (name == "absx") return Expr::absx();
    if (name.size() >= 2 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const std::size_t axis = std::stoul(name.substr(1));
      if (axis == 0 || axis > dim_) throw UnknownIdentifier(name);
      return Expr::coordinate(axis - 1);
    }

    ExprOp op;
    std::size_t arity;
    if (name == "sin") {
      op = ExprOp::Sin, arity = 1;
    } else if (name == "cos") {
      op = ExprOp::Cos, arity = 1;
    } else if (name == "exp") {
      op = ExprOp::Exp, arity = 1;
    } else if (name == "pow") {
      op = ExprOp::Pow, arity = 2;
    } else if (name == "chi_ball") {
      op = ExprOp::ChiBall, arity = dim_ + 1;
    } else {
      throw UnknownIdentifier(name);
    }

    expect('(');
    std::vector<Expr> args;
    args.push_back(expression());
    while (args.size() < arity) {
      expect(',');
      args.push_back(expression());
    }
    expect(')');
    return Expr::apply(op, std::move(args));
  }

  std::string_view src_;
  std::size_t dim_;
  std::size_t pos_ = 0;
};

inline double eval_node(const ExprNode& n, std::span<const double> x) {
  auto arg = [&](std::size_t i) { return eval_node(*n.args[i], x); };
  auto err = [&](EvalErrorKind k, const std::string& what) -> EvalError {
    return EvalError(k, std::vector<double>(x.begin(), x.end()), what);
  };
  switch (n.op) {
    case ExprOp::Literal:
      return n.value;
    case ExprOp::Coordinate:
      if (n.index >= x.size())
        throw err(EvalErrorKind::DimensionMismatch, "coordinate index exceeds point dimension");
      return x[n.index];
    case ExprOp::AbsX: {
      double s = 0.0;
      for (double xi : x) s += xi * xi;
      return std::sqrt(s);
    }
    case ExprOp::Add:
      return arg(0) + arg(1);
    case ExprOp::Sub:
      return arg(0) - arg(1);
    case ExprOp::Mul:
      return arg(0) * arg(1);
    case ExprOp::Div: {
      const double num = arg(0);
      const double den = arg(1);
      if (den == 0.0) throw err(EvalErrorKind::DivisionByZero, "division by zero");
      return num / den;
    }
    case ExprOp::Neg:
      return -arg(0);
    case ExprOp::Sin:
      return std::sin(arg(0));
    case ExprOp::Cos:
      return std::cos(arg(0));
    case ExprOp::Exp:
      return std::exp(arg(0));
    case ExprOp::Pow: {
      const double b = arg(0);
      const double e = arg(1);
      if (b < 0.0 && e != std::trunc(e))
        throw err(EvalErrorKind::InvalidPow, "pow of negative base with non-integer exponent");
      if (b == 0.0 && e < 0.0) throw err(EvalErrorKind::DivisionByZero, "pow(0, negative)");
      return std::pow(b, e);
    }
    case ExprOp::ChiBall: {
      const std::size_t dim = n.args.size() - 1;
      if (dim != x.size())
        throw err(EvalErrorKind::DimensionMismatch, "chi_ball arity does not match dimension");
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = x[k] - arg(k);
        d2 += d * d;
      }
      const double radius = arg(dim);
      return d2 <= radius * radius ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

inline void print_node(const ExprNode& n, std::string& out) {
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) out += ", ";
      print_node(*n.args[i], out);
    }
    out += ')';
  };
  auto binary = [&](const char* op) {
    out += '(';
    print_node(*n.args[0], out);
    out += op;
    print_node(*n.args[1], out);
    out += ')';
  };
  switch (n.op) {
    case ExprOp::Literal: {
      char buf[40];
      if (n.value < 0.0 || (n.value == 0.0 && std::signbit(n.value))) {
        std::snprintf(buf, sizeof buf, "(-%.17g)", -n.value);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
      }
      out += buf;
      break;
    }
    case ExprOp::Coordinate:
      out += 'x';
      out += std::to_string(n.index + 1);
      break;
    case ExprOp::AbsX:
      out += "absx";
      break;
    case ExprOp::Add:
      binary(" + ");
      break;
    case ExprOp::Sub:
      binary(" - ");
      break;
    case ExprOp::Mul:
      binary(" * ");
      break;
    case ExprOp::Div:
      binary(" / ");
      break;
    case ExprOp::Neg:
      out += "(-";
      print_node(*n.args[0], out);
      out += ')';
      break;
    case ExprOp::Sin:
      call("sin");
      break;
    case ExprOp::Cos:
      call("cos");
      break;
    case ExprOp::Exp:
      call("exp");
      break;
    case ExprOp::Pow:
      call("pow");
      break;
    case ExprOp::ChiBall:
      call("chi_ball");
      break;
  }
}

}  // namespace detail

/// Parses `source` for a domain of dimension `dim` (coordinates x1..x{dim}).
inline Expr parse(std::string_view source, std::size_t dim = 3) {
  return detail::ExprParser(source, dim).parse();
}

/// Evaluates at `point`; throws EvalError on division by zero, invalid pow or a
/// non-finite result.
inline double Expr::eval(std::span<const double> point) const {
  const double v = detail::eval_node(*root_, point);
  if (!std::isfinite(v))
    throw EvalError(EvalErrorKind::NonFinite, std::vector<double>(point.begin(), point.end()),
                    "expression evaluates to a non-finite value");
  return v;
}

inline std::string Expr::print() const {
  std::string out;
  detail::print_node(*root_, out);
  return out;
}

inline double eval(const Expr& e, std::span<const double> point) { return e.eval(point); }

}  // namespace mpnehari
