#pragma once

// Immutable symbolic expressions over the jet coordinates (x, u, p, q, r, s),
// declared parameters and named functions of one argument.

#include <array>
#include <charconv>
#include <limits>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "fbvp/error.hpp"

namespace fbvp {

enum class Op : unsigned char {
  Const,
  Var,
  Func,  // named function application, carries a derivative-order tag
  Neg,
  Sqrt,
  Sin,
  Cos,
  Exp,
  Log,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // constant rational exponent num/den, den > 0
};

struct Node;

class Expr {
 public:
  /// The constant zero.
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const noexcept;
  const Node* get() const noexcept;
  const std::shared_ptr<const Node>& shared() const noexcept { return node_; }

  Op op() const noexcept;
  bool is_const() const noexcept { return op() == Op::Const; }
  bool is_const(double v) const noexcept;
  double value() const noexcept;
  const std::string& name() const noexcept;

 private:
  std::shared_ptr<const Node> node_;  // null for the shared zero constant
};

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  int order = 0;
  int num = 1;
  int den = 1;
  Expr a;
  Expr b;
};

inline const Node& zero_node() noexcept {
  static const Node zero;
  return zero;
}

inline const Node& Expr::node() const noexcept { return node_ ? *node_ : zero_node(); }
inline const Node* Expr::get() const noexcept { return node_ ? node_.get() : &zero_node(); }
inline Op Expr::op() const noexcept { return node().op; }
inline bool Expr::is_const(double v) const noexcept { return op() == Op::Const && value() == v; }
inline double Expr::value() const noexcept { return node().value; }
inline const std::string& Expr::name() const noexcept { return node().name; }

// ---------------------------------------------------------------------------
// Jet variables

inline constexpr std::array<std::string_view, 6> kJetVariables = {"x", "u", "p", "q", "r", "s"};

/// Order of a jet variable: x and u are 0, p is 1, ..., s is 4.
inline std::optional<int> jet_order(std::string_view name) {
  if (name == "x" || name == "u") return 0;
  if (name == "p") return 1;
  if (name == "q") return 2;
  if (name == "r") return 3;
  if (name == "s") return 4;
  return std::nullopt;
}

inline bool is_jet_variable(std::string_view name) { return jet_order(name).has_value(); }

// ---------------------------------------------------------------------------
// Raw node construction

namespace detail {

inline Expr make_node(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }

inline Expr raw_unary(Op op, Expr a) {
  Node n;
  n.op = op;
  n.a = std::move(a);
  return make_node(std::move(n));
}

inline Expr raw_binary(Op op, Expr a, Expr b) {
  Node n;
  n.op = op;
  n.a = std::move(a);
  n.b = std::move(b);
  return make_node(std::move(n));
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

inline Expr constant(double v) {
  if (v == 0.0) return Expr();
  Node n;
  n.op = Op::Const;
  n.value = v;
  return detail::make_node(std::move(n));
}

inline Expr var(std::string name) {
  Node n;
  n.op = Op::Var;
  n.name = std::move(name);
  return detail::make_node(std::move(n));
}

/// Application of the named function `name`, differentiated `order` times, to `arg`.
inline Expr func(std::string name, int order, Expr arg) {
  Node n;
  n.op = Op::Func;
  n.name = std::move(name);
  n.order = order;
  n.a = std::move(arg);
  return detail::make_node(std::move(n));
}

// ---------------------------------------------------------------------------
// Light algebraic cleanup performed by the smart constructors. No canonical
// form is promised; equality of results is decided numerically.

namespace detail {

struct Scaled {
  double coef = 1.0;
  std::optional<Expr> rest;  // nullopt means the factor 1
};

inline Scaled split(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
      return {e.value(), std::nullopt};
    case Op::Neg: {
      Scaled s = split(e.node().a);
      s.coef = -s.coef;
      return s;
    }
    case Op::Mul:
      if (e.node().a.is_const()) {
        Scaled s = split(e.node().b);
        s.coef *= e.node().a.value();
        return s;
      }
      return {1.0, e};
    case Op::Div:
      if (e.node().b.is_const() && e.node().b.value() != 0.0) {
        Scaled s = split(e.node().a);
        s.coef /= e.node().b.value();
        return s;
      }
      if (e.node().a.is_const()) {
        return {e.node().a.value(), raw_binary(Op::Div, constant(1.0), e.node().b)};
      }
      return {1.0, e};
    default:
      return {1.0, e};
  }
}

inline Expr with_coef(double c, const std::optional<Expr>& rest) {
  if (!rest) return constant(c);
  if (c == 0.0) return Expr();
  if (c < 0.0) return raw_unary(Op::Neg, with_coef(-c, rest));
  if (c == 1.0) return *rest;
  if (rest->op() == Op::Div && rest->node().a.is_const(1.0)) {
    return raw_binary(Op::Div, constant(c), rest->node().b);
  }
  if (c < 1.0) {
    const double inv = 1.0 / c;
    if (inv == std::round(inv) && inv <= 1e6) return raw_binary(Op::Div, *rest, constant(inv));
  }
  return raw_binary(Op::Mul, constant(c), *rest);
}

}  // namespace detail

inline Expr operator-(const Expr& a) {
  if (a.is_const()) return constant(-a.value());
  if (a.op() == Op::Neg) return a.node().a;
  detail::Scaled s = detail::split(a);
  return detail::with_coef(-s.coef, s.rest);
}

inline Expr operator-(const Expr& a, const Expr& b);

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.value() + b.value());
  if (a.is_const(0.0)) return b;
  if (b.is_const(0.0)) return a;
  if (b.op() == Op::Neg) return a - b.node().a;
  if (b.is_const() && b.value() < 0.0) return a - constant(-b.value());
  if (a.op() == Op::Neg) return b - a.node().a;
  return detail::raw_binary(Op::Add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.value() - b.value());
  if (b.is_const(0.0)) return a;
  if (a.is_const(0.0)) return -b;
  if (b.op() == Op::Neg) return a + b.node().a;
  if (b.is_const() && b.value() < 0.0) return a + constant(-b.value());
  if (a.get() == b.get()) return Expr();
  return detail::raw_binary(Op::Sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.value() * b.value());
  detail::Scaled sa = detail::split(a);
  detail::Scaled sb = detail::split(b);
  const double c = sa.coef * sb.coef;
  if (c == 0.0) return Expr();
  std::optional<Expr> rest;
  if (sa.rest && sb.rest) {
    rest = detail::raw_binary(Op::Mul, *sa.rest, *sb.rest);
  } else if (sa.rest) {
    rest = sa.rest;
  } else {
    rest = sb.rest;
  }
  return detail::with_coef(c, rest);
}

inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const() && b.value() != 0.0) return constant(a.value() / b.value());
  if (b.is_const(0.0)) return detail::raw_binary(Op::Div, a, b);
  detail::Scaled sa = detail::split(a);
  detail::Scaled sb = detail::split(b);
  if (sa.coef == 0.0) return Expr();
  const double c = sa.coef / sb.coef;
  if (!sb.rest) return detail::with_coef(c, sa.rest);
  if (sa.rest && sa.rest->get() == sb.rest->get()) return constant(c);
  Expr numer = sa.rest ? *sa.rest : constant(1.0);
  return detail::with_coef(c, detail::raw_binary(Op::Div, numer, *sb.rest));
}

inline Expr operator+(const Expr& a, double b) { return a + constant(b); }
inline Expr operator+(double a, const Expr& b) { return constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - constant(b); }
inline Expr operator-(double a, const Expr& b) { return constant(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * constant(b); }
inline Expr operator*(double a, const Expr& b) { return constant(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / constant(b); }
inline Expr operator/(double a, const Expr& b) { return constant(a) / b; }

namespace detail {

inline double rational_power(double base, int num, int den) {
  if (den == 1) return std::pow(base, num);
  if (base < 0.0) {
    if (den % 2 == 0) return std::numeric_limits<double>::quiet_NaN();
    const double mag = std::pow(-base, static_cast<double>(num) / den);
    return (num % 2 == 0) ? mag : -mag;
  }
  return std::pow(base, static_cast<double>(num) / den);
}

}  // namespace detail

/// base^(num/den) with a constant rational exponent.
inline Expr pow(const Expr& base, int num, int den = 1) {
  if (den <= 0) throw Error("power exponent denominator must be positive");
  const int g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num == 0) return constant(1.0);
  if (num == den) return base;
  if (base.is_const()) {
    const double v = detail::rational_power(base.value(), num, den);
    if (detail::finite(v)) return constant(v);
  }
  if (base.op() == Op::Pow && den == 1) {
    return pow(base.node().a, base.node().num * num, base.node().den);
  }
  Node n;
  n.op = Op::Pow;
  n.a = base;
  n.num = num;
  n.den = den;
  return detail::make_node(std::move(n));
}

namespace detail {

inline Expr unary_fold(Op op, const Expr& a, double (*fn)(double)) {
  if (a.is_const()) {
    const double v = fn(a.value());
    if (finite(v)) return constant(v);
  }
  return raw_unary(op, a);
}

}  // namespace detail

inline Expr sqrt(const Expr& a) {
  return detail::unary_fold(Op::Sqrt, a, [](double v) { return std::sqrt(v); });
}
inline Expr sin(const Expr& a) {
  return detail::unary_fold(Op::Sin, a, [](double v) { return std::sin(v); });
}
inline Expr cos(const Expr& a) {
  return detail::unary_fold(Op::Cos, a, [](double v) { return std::cos(v); });
}
inline Expr exp(const Expr& a) {
  return detail::unary_fold(Op::Exp, a, [](double v) { return std::exp(v); });
}
inline Expr log(const Expr& a) {
  if (a.is_const() && a.value() > 0.0) return constant(std::log(a.value()));
  return detail::raw_unary(Op::Log, a);
}

/// Rebuilds a node of the same kind from new children using the smart constructors.
inline Expr rebuild(const Expr& e, const Expr& a, const Expr& b = Expr()) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const:
    case Op::Var:
      return e;
    case Op::Func:
      return a.get() == n.a.get() ? e : func(n.name, n.order, a);
    case Op::Neg:
      return -a;
    case Op::Sqrt:
      return sqrt(a);
    case Op::Sin:
      return sin(a);
    case Op::Cos:
      return cos(a);
    case Op::Exp:
      return exp(a);
    case Op::Log:
      return log(a);
    case Op::Add:
      return a + b;
    case Op::Sub:
      return a - b;
    case Op::Mul:
      return a * b;
    case Op::Div:
      return a / b;
    case Op::Pow:
      return pow(a, n.num, n.den);
  }
  return e;
}

inline int arity(Op op) {
  switch (op) {
    case Op::Const:
    case Op::Var:
      return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

// ---------------------------------------------------------------------------
// Printer. Output is accepted by parse_expression and evaluates identically.

namespace detail {

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf.data(), end);
}

enum Prec : int { kSum = 1, kProduct = 2, kNegation = 3, kPower = 4, kAtom = 5 };

inline int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
      return e.value() < 0.0 ? kNegation : kAtom;
    case Op::Neg:
      return kNegation;
    case Op::Add:
    case Op::Sub:
      return kSum;
    case Op::Mul:
    case Op::Div:
      return kProduct;
    case Op::Pow:
      return kPower;
    default:
      return kAtom;
  }
}

inline void print(const Expr& e, std::string& out);

inline void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sqrt:
      return "sqrt";
    case Op::Sin:
      return "sin";
    case Op::Cos:
      return "cos";
    case Op::Exp:
      return "exp";
    case Op::Log:
      return "log";
    default:
      return "?";
  }
}

inline void print(const Expr& e, std::string& out) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const:
      out += format_number(n.value);
      return;
    case Op::Var:
      out += n.name;
      return;
    case Op::Func:
      out += n.name;
      out.append(static_cast<std::size_t>(n.order), '\'');
      out += '(';
      print(n.a, out);
      out += ')';
      return;
    case Op::Neg:
      out += '-';
      print_wrapped(n.a, precedence(n.a) < kPower, out);
      return;
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
      out += function_name(n.op);
      out += '(';
      print(n.a, out);
      out += ')';
      return;
    case Op::Add:
    case Op::Sub: {
      const int pb = precedence(n.b);
      print_wrapped(n.a, precedence(n.a) < kSum, out);
      out += n.op == Op::Add ? " + " : " - ";
      print_wrapped(n.b, pb == kSum || pb == kNegation, out);
      return;
    }
    case Op::Mul:
    case Op::Div: {
      print_wrapped(n.a, precedence(n.a) < kProduct, out);
      out += n.op == Op::Mul ? '*' : '/';
      print_wrapped(n.b, precedence(n.b) <= kNegation, out);
      return;
    }
    case Op::Pow: {
      print_wrapped(n.a, precedence(n.a) < kAtom, out);
      out += '^';
      if (n.den == 1 && n.num >= 0) {
        out += std::to_string(n.num);
      } else if (n.den == 1) {
        out += "(" + std::to_string(n.num) + ")";
      } else {
        out += "(" + std::to_string(n.num) + "/" + std::to_string(n.den) + ")";
      }
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, out);
  return out;
}

}  // namespace fbvp
