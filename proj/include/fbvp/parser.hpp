#pragma once

// Recursive-descent parser for the expression grammar:
//
//   expr     = term { ("+" | "-") term } ;
//   term     = unary { ("*" | "/") unary } ;
//   unary    = ("+" | "-") unary | power ;
//   power    = primary [ "^" unary ] ;            (exponent must be a rational constant)
//   primary  = number
//            | identifier { "'" } "(" expr ")"   (builtin or declared named function)
//            | identifier                         (jet variable, parameter or pi)
//            | "(" expr ")" ;
//   number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//
// Builtins: sqrt sin cos exp log. Jet variables x u p q r s are always known;
// every other identifier must be declared as a parameter or named function.
// Primes on a named function set its derivative-order tag: rho''(x).

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "fbvp/expr.hpp"

namespace fbvp {

struct ParseContext {
  std::set<std::string> parameters;
  std::set<std::string> functions;

  ParseContext& parameter(std::string name) {
    parameters.insert(std::move(name));
    return *this;
  }
  ParseContext& function(std::string name) {
    functions.insert(std::move(name));
    return *this;
  }
};

namespace detail {

inline bool free_of_symbols(const Expr& e) {
  switch (e.op()) {
    case Op::Const:
      return true;
    case Op::Var:
    case Op::Func:
      return false;
    default:
      if (!free_of_symbols(e.node().a)) return false;
      return arity(e.op()) < 2 || free_of_symbols(e.node().b);
  }
}

inline double fold_constant(const Expr& e) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Neg:
      return -fold_constant(n.a);
    case Op::Sqrt:
      return std::sqrt(fold_constant(n.a));
    case Op::Sin:
      return std::sin(fold_constant(n.a));
    case Op::Cos:
      return std::cos(fold_constant(n.a));
    case Op::Exp:
      return std::exp(fold_constant(n.a));
    case Op::Log:
      return std::log(fold_constant(n.a));
    case Op::Add:
      return fold_constant(n.a) + fold_constant(n.b);
    case Op::Sub:
      return fold_constant(n.a) - fold_constant(n.b);
    case Op::Mul:
      return fold_constant(n.a) * fold_constant(n.b);
    case Op::Div:
      return fold_constant(n.a) / fold_constant(n.b);
    case Op::Pow:
      return rational_power(fold_constant(n.a), n.num, n.den);
    default:
      return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Best rational approximation with a small denominator, exact to 1e-12.
inline std::optional<std::pair<int, int>> as_rational(double v) {
  if (!std::isfinite(v) || std::abs(v) > 1e6) return std::nullopt;
  for (int den = 1; den <= 360; ++den) {
    const double scaled = v * den;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) <= 1e-12 * den) {
      return std::make_pair(static_cast<int>(rounded), den);
    }
  }
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::string_view text, const ParseContext& ctx) : text_(text), ctx_(ctx) {}

  Expr parse() {
    Expr e = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        lhs = lhs / unary();
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip_space();
    if (!accept('^')) return base;
    const std::size_t at = pos_;
    Expr exponent = unary();
    if (!free_of_symbols(exponent)) {
      throw SyntaxError("exponent must be a constant", at);
    }
    auto rational = as_rational(fold_constant(exponent));
    if (!rational) throw SyntaxError("exponent must be a rational constant", at);
    return fbvp::pow(base, rational->first, rational->second);
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    if (token == ".") {
      pos_ = start;
      fail("malformed number");
    }
    return constant(std::strtod(token.c_str(), nullptr));
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  Expr call_argument() {
    expect('(');
    Expr arg = expression();
    expect(')');
    return arg;
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr inner = expression();
      expect(')');
      return inner;
    }
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) {
      fail("expected operand, found '" + std::string(1, c) + "'");
    }
    const std::size_t start = pos_;
    const std::string name = identifier();
    int primes = 0;
    while (pos_ < text_.size() && text_[pos_] == '\'') {
      ++primes;
      ++pos_;
    }
    if (name == "sqrt" || name == "sin" || name == "cos" || name == "exp" || name == "log") {
      if (primes > 0) fail("builtin functions take no derivative tag");
      Expr arg = call_argument();
      if (name == "sqrt") return fbvp::sqrt(arg);
      if (name == "sin") return fbvp::sin(arg);
      if (name == "cos") return fbvp::cos(arg);
      if (name == "exp") return fbvp::exp(arg);
      return fbvp::log(arg);
    }
    if (ctx_.functions.count(name) != 0) return func(name, primes, call_argument());
    if (primes > 0) {
      pos_ = start;
      throw UnknownIdentifier(name);
    }
    if (is_jet_variable(name) || ctx_.parameters.count(name) != 0) return var(name);
    if (name == "pi") return constant(std::numbers::pi);
    throw UnknownIdentifier(name);
  }

  std::string_view text_;
  const ParseContext& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(std::string_view text, const ParseContext& ctx = {}) {
  return detail::Parser(text, ctx).parse();
}

}  // namespace fbvp
