#pragma once

// Partial and total derivatives, substitution and symbol queries on Expr.
// All traversals memoise on node identity so shared subtrees stay shared.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include "fbvp/expr.hpp"

namespace fbvp {

namespace detail {

template <typename Fn>
Expr transform(const Expr& e, std::unordered_map<const Node*, Expr>& memo, Fn&& leaf) {
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  Expr result;
  switch (arity(e.op())) {
    case 0:
      result = leaf(e);
      break;
    case 1:
      result = rebuild(e, transform(e.node().a, memo, leaf));
      break;
    default:
      result = rebuild(e, transform(e.node().a, memo, leaf), transform(e.node().b, memo, leaf));
      break;
  }
  memo.emplace(e.get(), result);
  return result;
}

inline void collect(const Expr& e, std::set<const Node*>& seen, std::set<std::string>& vars,
                    std::set<std::string>& funcs) {
  if (!seen.insert(e.get()).second) return;
  const Node& n = e.node();
  if (n.op == Op::Var) vars.insert(n.name);
  if (n.op == Op::Func) funcs.insert(n.name);
  if (arity(n.op) >= 1) collect(n.a, seen, vars, funcs);
  if (arity(n.op) == 2) collect(n.b, seen, vars, funcs);
}

}  // namespace detail

/// Free variables (jet variables and parameters) of an expression.
inline std::set<std::string> free_symbols(const Expr& e) {
  std::set<const Node*> seen;
  std::set<std::string> vars;
  std::set<std::string> funcs;
  detail::collect(e, seen, vars, funcs);
  return vars;
}

/// Names of the named functions applied anywhere in an expression.
inline std::set<std::string> named_functions(const Expr& e) {
  std::set<const Node*> seen;
  std::set<std::string> vars;
  std::set<std::string> funcs;
  detail::collect(e, seen, vars, funcs);
  return funcs;
}

/// Highest jet order among the free variables, -1 when no jet variable occurs.
inline int max_jet_order(const Expr& e) {
  int best = -1;
  for (const auto& v : free_symbols(e)) {
    if (auto k = jet_order(v)) best = std::max(best, *k);
  }
  return best;
}

/// Simultaneous substitution of variables by expressions.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements) {
  std::unordered_map<const Node*, Expr> memo;
  return detail::transform(e, memo, [&](const Expr& leaf) {
    if (leaf.op() == Op::Var) {
      if (auto it = replacements.find(leaf.name()); it != replacements.end()) return it->second;
    }
    return leaf;
  });
}

namespace detail {

class Differentiator {
 public:
  explicit Differentiator(std::string v) : v_(std::move(v)) {}

  Expr operator()(const Expr& e) {
    if (auto it = memo_.find(e.get()); it != memo_.end()) return it->second;
    Expr d = differentiate(e);
    memo_.emplace(e.get(), d);
    return d;
  }

 private:
  Expr differentiate(const Expr& e) {
    const Node& n = e.node();
    switch (n.op) {
      case Op::Const:
        return Expr();
      case Op::Var:
        return n.name == v_ ? constant(1.0) : Expr();
      case Op::Func: {
        Expr da = (*this)(n.a);
        if (da.is_const(0.0)) return Expr();
        return func(n.name, n.order + 1, n.a) * da;
      }
      case Op::Neg:
        return -(*this)(n.a);
      case Op::Sqrt: {
        Expr da = (*this)(n.a);
        if (da.is_const(0.0)) return Expr();
        return da / (2.0 * e);
      }
      case Op::Sin:
        return cos(n.a) * (*this)(n.a);
      case Op::Cos:
        return -(sin(n.a) * (*this)(n.a));
      case Op::Exp:
        return e * (*this)(n.a);
      case Op::Log:
        return (*this)(n.a) / n.a;
      case Op::Add:
        return (*this)(n.a) + (*this)(n.b);
      case Op::Sub:
        return (*this)(n.a) - (*this)(n.b);
      case Op::Mul:
        return (*this)(n.a) * n.b + n.a * (*this)(n.b);
      case Op::Div: {
        Expr da = (*this)(n.a);
        Expr db = (*this)(n.b);
        if (db.is_const(0.0)) return da / n.b;
        return (da * n.b - n.a * db) / pow(n.b, 2);
      }
      case Op::Pow: {
        Expr da = (*this)(n.a);
        if (da.is_const(0.0)) return Expr();
        const double k = static_cast<double>(n.num) / n.den;
        return k * pow(n.a, n.num - n.den, n.den) * da;
      }
    }
    return Expr();
  }

  std::string v_;
  std::unordered_map<const Node*, Expr> memo_;
};

}  // namespace detail

/// Symbolic partial derivative with respect to a jet variable or parameter.
/// Named functions differentiate through their argument by the chain rule,
/// incrementing the derivative-order tag.
inline Expr partial_derivative(const Expr& e, const std::string& v) {
  return detail::Differentiator(v)(e);
}

/// Total derivative D^(k) = d/dx + p d/du + q d/dp + ... truncated at order k,
/// defined on expressions whose jet order is below k (1 <= k <= 4).
inline Expr total_derivative(const Expr& e, int k) {
  if (k < 1 || k > 4) throw OrderError("total derivative order must lie in 1..4");
  const int order = max_jet_order(e);
  if (order >= k) {
    throw OrderError("total derivative D^(" + std::to_string(k) +
                     ") applied to an expression of jet order " + std::to_string(order));
  }
  static const char* const kChain[][2] = {{"u", "p"}, {"p", "q"}, {"q", "r"}, {"r", "s"}};
  Expr result = partial_derivative(e, "x");
  for (int j = 0; j < k; ++j) {
    Expr fj = partial_derivative(e, kChain[j][0]);
    if (!fj.is_const(0.0)) result = result + fj * var(kChain[j][1]);
  }
  return result;
}

/// Total derivative of the lowest order that accepts `e`.
inline Expr total_derivative(const Expr& e) {
  return total_derivative(e, std::max(1, max_jet_order(e) + 1));
}

}  // namespace fbvp
