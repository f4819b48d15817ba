#pragma once

// Numeric evaluation of expressions. A Program is an expression DAG compiled
// into a topologically ordered tape; shared subtrees are evaluated once.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fbvp/calculus.hpp"
#include "fbvp/expr.hpp"

namespace fbvp {

/// A named function of one real argument: value of its `order`-th derivative at `x`.
using NamedFunction = std::function<double(double x, int order)>;
using FunctionTable = std::map<std::string, NamedFunction, std::less<>>;

struct Bindings {
  std::map<std::string, double, std::less<>> values;
  FunctionTable functions;

  Bindings& set(std::string name, double v) {
    values[std::move(name)] = v;
    return *this;
  }
  Bindings& define(std::string name, NamedFunction fn) {
    functions[std::move(name)] = std::move(fn);
    return *this;
  }
};

class Program {
 public:
  Program() = default;
  explicit Program(const Expr& e) : Program(std::vector<Expr>{e}) {}

  explicit Program(std::vector<Expr> outputs) : roots_(std::move(outputs)) {
    std::unordered_map<const Node*, int> slot;
    std::map<std::string, int> symbol_index;
    std::map<std::string, int> function_index;
    for (const Expr& root : roots_) outputs_.push_back(compile(root, slot, symbol_index, function_index));
  }

  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  const std::vector<std::string>& functions() const noexcept { return functions_; }
  std::size_t output_count() const noexcept { return outputs_.size(); }
  std::size_t size() const noexcept { return code_.size(); }

  /// `values` aligned with symbols(), `fns` aligned with functions().
  void run(std::span<const double> values, std::span<const NamedFunction* const> fns,
           std::span<double> out) const {
    std::vector<double> reg(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Instr& in = code_[i];
      double v = 0.0;
      switch (in.op) {
        case Op::Const:
          v = in.value;
          break;
        case Op::Var:
          v = values[static_cast<std::size_t>(in.index)];
          break;
        case Op::Func:
          v = (*fns[static_cast<std::size_t>(in.index)])(reg[in.a], in.order);
          break;
        case Op::Neg:
          v = -reg[in.a];
          break;
        case Op::Sqrt:
          if (reg[in.a] < 0.0) fail(i, "square root of negative value");
          v = std::sqrt(reg[in.a]);
          break;
        case Op::Sin:
          v = std::sin(reg[in.a]);
          break;
        case Op::Cos:
          v = std::cos(reg[in.a]);
          break;
        case Op::Exp:
          v = std::exp(reg[in.a]);
          break;
        case Op::Log:
          if (reg[in.a] <= 0.0) fail(i, "logarithm of non-positive value");
          v = std::log(reg[in.a]);
          break;
        case Op::Add:
          v = reg[in.a] + reg[in.b];
          break;
        case Op::Sub:
          v = reg[in.a] - reg[in.b];
          break;
        case Op::Mul:
          v = reg[in.a] * reg[in.b];
          break;
        case Op::Div:
          if (reg[in.b] == 0.0) fail(i, "division by zero");
          v = reg[in.a] / reg[in.b];
          break;
        case Op::Pow: {
          const double base = reg[in.a];
          if (base < 0.0 && in.den % 2 == 0) fail(i, "even root of negative value");
          if (base == 0.0 && in.num < 0) fail(i, "division by zero");
          v = detail::rational_power(base, in.num, in.den);
          break;
        }
      }
      if (!std::isfinite(v)) fail(i, "non-finite value");
      reg[i] = v;
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = reg[static_cast<std::size_t>(outputs_[k])];
  }

  double run1(std::span<const double> values, std::span<const NamedFunction* const> fns) const {
    double out = 0.0;
    run(values, fns, std::span<double>(&out, 1));
    return out;
  }

  /// Resolves every symbol and function by name; unbound names are an error.
  std::vector<double> evaluate(const Bindings& b) const {
    std::vector<double> values;
    values.reserve(symbols_.size());
    for (const auto& s : symbols_) {
      auto it = b.values.find(s);
      if (it == b.values.end()) throw UnboundSymbol(s);
      values.push_back(it->second);
    }
    std::vector<const NamedFunction*> fns;
    for (const auto& f : functions_) {
      auto it = b.functions.find(f);
      if (it == b.functions.end()) throw UnboundSymbol(f);
      fns.push_back(&it->second);
    }
    std::vector<double> out(outputs_.size());
    run(values, fns, out);
    return out;
  }

 private:
  struct Instr {
    Op op = Op::Const;
    int a = 0;
    int b = 0;
    int index = 0;
    int order = 0;
    int num = 1;
    int den = 1;
    double value = 0.0;
  };

  [[noreturn]] void fail(std::size_t i, const std::string& what) const {
    throw DomainError(what, to_string(Expr(nodes_[i])));
  }

  int compile(const Expr& root, std::unordered_map<const Node*, int>& slot,
              std::map<std::string, int>& symbol_index, std::map<std::string, int>& function_index) {
    // Iterative post-order traversal; expression trees from repeated
    // differentiation can be deep.
    std::vector<std::pair<const Expr*, bool>> stack{{&root, false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (slot.count(e->get()) != 0) continue;
      const Node& n = e->node();
      const int ar = arity(n.op);
      if (!expanded && ar > 0) {
        stack.emplace_back(e, true);
        if (ar == 2) stack.emplace_back(&n.b, false);
        stack.emplace_back(&n.a, false);
        continue;
      }
      Instr in;
      in.op = n.op;
      in.value = n.value;
      in.order = n.order;
      in.num = n.num;
      in.den = n.den;
      if (ar >= 1) in.a = slot.at(n.a.get());
      if (ar == 2) in.b = slot.at(n.b.get());
      if (n.op == Op::Var) {
        auto [it, fresh] = symbol_index.emplace(n.name, static_cast<int>(symbols_.size()));
        if (fresh) symbols_.push_back(n.name);
        in.index = it->second;
      } else if (n.op == Op::Func) {
        auto [it, fresh] = function_index.emplace(n.name, static_cast<int>(functions_.size()));
        if (fresh) functions_.push_back(n.name);
        in.index = it->second;
      }
      slot.emplace(e->get(), static_cast<int>(code_.size()));
      code_.push_back(in);
      nodes_.push_back(e->shared());
    }
    return slot.at(root.get());
  }

  std::vector<Expr> roots_;
  std::vector<Instr> code_;
  std::vector<std::shared_ptr<const Node>> nodes_;
  std::vector<int> outputs_;
  std::vector<std::string> symbols_;
  std::vector<std::string> functions_;
};

/// A Program whose symbols are mapped onto a caller-defined layout of
/// variable values; symbols outside the layout take fixed values.
class BoundProgram {
 public:
  BoundProgram() = default;

  BoundProgram(Program program, const std::vector<std::string>& layout, const Bindings& fixed)
      : program_(std::move(program)) {
    for (const auto& s : program_.symbols()) {
      auto pos = std::find(layout.begin(), layout.end(), s);
      if (pos != layout.end()) {
        map_.push_back(static_cast<int>(pos - layout.begin()));
        constants_.push_back(0.0);
      } else if (auto it = fixed.values.find(s); it != fixed.values.end()) {
        map_.push_back(-1);
        constants_.push_back(it->second);
      } else {
        throw UnboundSymbol(s);
      }
    }
    for (const auto& f : program_.functions()) {
      auto it = fixed.functions.find(f);
      if (it == fixed.functions.end()) throw UnboundSymbol(f);
      owned_.push_back(std::make_shared<NamedFunction>(it->second));
    }
    for (const auto& f : owned_) fns_.push_back(f.get());
  }

  std::size_t output_count() const noexcept { return program_.output_count(); }

  void operator()(std::span<const double> layout_values, std::span<double> out) const {
    std::vector<double> values(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) {
      values[i] = map_[i] >= 0 ? layout_values[static_cast<std::size_t>(map_[i])] : constants_[i];
    }
    program_.run(values, fns_, out);
  }

  std::vector<double> operator()(std::span<const double> layout_values) const {
    std::vector<double> out(output_count());
    (*this)(layout_values, out);
    return out;
  }

 private:
  Program program_;
  std::vector<int> map_;
  std::vector<double> constants_;
  std::vector<std::shared_ptr<NamedFunction>> owned_;
  std::vector<const NamedFunction*> fns_;
};

inline double evaluate(const Expr& e, const Bindings& b) { return Program(e).evaluate(b)[0]; }

/// A named function realised from an expression in one variable; derivatives
/// are symbolic and precomputed up to `max_order`.
inline NamedFunction function_from_expr(const Expr& body, const std::string& variable = "x",
                                        int max_order = 8, const Bindings& fixed = {}) {
  auto programs = std::make_shared<std::vector<BoundProgram>>();
  Expr d = body;
  for (int k = 0; k <= max_order; ++k) {
    programs->emplace_back(Program(d), std::vector<std::string>{variable}, fixed);
    d = partial_derivative(d, variable);
  }
  return [programs](double x, int order) {
    if (order < 0 || order >= static_cast<int>(programs->size())) {
      throw Error("derivative order " + std::to_string(order) + " not available");
    }
    return (*programs)[static_cast<std::size_t>(order)](std::span<const double>(&x, 1))[0];
  };
}

// ---------------------------------------------------------------------------
// Numeric equality oracle

struct SamplingOptions {
  /// Per-symbol sampling interval; symbols not listed use default_range.
  std::map<std::string, std::pair<double, double>, std::less<>> ranges;
  std::pair<double, double> default_range{-2.0, 2.0};
  /// Definitions of the named functions occurring in the compared expressions.
  FunctionTable functions;
  /// Symbols held at fixed values instead of sampled.
  std::map<std::string, double, std::less<>> fixed;
  std::uint64_t seed = 0x5eed;
  int max_reject = 1000;
};

/// Randomised equality test: true iff |a - b| <= tol (1 + |a|) at every one of
/// `trials` random bindings. Bindings where either side is outside its domain
/// are rejected and redrawn; after max_reject rejections the last domain error
/// propagates.
inline bool exprs_equal_numeric(const Expr& a, const Expr& b, int trials, double tol,
                                const SamplingOptions& opt = {}) {
  if (trials < 1) throw Error("exprs_equal_numeric needs at least one trial");
  Program prog(std::vector<Expr>{a, b});
  std::mt19937_64 rng(opt.seed);
  Bindings bind;
  bind.functions = opt.functions;
  int rejected = 0;
  for (int t = 0; t < trials;) {
    for (const auto& s : prog.symbols()) {
      if (auto it = opt.fixed.find(s); it != opt.fixed.end()) {
        bind.values[s] = it->second;
        continue;
      }
      auto range = opt.default_range;
      if (auto it = opt.ranges.find(s); it != opt.ranges.end()) range = it->second;
      bind.values[s] = std::uniform_real_distribution<double>(range.first, range.second)(rng);
    }
    std::vector<double> v;
    try {
      v = prog.evaluate(bind);
    } catch (const DomainError&) {
      if (++rejected > opt.max_reject) throw;
      continue;
    }
    if (std::abs(v[0] - v[1]) > tol * (1.0 + std::abs(v[0]))) return false;
    ++t;
  }
  return true;
}

}  // namespace fbvp
