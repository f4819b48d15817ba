#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "fbvp/calculus.hpp"
#include "fbvp/parser.hpp"

namespace fbvp {

/// Horizontal one-form L dx with L a function on the jet space of order 1 or 2.
class Lagrangian {
 public:
  Lagrangian() = default;

  Lagrangian(Expr density, int order) : density_(std::move(density)), order_(order) {
    if (order_ != 1 && order_ != 2) throw OrderError("Lagrangian order must be 1 or 2");
    const int found = max_jet_order(density_);
    if (found > order_) {
      throw OrderError("density of jet order " + std::to_string(found) + " declared as order " +
                       std::to_string(order_));
    }
  }

  static Lagrangian parse(std::string_view text, int order, const ParseContext& ctx = {}) {
    return Lagrangian(parse_expression(text, ctx), order);
  }

  const Expr& density() const noexcept { return density_; }
  int order() const noexcept { return order_; }

  /// Parameters and named functions the density refers to.
  std::set<std::string> parameters() const {
    std::set<std::string> out;
    for (const auto& s : free_symbols(density_)) {
      if (!is_jet_variable(s)) out.insert(s);
    }
    return out;
  }
  std::set<std::string> functions() const { return named_functions(density_); }

 private:
  Expr density_;
  int order_ = 1;
};

}  // namespace fbvp
