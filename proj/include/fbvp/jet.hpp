#pragma once

#include <cmath>
#include <functional>

#include "fbvp/eval.hpp"

namespace fbvp {

/// A point of the fourth jet space: abscissa, ordinate and four derivatives.
struct JetPoint {
  double x = 0.0;
  double u = 0.0;
  double p = 0.0;
  double q = 0.0;
  double r = 0.0;
  double s = 0.0;

  /// Jet of y(x) at x, where y(x, k) returns the k-th derivative.
  static JetPoint of(const std::function<double(double, int)>& y, double x) {
    return {x, y(x, 0), y(x, 1), y(x, 2), y(x, 3), y(x, 4)};
  }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(u) && std::isfinite(p) && std::isfinite(q) &&
           std::isfinite(r) && std::isfinite(s);
  }

  /// Adds the jet coordinates to `b` under the names x, u, p, q, r, s.
  Bindings& bind(Bindings& b) const {
    b.set("x", x).set("u", u).set("p", p).set("q", q).set("r", r).set("s", s);
    return b;
  }

  Bindings bindings(Bindings b = {}) const {
    bind(b);
    return b;
  }
};

}  // namespace fbvp
