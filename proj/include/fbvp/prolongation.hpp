#pragma once

// Planar point transformations, their lift to third-order jets, and the
// pullback of Lagrangians through a chart.

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "fbvp/calculus.hpp"
#include "fbvp/eval.hpp"
#include "fbvp/jet.hpp"
#include "fbvp/lagrangian.hpp"

namespace fbvp {

/// (x, u) -> (xbar, ubar). Components are expressions in the variables x and u;
/// the optional inverse is written in the same variable names, standing for
/// the barred coordinates.
struct PointTransformation {
  Expr xbar = var("x");
  Expr ubar = var("u");
  std::optional<std::pair<Expr, Expr>> inverse;

  static PointTransformation identity() {
    PointTransformation t;
    t.inverse = std::make_pair(var("x"), var("u"));
    return t;
  }

  static PointTransformation swap() {
    PointTransformation t{var("u"), var("x"), std::make_pair(var("u"), var("x"))};
    return t;
  }

  /// Rotation by the angle `theta`, which may be a constant or a parameter.
  static PointTransformation rotation(const Expr& theta) {
    const Expr c = cos(theta);
    const Expr s = sin(theta);
    const Expr x = var("x");
    const Expr u = var("u");
    return {x * c - u * s, x * s + u * c, std::make_pair(x * c + u * s, u * c - x * s)};
  }

  /// (x, u) -> A (x, u) + b, with inverse when A is invertible.
  static PointTransformation affine(const std::array<double, 4>& a, const std::array<double, 2>& b) {
    const Expr x = var("x");
    const Expr u = var("u");
    PointTransformation t{a[0] * x + a[1] * u + b[0], a[2] * x + a[3] * u + b[1], std::nullopt};
    const double det = a[0] * a[3] - a[1] * a[2];
    if (det != 0.0) {
      const double i00 = a[3] / det, i01 = -a[1] / det, i10 = -a[2] / det, i11 = a[0] / det;
      const Expr xs = x - b[0];
      const Expr us = u - b[1];
      t.inverse = std::make_pair(i00 * xs + i01 * us, i10 * xs + i11 * us);
    }
    return t;
  }

  PointTransformation inverted() const {
    if (!inverse) throw Error("transformation has no inverse");
    return {inverse->first, inverse->second, std::make_pair(xbar, ubar)};
  }

  /// Jacobian determinant xbar_x ubar_u - xbar_u ubar_x as an expression.
  Expr jacobian() const {
    return partial_derivative(xbar, "x") * partial_derivative(ubar, "u") -
           partial_derivative(xbar, "u") * partial_derivative(ubar, "x");
  }

  /// Samples the Jacobian on the box [x0,x1] x [u0,u1]; throws DegenerateJacobian
  /// when it vanishes or changes sign.
  void check_nondegenerate(std::array<double, 2> xs, std::array<double, 2> us, const Bindings& fixed = {},
                           int grid = 20) const {
    Program det(jacobian());
    double sign = 0.0;
    Bindings b = fixed;
    for (int i = 0; i <= grid; ++i) {
      for (int j = 0; j <= grid; ++j) {
        b.set("x", xs[0] + (xs[1] - xs[0]) * i / grid).set("u", us[0] + (us[1] - us[0]) * j / grid);
        const double d = det.evaluate(b)[0];
        if (d == 0.0 || (sign != 0.0 && d * sign < 0.0)) {
          throw DegenerateJacobian("Jacobian determinant vanishes at (" + std::to_string(b.values["x"]) + ", " +
                                   std::to_string(b.values["u"]) + ")");
        }
        sign = d;
      }
    }
  }
};

/// outer after inner.
inline PointTransformation compose(const PointTransformation& outer, const PointTransformation& inner) {
  const std::map<std::string, Expr> into_inner{{"x", inner.xbar}, {"u", inner.ubar}};
  PointTransformation t{substitute(outer.xbar, into_inner), substitute(outer.ubar, into_inner), std::nullopt};
  if (outer.inverse && inner.inverse) {
    const std::map<std::string, Expr> into_outer{{"x", outer.inverse->first}, {"u", outer.inverse->second}};
    t.inverse = std::make_pair(substitute(inner.inverse->first, into_outer),
                               substitute(inner.inverse->second, into_outer));
  }
  return t;
}

/// Lift of a point transformation to third-order jets: F, G, H give the
/// transformed first, second and third derivatives.
struct ProlongedTransformation {
  PointTransformation base;
  Expr F;
  Expr G;
  Expr H;

  /// Transforms a numeric jet. Throws ChartUnsuitable when the image curve has
  /// a vertical tangent (the total derivative of xbar vanishes).
  JetPoint apply(const JetPoint& jet, const Bindings& fixed = {}) const {
    Program prog(std::vector<Expr>{base.xbar, base.ubar, F, G, H});
    Bindings b = fixed;
    jet.bind(b);
    try {
      const auto v = prog.evaluate(b);
      return {v[0], v[1], v[2], v[3], v[4], std::numeric_limits<double>::quiet_NaN()};
    } catch (const DomainError& err) {
      throw ChartUnsuitable(std::string("jet not representable in target coordinates: ") + err.what());
    }
  }
};

inline ProlongedTransformation prolong(const PointTransformation& phi) {
  if (max_jet_order(phi.xbar) > 0 || max_jet_order(phi.ubar) > 0) {
    throw OrderError("point transformation components may depend on x and u only");
  }
  const Expr dx = total_derivative(phi.xbar, 1);
  if (dx.is_const(0.0)) throw DegenerateJacobian("total derivative of xbar vanishes identically");
  ProlongedTransformation pt;
  pt.base = phi;
  pt.F = total_derivative(phi.ubar, 1) / dx;
  pt.G = total_derivative(pt.F, 2) / dx;
  pt.H = total_derivative(pt.G, 3) / dx;
  return pt;
}

/// dubar - F dxbar expanded in {dx, du}, minus mu (du - p dx) with
/// mu = ubar_u - F xbar_u. Returns the dx and du coefficients of the remainder;
/// both vanish for a correct lift.
inline std::pair<Expr, Expr> contact_residual(const ProlongedTransformation& pt) {
  const Expr xb_x = partial_derivative(pt.base.xbar, "x");
  const Expr xb_u = partial_derivative(pt.base.xbar, "u");
  const Expr ub_x = partial_derivative(pt.base.ubar, "x");
  const Expr ub_u = partial_derivative(pt.base.ubar, "u");
  const Expr cx = ub_x - pt.F * xb_x;
  const Expr cu = ub_u - pt.F * xb_u;
  const Expr mu = cu;
  return {cx + mu * var("p"), cu - mu};
}

/// Residuals of the second and third contact conditions: the dx coefficient of
/// dF - G dxbar and dG - H dxbar after removing the contact-form multiples.
inline std::pair<Expr, Expr> higher_contact_residuals(const ProlongedTransformation& pt) {
  const Expr dx = total_derivative(pt.base.xbar, 1);
  return {total_derivative(pt.F, 2) - pt.G * dx, total_derivative(pt.G, 3) - pt.H * dx};
}

/// Pullback of a Lagrangian through `chart`, a map from barred to original
/// coordinates with its lifts: L(x(xb,ub), u(xb,ub), f, g) (x_xb + pb x_ub).
/// The result is written in the variables x, u, p, q standing for the barred ones.
inline Lagrangian pullback_lagrangian(const Lagrangian& lag, const ProlongedTransformation& chart) {
  if (lag.order() > 2) throw OrderError("pullback needs a Lagrangian of order at most 2");
  std::map<std::string, Expr> repl{{"x", chart.base.xbar}, {"u", chart.base.ubar}, {"p", chart.F}};
  if (lag.order() == 2) repl["q"] = chart.G;
  const Expr total_jacobian = total_derivative(chart.base.xbar, 1);
  return Lagrangian(substitute(lag.density(), repl) * total_jacobian, lag.order());
}

}  // namespace fbvp
