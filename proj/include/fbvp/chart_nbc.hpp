#pragma once

// Natural boundary conditions evaluated in a chart anchored on the boundary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbvp/geometry.hpp"
#include "fbvp/variational.hpp"

namespace fbvp {

/// The chart NBC pair of a Lagrangian, built once from a chart template and
/// evaluated at any anchor gamma(t0) for the jet of a curve through it.
class ChartNbc {
 public:
  struct Value {
    double first = 0.0;
    double second = 0.0;
    /// first * J^2 / (-Delta): equals L_q in original coordinates.
    double first_normalized = 0.0;
    /// second * J / Delta
    double second_normalized = 0.0;
    JetPoint barred;
    double J = 0.0;
    double Delta = 0.0;
  };

  ChartNbc(const Lagrangian& lag, ChartKind kind) : kind_(kind), order_(lag.order()) {
    const PointTransformation tmpl = chart_template(kind);
    const ProlongedTransformation pt = prolong(tmpl);
    const NbcPair nbc = nbc_in_chart(lag, pt);
    partials_ = Program(std::vector<Expr>{partial_derivative(tmpl.xbar, "x"), partial_derivative(tmpl.xbar, "u"),
                                          partial_derivative(tmpl.ubar, "x"), partial_derivative(tmpl.ubar, "u")});
    lifts_ = Program(std::vector<Expr>{pt.G, pt.H});
    nbc_ = Program(std::vector<Expr>{nbc.first, nbc.second});
  }

  ChartKind kind() const noexcept { return kind_; }

  /// `jet` is the original jet (x, u, p, q, r) of a curve through gamma(t0);
  /// only x and u are taken from gamma itself. `fixed` binds the Lagrangian's
  /// parameters and named functions.
  Value at(const BoundaryCurve& gamma, double t0, const JetPoint& jet, const Bindings& fixed) const {
    return evaluate(chart_bindings(kind_, gamma, t0), jet, fixed);
  }

  /// Affine charts only: the anchor is given by its frame.
  Value at(const Frame& f, const JetPoint& jet, const Bindings& fixed) const {
    if (kind_ != ChartKind::Affine) throw Error("a frame determines only the affine chart");
    Bindings cb;
    cb.set("chart_cx", f.point.x()).set("chart_cy", f.point.y());
    cb.set("chart_nx", f.normal.x()).set("chart_ny", f.normal.y());
    cb.set("chart_tx", f.tangent.x()).set("chart_ty", f.tangent.y());
    return evaluate(cb, jet, fixed);
  }

 private:
  Value evaluate(const Bindings& cb, const JetPoint& jet, const Bindings& fixed) const {
    Bindings b = fixed;
    for (const auto& [k, v] : cb.values) b.values[k] = v;
    for (const auto& [k, f] : cb.functions) b.functions[k] = f;
    b.set("x", 0.0).set("u", 0.0);
    const auto d = partials_.evaluate(b);
    const double Xx = d[0], Xu = d[1], Ux = d[2], Uu = d[3];
    const double den = Uu - jet.p * Xu;
    if (!(std::abs(den) > 1e-12)) throw ChartUnsuitable("curve is tangent to the boundary at the anchor");
    Value v;
    v.barred.x = v.barred.u = 0.0;
    v.barred.p = (jet.p * Xx - Ux) / den;
    v.J = Xx + v.barred.p * Xu;
    v.Delta = Xu * Ux - Xx * Uu;
    if (!(std::abs(v.J) > 1e-12)) throw ChartUnsuitable("total Jacobian of the chart vanishes at the anchor");
    b.set("p", v.barred.p);
    if (order_ == 2) {
      // G is affine in qbar, H affine in rbar.
      b.set("q", 0.0).set("r", 0.0);
      const auto l0 = lifts_.evaluate(b);
      b.set("q", 1.0);
      const double g1 = lifts_.evaluate(b)[0];
      v.barred.q = (jet.q - l0[0]) / (g1 - l0[0]);
      b.set("q", v.barred.q).set("r", 0.0);
      const double h0 = lifts_.evaluate(b)[1];
      b.set("r", 1.0);
      const double h1 = lifts_.evaluate(b)[1];
      v.barred.r = (jet.r - h0) / (h1 - h0);
      b.set("r", v.barred.r);
    } else {
      b.set("q", 0.0).set("r", 0.0);
    }
    const auto n = nbc_.evaluate(b);
    v.first = n[0];
    v.second = n[1];
    v.first_normalized = -v.first * v.J * v.J / v.Delta;
    v.second_normalized = v.second * v.J / v.Delta;
    return v;
  }

  ChartKind kind_;
  int order_;
  Program partials_;
  Program lifts_;
  Program nbc_;
};

struct StationarityReport {
  double euler_lagrange = 0.0;  ///< max |E(y)| at the interior samples
  double incidence = 0.0;       ///< max distance of the endpoints from their anchors
  double nbc = 0.0;             ///< max |normalised chart NBC| over both endpoints

  double max() const { return std::max({euler_lagrange, incidence, nbc}); }
};

/// Residuals of the free boundary problem for the graph of y joining the
/// boundary points a and b of `domain`: the Euler-Lagrange expression at
/// `samples` interior abscissae, incidence, and the chart NBCs at both ends.
inline StationarityReport stationarity_residuals(const Lagrangian& lag, const Domain& domain,
                                                 const NamedFunction& y, const BoundaryPoint& a,
                                                 const BoundaryPoint& b, ChartKind kind, const Bindings& fixed = {},
                                                 int samples = 50) {
  StationarityReport rep;
  const ChartNbc chart(lag, kind);
  const Vec2 pa = domain.point(a), pb = domain.point(b);
  const Program el(euler_lagrange(lag));
  for (int i = 1; i < samples; ++i) {
    const double x = pa.x() + (pb.x() - pa.x()) * i / samples;
    Bindings jb = fixed;
    JetPoint::of(y, x).bind(jb);
    rep.euler_lagrange = std::max(rep.euler_lagrange, std::abs(el.evaluate(jb)[0]));
  }
  for (const BoundaryPoint& e : {a, b}) {
    const Vec2 P = domain.point(e);
    const JetPoint j = JetPoint::of(y, P.x());
    rep.incidence = std::max(rep.incidence, std::abs(j.u - P.y()));
    const ChartNbc::Value v = chart.at(domain.pieces.at(e.piece), e.t, j, fixed);
    rep.nbc = std::max({rep.nbc, std::abs(v.first_normalized), std::abs(v.second_normalized)});
  }
  return rep;
}

}  // namespace fbvp
