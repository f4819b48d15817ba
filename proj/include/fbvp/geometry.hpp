#pragma once

// Domain boundaries, boundary-adapted charts and admissible curves.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fbvp/calculus.hpp"
#include "fbvp/eval.hpp"
#include "fbvp/jet.hpp"
#include "fbvp/parser.hpp"
#include "fbvp/prolongation.hpp"
#include "fbvp/stencil.hpp"

namespace fbvp {

using Vec2 = Eigen::Vector2d;

inline Vec2 rot90ccw(const Vec2& v) { return {-v.y(), v.x()}; }

struct Frame {
  Vec2 point;
  Vec2 tangent;
  Vec2 normal;  ///< inward
};

/// A boundary piece gamma(t) = (X(t), U(t)). Closed pieces have period T > 0;
/// open pieces (period 0) live on the parameter interval `range`.
class BoundaryCurve {
 public:
  BoundaryCurve(Expr X, Expr U, double period, bool interior_left = true,
                std::pair<double, double> range = {0.0, 0.0}, const Bindings& fixed = {})
      : X_(std::move(X)), U_(std::move(U)), period_(period), interior_left_(interior_left), range_(range) {
    if (period_ < 0) throw Error("boundary period must be nonnegative");
    if (period_ > 0) range_ = {0.0, period_};
    if (!(range_.second > range_.first)) throw Error("boundary parameter range is empty");
    for (const auto& s : free_symbols(X_)) check_symbol(s, fixed);
    for (const auto& s : free_symbols(U_)) check_symbol(s, fixed);
    fx_ = function_from_expr(X_, "t", 8, fixed);
    fu_ = function_from_expr(U_, "t", 8, fixed);
  }

  /// Parses X(t), U(t); `t` is the curve parameter.
  static BoundaryCurve parse(std::string_view X, std::string_view U, double period, bool interior_left = true,
                             std::pair<double, double> range = {0.0, 0.0}, ParseContext ctx = {},
                             const Bindings& fixed = {}) {
    ctx.parameter("t");
    return BoundaryCurve(parse_expression(X, ctx), parse_expression(U, ctx), period, interior_left, range, fixed);
  }

  static BoundaryCurve circle(double radius = 1.0, Vec2 center = Vec2::Zero()) {
    const Expr t = var("t");
    return BoundaryCurve(center.x() + radius * cos(t), center.y() + radius * sin(t), 2 * M_PI);
  }

  static BoundaryCurve ellipse(double a, double b) {
    const Expr t = var("t");
    return BoundaryCurve(a * cos(t), b * sin(t), 2 * M_PI);
  }

  /// The line {x = x0} parametrised by gamma(t) = (x0, t), t in [t_min, t_max].
  static BoundaryCurve vertical_line(double x0, bool interior_left, double t_min, double t_max) {
    return BoundaryCurve(constant(x0), var("t"), 0.0, interior_left, {t_min, t_max});
  }

  const Expr& X() const noexcept { return X_; }
  const Expr& U() const noexcept { return U_; }
  double period() const noexcept { return period_; }
  bool closed() const noexcept { return period_ > 0; }
  bool interior_left() const noexcept { return interior_left_; }
  std::pair<double, double> range() const noexcept { return range_; }
  const NamedFunction& x_function() const noexcept { return fx_; }
  const NamedFunction& u_function() const noexcept { return fu_; }

  double reduce(double t) const {
    if (!closed()) return t;
    double r = std::fmod(t, period_);
    if (r < 0) r += period_;
    if (r >= period_) r = 0.0;
    return r;
  }

  Vec2 derivative(double t, int k) const { return {fx_(t, k), fu_(t, k)}; }
  Vec2 point(double t) const { return derivative(t, 0); }
  double speed(double t) const { return derivative(t, 1).norm(); }

  Frame frame(double t) const {
    t = reduce(t);
    const Vec2 tangent = derivative(t, 1).normalized();
    const Vec2 normal = interior_left_ ? rot90ccw(tangent) : Vec2(-rot90ccw(tangent));
    return {point(t), tangent, normal};
  }

  /// Signed curvature with respect to the inward normal (positive for a convex domain).
  double curvature(double t) const {
    const Vec2 d1 = derivative(t, 1);
    const Vec2 d2 = derivative(t, 2);
    const double k = (d1.x() * d2.y() - d1.y() * d2.x()) / std::pow(d1.norm(), 3);
    return interior_left_ ? k : -k;
  }

  /// Checks regularity, closure and simplicity on a sampling grid.
  void validate(int samples = 400) const {
    std::vector<Vec2> pts;
    for (int i = 0; i <= samples; ++i) {
      const double t = range_.first + (range_.second - range_.first) * i / samples;
      if (!(speed(t) > 1e-12)) throw Error("boundary curve is not regular at t = " + std::to_string(t));
      pts.push_back(point(t));
    }
    if (closed() && (point(0.0) - point(period_)).norm() > 1e-12) throw Error("boundary curve is not closed");
    const std::size_t m = pts.size() - 1;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 2; j < m; ++j) {
        if (closed() && i == 0 && j == m - 1) continue;
        if (segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1])) {
          throw Error("boundary curve self-intersects");
        }
      }
    }
  }

 private:
  static void check_symbol(const std::string& s, const Bindings& fixed) {
    if (s != "t" && !fixed.values.count(s)) throw UnboundSymbol(s);
  }

  static bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto cross = [](const Vec2& o, const Vec2& p, const Vec2& q) {
      return (p.x() - o.x()) * (q.y() - o.y()) - (p.y() - o.y()) * (q.x() - o.x());
    };
    const double eps = 1e-12 * (b - a).norm() * (d - c).norm();
    auto side = [eps](double v) { return std::abs(v) <= eps ? 0 : (v > 0 ? 1 : -1); };
    const int s1 = side(cross(c, d, a)), s2 = side(cross(c, d, b));
    const int s3 = side(cross(a, b, c)), s4 = side(cross(a, b, d));
    if (s1 == 0 && s2 == 0) return false;
    return s1 * s2 <= 0 && s3 * s4 <= 0;
  }

  Expr X_;
  Expr U_;
  double period_;
  bool interior_left_;
  std::pair<double, double> range_;
  NamedFunction fx_;
  NamedFunction fu_;
};

inline Frame curve_frame(const BoundaryCurve& gamma, double t) { return gamma.frame(t); }

/// A point on a domain boundary: piece index and curve parameter.
struct BoundaryPoint {
  std::size_t piece = 0;
  double t = 0.0;
};

/// A planar region given by its boundary pieces: one closed curve, or open
/// pieces such as the two walls of a strip.
struct Domain {
  std::vector<BoundaryCurve> pieces;

  static Domain enclosed_by(BoundaryCurve gamma) { return Domain{{std::move(gamma)}}; }

  /// [a, b] x [-height, height], walls only.
  static Domain strip(double a, double b, double height) {
    if (!(b > a)) throw Error("strip needs a < b");
    return Domain{{BoundaryCurve::vertical_line(a, false, -height, height),
                   BoundaryCurve::vertical_line(b, true, -height, height)}};
  }

  /// Image under v -> A v + c; boundary parameters are kept.
  Domain affine_image(const Eigen::Matrix2d& A, const Vec2& c) const {
    if (!(std::abs(A.determinant()) > 1e-12)) throw DegenerateJacobian("affine map is singular");
    Domain out;
    for (const auto& g : pieces) {
      out.pieces.emplace_back(A(0, 0) * g.X() + A(0, 1) * g.U() + c.x(), A(1, 0) * g.X() + A(1, 1) * g.U() + c.y(),
                              g.period(), g.interior_left() == (A.determinant() > 0), g.range());
    }
    return out;
  }

  Vec2 point(const BoundaryPoint& bp) const { return pieces.at(bp.piece).point(bp.t); }
  Frame frame(const BoundaryPoint& bp) const { return pieces.at(bp.piece).frame(bp.t); }
};

// ---------------------------------------------------------------------------
// Charts

enum class ChartKind { Affine, Tubular };

inline const char* to_string(ChartKind k) { return k == ChartKind::Affine ? "affine" : "tubular"; }

/// Map from barred to original coordinates sending (0, 0) to gamma(t0), with
/// the boundary along the ubar axis and the interior at xbar > 0.
struct BoundaryChart {
  PointTransformation transformation;
  double t0 = 0.0;
  ChartKind kind = ChartKind::Affine;
  double delta = std::numeric_limits<double>::infinity();
  /// Named functions (and parameters) the transformation refers to.
  Bindings bindings;

  Vec2 operator()(double xb, double ub) const {
    Bindings b = bindings;
    b.set("x", xb).set("u", ub);
    const auto v = Program(std::vector<Expr>{transformation.xbar, transformation.ubar}).evaluate(b);
    return {v[0], v[1]};
  }
};

/// Symbolic chart with the anchor data as parameters. Affine:
/// (chart_cx, chart_cy) + xbar (chart_nx, chart_ny) + ubar (chart_tx, chart_ty).
/// Tubular: gamma(s) + xbar N(s) with s = chart_t0 + ubar / chart_speed, where
/// gamma = (gamma_x, gamma_u) and N = chart_sign * rot90(gamma') / |gamma'|.
inline PointTransformation chart_template(ChartKind kind) {
  const Expr xb = var("x");
  const Expr ub = var("u");
  if (kind == ChartKind::Affine) {
    return {var("chart_cx") + xb * var("chart_nx") + ub * var("chart_tx"),
            var("chart_cy") + xb * var("chart_ny") + ub * var("chart_ty"), std::nullopt};
  }
  const Expr s = var("chart_t0") + ub / var("chart_speed");
  const Expr dx = func("gamma_x", 1, s);
  const Expr du = func("gamma_u", 1, s);
  const Expr len = sqrt(dx * dx + du * du);
  const Expr sign = var("chart_sign");
  return {func("gamma_x", 0, s) - xb * sign * du / len, func("gamma_u", 0, s) + xb * sign * dx / len, std::nullopt};
}

/// Values of the chart_template parameters for the anchor gamma(t0).
inline Bindings chart_bindings(ChartKind kind, const BoundaryCurve& gamma, double t0) {
  Bindings b;
  if (kind == ChartKind::Affine) {
    const Frame f = gamma.frame(t0);
    b.set("chart_cx", f.point.x()).set("chart_cy", f.point.y());
    b.set("chart_nx", f.normal.x()).set("chart_ny", f.normal.y());
    b.set("chart_tx", f.tangent.x()).set("chart_ty", f.tangent.y());
  } else {
    b.set("chart_t0", t0).set("chart_speed", gamma.speed(t0)).set("chart_sign", gamma.interior_left() ? 1.0 : -1.0);
    b.define("gamma_x", gamma.x_function()).define("gamma_u", gamma.u_function());
  }
  return b;
}

namespace detail {

inline PointTransformation instantiate(const PointTransformation& tmpl, const Bindings& b) {
  std::map<std::string, Expr> repl;
  for (const auto& [name, value] : b.values) repl[name] = constant(value);
  return {substitute(tmpl.xbar, repl), substitute(tmpl.ubar, repl), std::nullopt};
}

}  // namespace detail

inline BoundaryChart affine_chart(const BoundaryCurve& gamma, double t0) {
  const Frame f = gamma.frame(t0);
  BoundaryChart c;
  c.transformation = PointTransformation::affine({f.normal.x(), f.tangent.x(), f.normal.y(), f.tangent.y()},
                                                 {f.point.x(), f.point.y()});
  c.t0 = gamma.reduce(t0);
  c.kind = ChartKind::Affine;
  return c;
}

/// Normal-offset chart that maps {xbar = 0} onto the boundary exactly. Throws
/// ReachExceeded when its Jacobian degenerates or changes sign on [-delta, delta]^2.
inline BoundaryChart tubular_chart(const BoundaryCurve& gamma, double t0, double delta) {
  if (!(delta > 0)) throw Error("tubular chart needs delta > 0");
  BoundaryChart c;
  c.t0 = gamma.reduce(t0);
  c.kind = ChartKind::Tubular;
  c.delta = delta;
  Bindings b = chart_bindings(ChartKind::Tubular, gamma, c.t0);
  c.transformation = detail::instantiate(chart_template(ChartKind::Tubular), b);
  b.values.clear();
  c.bindings = b;

  Program det(c.transformation.jacobian());
  Bindings e = c.bindings;
  const int grid = 50;
  double reference = 0.0;
  for (int i = -grid; i <= grid; ++i) {
    for (int j = -grid; j <= grid; ++j) {
      e.set("x", delta * i / grid).set("u", delta * j / grid);
      const double d = det.evaluate(e)[0];
      if (i == 0 && j == 0) continue;
      if (reference == 0.0) reference = d;
      if (!(std::abs(d) > 1e-12) || d * reference < 0) {
        throw ReachExceeded("tubular chart degenerates at xbar = " + std::to_string(delta * i / grid) +
                            ", ubar = " + std::to_string(delta * j / grid));
      }
    }
  }
  return c;
}

/// Distance from p to the boundary piece and the parameter of the closest point.
inline std::pair<double, double> distance(const Vec2& p, const BoundaryCurve& gamma, int samples = 720) {
  const auto [lo, hi] = gamma.range();
  double best_t = lo;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double t = lo + (hi - lo) * i / samples;
    const double d = (gamma.point(t) - p).squaredNorm();
    if (d < best) best = d, best_t = t;
  }
  // Newton on the stationarity condition (gamma - p) . gamma' = 0.
  double t = best_t;
  const double h = (hi - lo) / samples;
  for (int it = 0; it < 30; ++it) {
    const Vec2 r = gamma.point(t) - p;
    const Vec2 d1 = gamma.derivative(t, 1);
    const Vec2 d2 = gamma.derivative(t, 2);
    const double g = r.dot(d1);
    const double dg = d1.squaredNorm() + r.dot(d2);
    if (dg <= 0) break;
    double next = std::clamp(t - g / dg, best_t - h, best_t + h);
    if (!gamma.closed()) next = std::clamp(next, lo, hi);
    if (std::abs(next - t) < 1e-15 * std::max(1.0, std::abs(t))) {
      t = next;
      break;
    }
    t = next;
  }
  const double d = (gamma.point(t) - p).norm();
  if (d * d < best) return {d, gamma.reduce(t)};
  return {std::sqrt(best), gamma.reduce(best_t)};
}

inline std::pair<double, BoundaryPoint> distance(const Vec2& p, const Domain& domain) {
  double best = std::numeric_limits<double>::infinity();
  BoundaryPoint bp;
  for (std::size_t i = 0; i < domain.pieces.size(); ++i) {
    const auto [d, t] = distance(p, domain.pieces[i]);
    if (d < best) best = d, bp = {i, t};
  }
  return {best, bp};
}

// ---------------------------------------------------------------------------
// Sampled curves

/// Samples of a curve: a graph u(x) over strictly increasing abscissae, or a
/// parametric polyline. Graph derivatives come from an exact callable when one
/// is attached and from fourth-order stencils otherwise.
class SampledCurve {
 public:
  static SampledCurve graph(std::vector<double> xs, std::vector<double> us, NamedFunction exact = {}) {
    if (xs.size() != us.size() || xs.size() < 2) throw Error("graph samples need matching sizes >= 2");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(us[i])) throw Error("graph samples must be finite");
      if (i > 0 && !(xs[i] > xs[i - 1])) throw Error("graph abscissae must be strictly increasing");
    }
    SampledCurve c;
    c.graph_ = true;
    c.xs_ = std::move(xs);
    c.us_ = std::move(us);
    c.exact_ = std::move(exact);
    return c;
  }

  /// Uniform samples of y on [a, b] with n intervals; y also supplies exact derivatives.
  static SampledCurve graph(const NamedFunction& y, double a, double b, int n) {
    std::vector<double> xs, us;
    for (int i = 0; i <= n; ++i) {
      const double x = i == n ? b : a + (b - a) * i / n;
      xs.push_back(x);
      us.push_back(y(x, 0));
    }
    return graph(std::move(xs), std::move(us), y);
  }

  static SampledCurve parametric(const std::vector<Vec2>& points) {
    if (points.size() < 2) throw Error("parametric samples need at least two points");
    SampledCurve c;
    c.graph_ = false;
    for (const auto& p : points) {
      if (!p.allFinite()) throw Error("parametric samples must be finite");
      c.xs_.push_back(p.x());
      c.us_.push_back(p.y());
    }
    return c;
  }

  bool is_graph() const noexcept { return graph_; }
  bool has_exact() const noexcept { return static_cast<bool>(exact_); }
  std::size_t size() const noexcept { return xs_.size(); }
  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& us() const noexcept { return us_; }
  Vec2 point(std::size_t i) const { return {xs_[i], us_[i]}; }
  double a() const { return xs_.front(); }
  double b() const { return xs_.back(); }

  /// k-th derivative of the graph at node i.
  double derivative(std::size_t i, int k) const {
    if (!graph_) throw Error("derivatives need graph samples");
    if (k == 0) return us_[i];
    if (exact_) return exact_(xs_[i], k);
    return stencil_derivative(xs_, us_, i, k);
  }

  JetPoint jet(std::size_t i, int order = 4) const {
    JetPoint j{xs_[i], us_[i], 0, 0, 0, 0};
    if (order >= 1) j.p = derivative(i, 1);
    if (order >= 2) j.q = derivative(i, 2);
    if (order >= 3) j.r = derivative(i, 3);
    if (order >= 4) j.s = derivative(i, 4);
    return j;
  }

  /// Unit tangent at node i, oriented along increasing index.
  Vec2 tangent(std::size_t i) const {
    if (graph_) return Vec2(1.0, derivative(i, 1)).normalized();
    if (size() < 5) return (point(std::min(i + 1, size() - 1)) - point(i > 0 ? i - 1 : 0)).normalized();
    std::vector<double> idx(size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<double>(k);
    return Vec2(stencil_derivative(idx, xs_, i, 1), stencil_derivative(idx, us_, i, 1)).normalized();
  }

 private:
  bool graph_ = true;
  std::vector<double> xs_;
  std::vector<double> us_;
  NamedFunction exact_;
};

/// Endpoints on the boundary within tol, interior samples off it, and
/// endpoint tangents at least `angle_floor` (radians) away from the boundary tangent.
inline bool is_admissible(const SampledCurve& L, const Domain& domain, double tol, double angle_floor = 1e-3) {
  const std::size_t n = L.size();
  for (std::size_t i : {std::size_t{0}, n - 1}) {
    const auto [d, bp] = distance(L.point(i), domain);
    if (d > tol) return false;
    const Vec2 gt = domain.frame(bp).tangent;
    const double s = std::abs(gt.x() * L.tangent(i).y() - gt.y() * L.tangent(i).x());
    if (std::asin(std::min(1.0, s)) <= angle_floor) return false;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (distance(L.point(i), domain).first <= tol) return false;
  }
  return true;
}

inline bool is_admissible(const SampledCurve& L, const BoundaryCurve& gamma, double tol, double angle_floor = 1e-3) {
  return is_admissible(L, Domain::enclosed_by(gamma), tol, angle_floor);
}

}  // namespace fbvp
