#pragma once

// Free chords: straight segments whose endpoints slide on the boundary and
// satisfy an order-1 natural boundary condition there. For the length
// functional these are the segments meeting the boundary orthogonally.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fbvp/chart_nbc.hpp"
#include "fbvp/geometry.hpp"
#include "fbvp/solve.hpp"

namespace fbvp {

inline Lagrangian length_lagrangian() { return Lagrangian::parse("sqrt(1 + p^2)", 1); }

namespace detail {

inline Frame rotated(const Frame& f, double angle) {
  const Eigen::Rotation2Dd R(angle);
  return {R * f.point, R * f.tangent, R * f.normal};
}

}  // namespace detail

/// An order-1 Lagrangian whose extremals include all straight lines, on a domain.
class ChordProblem {
 public:
  ChordProblem(Lagrangian lag, Domain domain, Bindings fixed = {})
      : lag_(std::move(lag)), domain_(std::move(domain)), fixed_(std::move(fixed)), nbc_(lag_, ChartKind::Affine) {
    if (lag_.order() != 1) throw OrderError("chord problems need an order-1 Lagrangian");
    if (domain_.pieces.empty()) throw Error("domain has no boundary");
    SamplingOptions opt;
    opt.functions = fixed_.functions;
    for (const auto& [k, v] : fixed_.values) opt.fixed[k] = v;
    opt.fixed["q"] = 0.0;
    if (!exprs_equal_numeric(euler_lagrange(lag_), constant(0.0), 40, 1e-10, opt)) {
      throw Error("straight lines are not extremals of this Lagrangian");
    }
    SamplingOptions rot = opt;
    rot.fixed.erase("q");
    rot.ranges["p"] = {-0.5, 0.5};
    invariant_ = true;
    for (double theta : {0.1, -0.25, 0.3}) {
      const Lagrangian pulled =
          pullback_lagrangian(lag_, prolong(PointTransformation::rotation(constant(theta))));
      if (!exprs_equal_numeric(pulled.density(), lag_.density(), 40, 1e-10, rot)) {
        invariant_ = false;
        break;
      }
    }
  }

  const Lagrangian& lagrangian() const noexcept { return lag_; }
  const Domain& domain() const noexcept { return domain_; }
  const Bindings& bindings() const noexcept { return fixed_; }

  /// Rotation-invariant Lagrangians are evaluated in a frame where the chord
  /// is horizontal, so vertical chords are handled.
  bool rotation_invariant() const noexcept { return invariant_; }

  /// Normalised NBC at both endpoints of the chord from a to b.
  Vec2 residual(const BoundaryPoint& a, const BoundaryPoint& b) const {
    const Vec2 A = domain_.point(a), B = domain_.point(b);
    const Vec2 d = B - A;
    if (!(d.norm() > 1e-12)) throw ChartUnsuitable("chord endpoints coincide");
    auto at = [&](const BoundaryPoint& e) {
      const Frame f = domain_.frame(e);
      if (invariant_) {
        const Frame g = detail::rotated(f, -std::atan2(d.y(), d.x()));
        return nbc_.at(g, {g.point.x(), g.point.y(), 0, 0, 0, 0}, fixed_).second_normalized;
      }
      if (!(std::abs(d.x()) > 1e-12 * d.norm())) throw ChartUnsuitable("chord is vertical");
      return nbc_.at(f, {f.point.x(), f.point.y(), d.y() / d.x(), 0, 0, 0}, fixed_).second_normalized;
    };
    return {at(a), at(b)};
  }

  /// Chord samples, endpoints included.
  SampledCurve chord(const BoundaryPoint& a, const BoundaryPoint& b, int n = 100) const {
    const Vec2 A = domain_.point(a), B = domain_.point(b);
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) pts.push_back(A + (B - A) * (static_cast<double>(i) / n));
    return SampledCurve::parametric(pts);
  }

 private:
  Lagrangian lag_;
  Domain domain_;
  Bindings fixed_;
  ChartNbc nbc_;
  bool invariant_ = false;
};

/// Unknowns (t_a, t_b) with a on piece `piece_a` and b on `piece_b`.
inline ResidualSystem chord_system(const ChordProblem& prob, std::size_t piece_a, std::size_t piece_b) {
  ResidualSystem sys;
  sys.n = sys.m = 2;
  sys.residual = [&prob, piece_a, piece_b](const Vector& x) {
    const Vec2 r = prob.residual({piece_a, x[0]}, {piece_b, x[1]});
    return Vector{{r.x(), r.y()}};
  };
  return sys;
}

struct ChordSeed {
  std::size_t piece_a = 0;
  std::size_t piece_b = 0;
  double t_a = 0.0;
  double t_b = 0.0;
};

struct ChordSolution {
  BoundaryPoint a;
  BoundaryPoint b;
  double residual = 0.0;
  int nullity = 0;
};

struct ChordOptions {
  double tol = 1e-12;
  int max_iter = 60;
  double dedupe = 1e-6;
  double nullity_tol = 1e-6;
  double admissibility_tol = 1e-6;
};

struct ChordReport {
  std::vector<ChordSolution> solutions;
  int converged_seeds = 0;
  int failed_seeds = 0;
  std::vector<std::string> failures;
};

namespace detail {

inline double boundary_distance(const Domain& dom, const BoundaryPoint& p, const BoundaryPoint& q) {
  if (p.piece != q.piece) return std::numeric_limits<double>::infinity();
  const BoundaryCurve& g = dom.pieces[p.piece];
  return g.closed() ? std::abs(wrapped_delta(p.t - q.t, g.period())) : std::abs(p.t - q.t);
}

}  // namespace detail

/// Newton from each seed; converged chords are deduplicated modulo endpoint
/// swap and kept if admissible.
inline ChordReport solve_chords(const ChordProblem& prob, const std::vector<ChordSeed>& seeds,
                                const ChordOptions& opt = {}) {
  if (seeds.empty()) throw Error("solve_chords needs at least one seed");
  const Domain& dom = prob.domain();
  ChordReport rep;
  for (const ChordSeed& s : seeds) {
    const ResidualSystem sys = chord_system(prob, s.piece_a, s.piece_b);
    const NewtonResult r = newton_solve(sys, Vector{{s.t_a, s.t_b}}, {opt.tol, opt.max_iter});
    if (!r.converged) {
      ++rep.failed_seeds;
      rep.failures.push_back(r.message);
      continue;
    }
    ++rep.converged_seeds;
    const BoundaryPoint a{s.piece_a, dom.pieces[s.piece_a].reduce(r.x[0])};
    const BoundaryPoint b{s.piece_b, dom.pieces[s.piece_b].reduce(r.x[1])};
    if ((dom.point(a) - dom.point(b)).norm() < 1e-6) {
      rep.failures.push_back("endpoints collapsed");
      continue;
    }
    if (!is_admissible(prob.chord(a, b), dom, opt.admissibility_tol)) {
      rep.failures.push_back("chord is not admissible");
      continue;
    }
    bool duplicate = false;
    for (const auto& k : rep.solutions) {
      const double same = std::max(detail::boundary_distance(dom, k.a, a), detail::boundary_distance(dom, k.b, b));
      const double swapped =
          std::max(detail::boundary_distance(dom, k.a, b), detail::boundary_distance(dom, k.b, a));
      if (std::min(same, swapped) <= opt.dedupe) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    const Vector x{{a.t, b.t}};
    rep.solutions.push_back({a, b, inf_norm(sys(x)), nullity(sys.jacobian_at(x), opt.nullity_tol)});
  }
  return rep;
}

/// n x n parameter grid over each ordered pair of pieces (a single piece is
/// paired with itself), skipping coincident endpoints.
inline std::vector<ChordSeed> grid_chord_seeds(const Domain& dom, int n) {
  if (n < 1) throw Error("seed grid needs n >= 1");
  std::vector<ChordSeed> out;
  auto param = [&](const BoundaryCurve& g, int i) {
    const auto [lo, hi] = g.range();
    return g.closed() ? lo + (hi - lo) * i / n : lo + (hi - lo) * (i + 0.5) / n;
  };
  for (std::size_t pa = 0; pa < dom.pieces.size(); ++pa) {
    for (std::size_t pb = pa; pb < dom.pieces.size(); ++pb) {
      if (pa == pb && dom.pieces.size() > 1) continue;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double ta = param(dom.pieces[pa], i) + 0.01, tb = param(dom.pieces[pb], j) + 0.02;
          if ((dom.pieces[pa].point(ta) - dom.pieces[pb].point(tb)).norm() < 1e-3) continue;
          out.push_back({pa, pb, ta, tb});
        }
      }
    }
  }
  return out;
}

struct ChordFamily {
  ContinuationPath path;
  double max_residual = 0.0;  ///< max |NBC| at both ends along the path
};

/// Traces the chords of one closed piece satisfying the condition at a; the
/// condition at b is checked along the way.
inline ChordFamily trace_chord_family(const ChordProblem& prob, std::size_t piece, double t_a, double t_b,
                                      double step = 0.05, int max_points = 2000) {
  const BoundaryCurve& g = prob.domain().pieces.at(piece);
  if (!g.closed()) throw Error("chord families are traced on closed pieces");
  ResidualSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.residual = [&prob, piece](const Vector& x) {
    return Vector::Constant(1, prob.residual({piece, x[0]}, {piece, x[1]}).x());
  };
  ContinuationOptions copt;
  copt.tol = 1e-12;
  copt.periods = {g.period(), g.period()};
  copt.direction = Vector{{1.0, 1.0}};
  ChordFamily fam;
  fam.path = trace_family(sys, Vector{{t_a, t_b}}, step, max_points, copt);
  for (const Vector& x : fam.path.points) {
    const Vec2 r = prob.residual({piece, x[0]}, {piece, x[1]});
    fam.max_residual = std::max({fam.max_residual, std::abs(r.x()), std::abs(r.y())});
  }
  return fam;
}

/// Distance from p to the line through a and b.
inline double line_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = (b - a).normalized();
  const Vec2 w = p - a;
  return std::abs(d.x() * w.y() - d.y() * w.x());
}

}  // namespace fbvp
