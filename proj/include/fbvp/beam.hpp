#pragma once

// The free-sliding Bernoulli beam: general solution u0 + cubic, the endpoint
// conditions in boundary charts, the one-endpoint family and the full solver.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fbvp/chart_nbc.hpp"
#include "fbvp/geometry.hpp"
#include "fbvp/solve.hpp"
#include "fbvp/variational.hpp"

namespace fbvp {

inline Lagrangian beam_lagrangian() {
  return Lagrangian::parse("kappa*q^2/2 - rho(x)*u", 2, ParseContext().parameter("kappa").function("rho"));
}

struct BeamProblem {
  double kappa = 1.0;
  Expr rho;  ///< load, an expression in x
  Domain domain;

  BeamProblem(double kappa_, Expr rho_, Domain domain_)
      : kappa(kappa_), rho(std::move(rho_)), domain(std::move(domain_)) {
    if (kappa == 0.0 || !std::isfinite(kappa)) throw Error("kappa must be a nonzero finite number");
    for (const auto& s : free_symbols(rho)) {
      if (s != "x") throw UnboundSymbol(s);
    }
    rho_fn_ = function_from_expr(rho, "x", 6);
  }

  const NamedFunction& rho_function() const noexcept { return rho_fn_; }

  /// kappa and rho, as needed to evaluate the beam Lagrangian's expressions.
  Bindings bindings() const {
    Bindings b;
    b.set("kappa", kappa).define("rho", rho_fn_);
    return b;
  }

 private:
  NamedFunction rho_fn_;
};

/// u0 with kappa u0'''' = rho and u0 = u0' = u0'' = u0''' = 0 at x0, from the
/// Cauchy formula u0^(k)(x) = (1/kappa) int_x0^x (x - s)^(3-k) / (3-k)! rho(s) ds.
class ParticularSolution {
 public:
  ParticularSolution(const BeamProblem& prob, double x0) : kappa_(prob.kappa), x0_(x0), rho_(prob.rho_function()) {
    if (prob.rho.is_const()) constant_ = prob.rho.value();
  }

  double x0() const noexcept { return x0_; }

  double operator()(double x, int k) const {
    if (k < 0 || k > 4) throw Error("particular solution derivatives are available up to order 4");
    if (k == 4) return rho_(x, 0) / kappa_;
    const int m = 3 - k;
    const double d = x - x0_;
    if (constant_) {
      static constexpr double fact[] = {1, 1, 2, 6, 24};
      return *constant_ / kappa_ * std::pow(d, m + 1) / fact[m + 1];
    }
    if (d == 0.0) return 0.0;
    static constexpr double mfact[] = {1, 1, 2, 6};
    const int panels = std::max(2, static_cast<int>(std::ceil(std::abs(d) * 8)));
    const double integral = gauss_legendre(
        [&](double s) {
          const double v = rho_(s, 0);
          if (!std::isfinite(v)) throw Error("load is not finite at x = " + std::to_string(s));
          return std::pow(x - s, m) / mfact[m] * v;
        },
        x0_, x, panels);
    return integral / kappa_;
  }

  NamedFunction as_function() const {
    auto self = std::make_shared<ParticularSolution>(*this);
    return [self](double x, int k) { return (*self)(x, k); };
  }

 private:
  double kappa_;
  double x0_;
  NamedFunction rho_;
  std::optional<double> constant_;
};

inline ParticularSolution particular_solution(const BeamProblem& prob, double x0) { return {prob, x0}; }

struct BeamCoefficients {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;

  /// k-th derivative of c3 x^3 + c2 x^2 + c1 x + c0.
  double cubic(double x, int k) const {
    switch (k) {
      case 0: return ((c3 * x + c2) * x + c1) * x + c0;
      case 1: return (3 * c3 * x + 2 * c2) * x + c1;
      case 2: return 6 * c3 * x + 2 * c2;
      case 3: return 6 * c3;
      default: return 0.0;
    }
  }
};

/// u = u0 + c3 x^3 + c2 x^2 + c1 x + c0 with derivatives.
inline NamedFunction beam_solution(const ParticularSolution& u0, const BeamCoefficients& c) {
  return [u0, c](double x, int k) { return u0(x, k) + c.cubic(x, k); };
}

/// (c2, c0) making u pass through (xp, up) with u''(xp) = 0.
inline std::pair<double, double> reduced_coefficients(double xp, double up, double c1, double c3,
                                                      const ParticularSolution& u0) {
  const double u0pp = u0(xp, 2);
  const double c2 = -3 * xp * c3 - 0.5 * u0pp;
  const double c0 = 0.5 * (2 * up - 2 * xp * c1 + 4 * xp * xp * xp * c3 + xp * xp * u0pp - 2 * u0(xp, 0));
  return {c2, c0};
}

struct SlidingSolution {
  BoundaryPoint a;
  BoundaryPoint b;
  BeamCoefficients coeffs;
  double residual_a = 0.0;  ///< max of |incidence|, |res1|, |res2| at a
  double residual_b = 0.0;
  int nullity = 0;
};

struct BeamOptions {
  ChartKind chart = ChartKind::Tubular;
  double tol = 1e-10;
  int max_iter = 60;
  double x0 = 0.0;  ///< gauge point of u0
  double dedupe = 1e-6;
  double nullity_tol = 1e-6;
  /// Bound on the distance between gamma(t) and the crossing searched for by
  /// endpoint_nbc_residual, in parameter units.
  double crossing_window = 0.25;
};

/// Problem data shared by all beam computations: u0 and the chart NBCs.
class BeamModel {
 public:
  explicit BeamModel(BeamProblem prob, BeamOptions opt = {})
      : prob_(std::move(prob)), opt_(opt), u0_(prob_, opt.x0), fixed_(prob_.bindings()),
        affine_(std::make_shared<ChartNbc>(beam_lagrangian(), ChartKind::Affine)),
        tubular_(std::make_shared<ChartNbc>(beam_lagrangian(), ChartKind::Tubular)) {}

  const BeamProblem& problem() const noexcept { return prob_; }
  const BeamOptions& options() const noexcept { return opt_; }
  const ParticularSolution& particular() const noexcept { return u0_; }
  const Bindings& bindings() const noexcept { return fixed_; }
  const ChartNbc& chart(ChartKind kind) const { return kind == ChartKind::Affine ? *affine_ : *tubular_; }

  JetPoint jet(const BeamCoefficients& c, double x) const { return JetPoint::of(beam_solution(u0_, c), x); }

  /// (incidence, res1, res2) at the anchor gamma(t): incidence is u(X(t)) - U(t),
  /// the chart residuals use the jet of u at X(t).
  std::array<double, 3> anchor_residuals(const BoundaryCurve& gamma, double t, const BeamCoefficients& c,
                                         ChartKind kind) const {
    const Vec2 P = gamma.point(t);
    const JetPoint j = jet(c, P.x());
    const ChartNbc::Value v = chart(kind).at(gamma, t, j, fixed_);
    return {j.u - P.y(), v.first_normalized, v.second_normalized};
  }

 private:
  BeamProblem prob_;
  BeamOptions opt_;
  ParticularSolution u0_;
  Bindings fixed_;
  std::shared_ptr<ChartNbc> affine_;
  std::shared_ptr<ChartNbc> tubular_;
};

/// Crossing of the graph of u with gamma near t: the root of U(s) - u(X(s)).
inline double crossing_parameter(const BeamModel& model, const BoundaryCurve& gamma, double t,
                                 const BeamCoefficients& c) {
  const NamedFunction u = beam_solution(model.particular(), c);
  auto f = [&](double s) { return gamma.point(s).y() - u(gamma.point(s).x(), 0); };
  auto df = [&](double s) {
    const Vec2 d = gamma.derivative(s, 1);
    return d.y() - u(gamma.point(s).x(), 1) * d.x();
  };
  double s = t;
  const double window = model.options().crossing_window;
  for (int it = 0; it < 50; ++it) {
    const double v = f(s);
    if (std::abs(v) < 1e-14) return s;
    const double dv = df(s);
    if (!(std::abs(dv) > 1e-14)) break;
    s -= v / dv;
    if (std::abs(s - t) > window) break;
    if (!gamma.closed() && (s < gamma.range().first || s > gamma.range().second)) break;
  }
  if (std::abs(f(s)) < 1e-10 && std::abs(s - t) <= window) return s;
  throw NonCrossing("the beam graph does not cross the boundary near t = " + std::to_string(t));
}

/// Normalised chart NBC residuals where the beam graph crosses gamma near t.
/// res1 equals kappa u'' at the crossing; res2 is the second chart condition
/// times J / Delta.
inline std::pair<double, double> endpoint_nbc_residual(const BeamModel& model, const BoundaryCurve& gamma, double t,
                                                       const BeamCoefficients& c, ChartKind kind) {
  const double s = crossing_parameter(model, gamma, t, c);
  const auto r = model.anchor_residuals(gamma, s, c, kind);
  return {r[1], r[2]};
}

// ---------------------------------------------------------------------------
// One sliding endpoint

struct LocalFamily {
  std::vector<std::array<double, 2>> points;  ///< (c1, c3)
  std::vector<BeamCoefficients> coefficients;
  double max_unreduced_residual = 0.0;
  /// Nullity of d(incidence, res1, res2)/d(c0, c1, c2, c3) along the family.
  int min_nullity = 0;
  int max_nullity = 0;
  Termination termination = Termination::MaxPoints;
  bool empty() const { return points.empty(); }
};

struct LocalFamilyOptions {
  ChartKind chart = ChartKind::Affine;
  double box = 5.0;      ///< |c1|, |c3| <= box
  double step = 0.05;
  int max_points = 400;
  int seeds = 21;        ///< c1 seeds on [-box, box]
  double tol = 1e-11;
};

/// The curve in (c1, c3) along which a beam through gamma(t0) satisfies both
/// chart conditions there, once c2 and c0 come from reduced_coefficients.
inline LocalFamily local_solution_family(const BeamModel& model, const BoundaryCurve& gamma, double t0,
                                         const LocalFamilyOptions& opt = {}) {
  const Vec2 P = gamma.point(t0);
  auto expand = [&](double c1, double c3) {
    const auto [c2, c0] = reduced_coefficients(P.x(), P.y(), c1, c3, model.particular());
    return BeamCoefficients{c0, c1, c2, c3};
  };
  ResidualSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.residual = [&](const Vector& z) {
    return Vector::Constant(1, model.anchor_residuals(gamma, t0, expand(z[0], z[1]), opt.chart)[2]);
  };
  sys.lower = Vector::Constant(2, -opt.box);
  sys.upper = Vector::Constant(2, opt.box);

  LocalFamily fam;
  std::optional<Vector> seed;
  for (int i = 0; i < opt.seeds && !seed; ++i) {
    const double c1 = -opt.box + 2 * opt.box * (i + 0.5) / opt.seeds;
    ResidualSystem line;
    line.n = line.m = 1;
    line.residual = [&](const Vector& z) { return sys(Vector{{c1, z[0]}}); };
    NewtonResult r = newton_solve(line, Vector::Zero(1), {opt.tol, 50});
    if (r.converged && std::abs(r.x[0]) <= opt.box) seed = Vector{{c1, r.x[0]}};
  }
  if (!seed) {
    fam.termination = Termination::StepFailure;
    return fam;
  }

  ContinuationOptions copt;
  copt.tol = opt.tol;
  std::vector<Vector> pts;
  for (double dir : {1.0, -1.0}) {
    copt.direction = Vector{{dir, 0.0}};
    ContinuationPath path = trace_family(sys, *seed, opt.step, opt.max_points, copt);
    if (dir > 0) {
      pts = path.points;
      fam.termination = path.termination;
      if (path.termination == Termination::ClosedLoop) break;
    } else {
      std::reverse(path.points.begin(), path.points.end());
      if (!path.points.empty()) path.points.pop_back();
      path.points.insert(path.points.end(), pts.begin(), pts.end());
      pts = std::move(path.points);
    }
  }

  fam.min_nullity = 4;
  for (const auto& z : pts) {
    const BeamCoefficients c = expand(z[0], z[1]);
    fam.points.push_back({z[0], z[1]});
    fam.coefficients.push_back(c);
    const auto r = model.anchor_residuals(gamma, t0, c, opt.chart);
    fam.max_unreduced_residual = std::max({fam.max_unreduced_residual, std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
    ResidualSystem full;
    full.n = 4;
    full.m = 3;
    full.residual = [&](const Vector& x) {
      const auto v = model.anchor_residuals(gamma, t0, BeamCoefficients{x[0], x[1], x[2], x[3]}, opt.chart);
      return Vector{{v[0], v[1], v[2]}};
    };
    const int nul = nullity(full.jacobian_at(Vector{{c.c0, c.c1, c.c2, c.c3}}), 1e-6);
    fam.min_nullity = std::min(fam.min_nullity, nul);
    fam.max_nullity = std::max(fam.max_nullity, nul);
  }
  if (pts.empty()) fam.min_nullity = 0;
  return fam;
}

// ---------------------------------------------------------------------------
// Both endpoints sliding

/// Unknowns (t_a, t_b, c0, c1, c2, c3); endpoint a on piece `piece_a`, b on `piece_b`.
struct BeamSeed {
  std::size_t piece_a = 0;
  std::size_t piece_b = 0;
  Vector x;
};

struct BeamSolveReport {
  std::vector<SlidingSolution> solutions;
  int converged_seeds = 0;
  int failed_seeds = 0;
  std::vector<std::string> failures;
  /// Certified lower bound on the residual norm over all unknowns, when one is available.
  std::optional<double> empty_certificate;
};

namespace detail {

inline ResidualSystem beam_system(const BeamModel& model, std::size_t pa, std::size_t pb, ChartKind kind) {
  const Domain& dom = model.problem().domain;
  ResidualSystem sys;
  sys.n = sys.m = 6;
  sys.residual = [&model, &dom, pa, pb, kind](const Vector& x) {
    const BeamCoefficients c{x[2], x[3], x[4], x[5]};
    const auto ra = model.anchor_residuals(dom.pieces[pa], x[0], c, kind);
    const auto rb = model.anchor_residuals(dom.pieces[pb], x[1], c, kind);
    return Vector{{ra[0], ra[1], ra[2], rb[0], rb[1], rb[2]}};
  };
  return sys;
}

inline double param_distance(double s, double t, const BoundaryCurve& c) {
  if (!c.closed()) return std::abs(s - t);
  return std::abs(fbvp::detail::wrapped_delta(s - t, c.period()));
}

}  // namespace detail

/// For a strip (two vertical walls) the chart conditions do not depend on the
/// wall parameters and are linear in c: (q(a), q(b), r(a), r(b)) = A c + b0 up
/// to the factor kappa. Returns the least-squares minimum of kappa |A c + b0|,
/// a lower bound on the residual norm at any point.
inline std::optional<double> flat_strip_residual_bound(const BeamModel& model) {
  const Domain& dom = model.problem().domain;
  if (dom.pieces.size() != 2) return std::nullopt;
  for (const auto& p : dom.pieces) {
    if (p.closed() || !partial_derivative(p.X(), "t").is_const(0.0)) return std::nullopt;
  }
  const double a = dom.pieces[0].point(0).x(), b = dom.pieces[1].point(0).x();
  const auto& u0 = model.particular();
  Matrix A(4, 2);
  Vector rhs(4);
  A << 2, 6 * a, 2, 6 * b, 0, 6, 0, 6;
  rhs << -u0(a, 2), -u0(b, 2), -u0(a, 3), -u0(b, 3);
  const Vector c = A.colPivHouseholderQr().solve(rhs);
  return std::abs(model.problem().kappa) * (A * c - rhs).norm();
}

/// Damped Newton from each seed on incidence plus both chart conditions at both
/// endpoints; converged roots are deduplicated (endpoint swap quotiented) and
/// filtered by separation and admissibility.
inline BeamSolveReport solve_free_sliding_beam(const BeamModel& model, const std::vector<BeamSeed>& seeds) {
  if (seeds.empty()) throw Error("solve_free_sliding_beam needs at least one seed");
  const BeamOptions& opt = model.options();
  const Domain& dom = model.problem().domain;
  BeamSolveReport rep;
  rep.empty_certificate = flat_strip_residual_bound(model);
  if (rep.empty_certificate && *rep.empty_certificate <= opt.tol) rep.empty_certificate.reset();

  for (const BeamSeed& seed : seeds) {
    const BoundaryCurve& ga = dom.pieces.at(seed.piece_a);
    const BoundaryCurve& gb = dom.pieces.at(seed.piece_b);
    if (seed.piece_a == seed.piece_b && detail::param_distance(seed.x[0], seed.x[1], ga) == 0.0) {
      throw Error("seed endpoints coincide");
    }
    const ResidualSystem sys = detail::beam_system(model, seed.piece_a, seed.piece_b, opt.chart);
    NewtonResult r = newton_solve(sys, seed.x, {opt.tol, opt.max_iter});
    if (!r.converged) {
      ++rep.failed_seeds;
      rep.failures.push_back(r.message);
      continue;
    }
    ++rep.converged_seeds;
    Vector x = r.x;
    x[0] = ga.reduce(x[0]);
    x[1] = gb.reduce(x[1]);
    if (seed.piece_a == seed.piece_b && ga.closed() &&
        detail::param_distance(x[0], x[1], ga) < 1e-3 * ga.period()) {
      rep.failures.push_back("endpoints collapsed");
      continue;
    }
    // Admissibility of the converged graph.
    const BeamCoefficients c{x[2], x[3], x[4], x[5]};
    const double xa = ga.point(x[0]).x(), xb = gb.point(x[1]).x();
    if (std::abs(xa - xb) < 1e-9) {
      rep.failures.push_back("endpoints share an abscissa");
      continue;
    }
    const SampledCurve graph =
        SampledCurve::graph(beam_solution(model.particular(), c), std::min(xa, xb), std::max(xa, xb), 200);
    if (!is_admissible(graph, dom, 1e-6)) {
      rep.failures.push_back("converged curve is not admissible");
      continue;
    }
    bool duplicate = false;
    for (const auto& s : rep.solutions) {
      const double dc = std::max({std::abs(s.coeffs.c0 - c.c0), std::abs(s.coeffs.c1 - c.c1),
                                  std::abs(s.coeffs.c2 - c.c2), std::abs(s.coeffs.c3 - c.c3)});
      auto dt = [&](const BoundaryPoint& p, std::size_t piece, double t) {
        return p.piece == piece ? detail::param_distance(p.t, t, dom.pieces[piece])
                                : std::numeric_limits<double>::infinity();
      };
      const double same = std::max({dc, dt(s.a, seed.piece_a, x[0]), dt(s.b, seed.piece_b, x[1])});
      const double swapped = std::max({dc, dt(s.a, seed.piece_b, x[1]), dt(s.b, seed.piece_a, x[0])});
      if (std::min(same, swapped) <= opt.dedupe) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    SlidingSolution sol;
    sol.a = {seed.piece_a, x[0]};
    sol.b = {seed.piece_b, x[1]};
    sol.coeffs = c;
    const Vector res = sys(x);
    sol.residual_a = inf_norm(res.head(3));
    sol.residual_b = inf_norm(res.tail(3));
    sol.nullity = nullity(sys.jacobian_at(x), opt.nullity_tol);
    rep.solutions.push_back(sol);
  }
  return rep;
}

/// Seeds through pairs of boundary points: straight lines through them
/// (corrected by u0), spread evenly over the boundary pieces.
inline std::vector<BeamSeed> default_beam_seeds(const BeamModel& model, int count, std::uint64_t seed) {
  const Domain& dom = model.problem().domain;
  std::mt19937_64 rng(seed);
  std::vector<BeamSeed> out;
  const std::size_t pa = 0, pb = dom.pieces.size() > 1 ? 1 : 0;
  const BoundaryCurve& ga = dom.pieces[pa];
  const BoundaryCurve& gb = dom.pieces[pb];
  auto draw = [&](const BoundaryCurve& g) {
    const auto [lo, hi] = g.range();
    const double mid = (lo + hi) / 2, half = (hi - lo) / 2;
    return g.closed() ? std::uniform_real_distribution<double>(lo, hi)(rng)
                      : std::uniform_real_distribution<double>(mid - half / 4, mid + half / 4)(rng);
  };
  int attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts++ < 100 * count) {
    const double ta = draw(ga), tb = draw(gb);
    const Vec2 A = ga.point(ta), B = gb.point(tb);
    if (std::abs(A.x() - B.x()) < 0.1 * (A - B).norm() || (A - B).norm() < 1e-3) continue;
    const auto& u0 = model.particular();
    // Line through A and B minus u0's values there.
    const double ya = A.y() - u0(A.x(), 0), yb = B.y() - u0(B.x(), 0);
    const double c1 = (yb - ya) / (B.x() - A.x());
    const double c0 = ya - c1 * A.x();
    out.push_back({pa, pb, Vector{{ta, tb, c0, c1, 0.0, 0.0}}});
  }
  return out;
}

}  // namespace fbvp
