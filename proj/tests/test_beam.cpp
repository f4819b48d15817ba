#include <gtest/gtest.h>

#include <cmath>

#include "fbvp/beam.hpp"
#include "support.hpp"

using namespace fbvp;
using fbvp::testing::Rng;

namespace {

BeamModel flat_strip(double rho0, double kappa = 1.0) {
  return BeamModel(BeamProblem(kappa, constant(rho0), Domain::strip(0, 1, 10)));
}

BeamModel disc(double rho0) {
  return BeamModel(BeamProblem(1.0, constant(rho0), Domain::enclosed_by(BoundaryCurve::circle(1.0))));
}

}  // namespace

TEST(ParticularSolution, ConstantLoadIsQuartic) {
  BeamProblem prob(2.0, constant(0.6), Domain::strip(0, 1, 1));
  const ParticularSolution u0(prob, 0.25);
  for (double x : {-1.0, 0.25, 0.9}) {
    const double d = x - 0.25;
    EXPECT_NEAR(u0(x, 0), 0.3 * std::pow(d, 4) / 24, 1e-15);
    EXPECT_NEAR(u0(x, 1), 0.3 * std::pow(d, 3) / 6, 1e-15);
    EXPECT_NEAR(u0(x, 2), 0.3 * d * d / 2, 1e-15);
    EXPECT_NEAR(u0(x, 3), 0.3 * d, 1e-15);
    EXPECT_NEAR(u0(x, 4), 0.3, 1e-15);
  }
}

TEST(ParticularSolution, LinearLoadClosedForm) {
  BeamProblem prob(1.5, var("x"), Domain::strip(0, 1, 1));
  const ParticularSolution u0(prob, 0.0);
  for (double x : {-0.7, 0.4, 1.3}) {
    EXPECT_NEAR(u0(x, 0), std::pow(x, 5) / 120 / 1.5, 1e-13);
    EXPECT_NEAR(u0(x, 1), std::pow(x, 4) / 24 / 1.5, 1e-13);
    EXPECT_NEAR(u0(x, 3), x * x / 2 / 1.5, 1e-13);
  }
}

TEST(ParticularSolution, DerivativesAreConsistent) {
  BeamProblem prob(0.8, sin(3 * var("x")) + 1, Domain::strip(0, 1, 1));
  const ParticularSolution u0(prob, 0.3);
  for (double x : {-0.4, 0.1, 0.3, 0.8}) {
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-5;
      const double fd = (u0(x + h, k) - u0(x - h, k)) / (2 * h);
      EXPECT_NEAR(fd, u0(x, k + 1), 1e-8) << "x = " << x << ", k = " << k;
    }
    EXPECT_NEAR(0.8 * u0(x, 4), std::sin(3 * x) + 1, 1e-14);
  }
  EXPECT_EQ(u0(0.3, 0), 0.0);
}

TEST(ParticularSolution, RejectsForeignSymbols) {
  EXPECT_THROW(BeamProblem(1.0, var("y"), Domain::strip(0, 1, 1)), UnboundSymbol);
  EXPECT_THROW(BeamProblem(0.0, constant(1.0), Domain::strip(0, 1, 1)), Error);
}

TEST(ReducedCoefficients, PassThroughPointWithZeroCurvature) {
  Rng rng(71);
  BeamProblem prob(1.1, cos(var("x")), Domain::strip(0, 1, 1));
  const ParticularSolution u0(prob, 0.0);
  for (int i = 0; i < 20; ++i) {
    const double xp = rng.uniform(-1, 1), up = rng.uniform(-1, 1);
    const double c1 = rng.uniform(-2, 2), c3 = rng.uniform(-2, 2);
    const auto [c2, c0] = reduced_coefficients(xp, up, c1, c3, u0);
    const NamedFunction u = beam_solution(u0, {c0, c1, c2, c3});
    EXPECT_NEAR(u(xp, 0), up, 1e-12);
    EXPECT_NEAR(u(xp, 2), 0.0, 1e-12);
  }
}

TEST(ChartConditions, WallsGiveFlatConditions) {
  Rng rng(72);
  const BeamModel m = flat_strip(0.0, 1.7);
  for (int i = 0; i < 20; ++i) {
    const JetPoint j{0.0, rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0};
    for (std::size_t w : {0u, 1u}) {
      const BoundaryCurve& wall = m.problem().domain.pieces[w];
      JetPoint jw = j;
      jw.x = wall.point(0).x();
      for (ChartKind kind : {ChartKind::Affine, ChartKind::Tubular}) {
        const auto v = m.chart(kind).at(wall, j.u, jw, m.bindings());
        EXPECT_NEAR(v.first_normalized, 1.7 * j.q, 1e-12);
        EXPECT_NEAR(v.second_normalized, 1.7 * j.r, 1e-12);
      }
    }
  }
}

TEST(ChartConditions, FirstNormalisedIsCurvatureMoment) {
  Rng rng(73);
  const BeamModel m = disc(0.4);
  const BoundaryCurve& g = m.problem().domain.pieces[0];
  for (int i = 0; i < 30; ++i) {
    const double t = rng.uniform(0, 2 * M_PI);
    const Vec2 P = g.point(t);
    const JetPoint j{P.x(), P.y(), rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0};
    for (ChartKind kind : {ChartKind::Affine, ChartKind::Tubular}) {
      try {
        EXPECT_NEAR(m.chart(kind).at(g, t, j, m.bindings()).first_normalized, j.q, 1e-10);
      } catch (const ChartUnsuitable&) {
      }
    }
  }
}

TEST(ChartConditions, ChartsShareTheZeroSet) {
  // Both charts vanish together: at q = 0 the second conditions coincide.
  Rng rng(74);
  for (double rho0 : {0.0, 0.8}) {
    const BeamModel m = disc(rho0);
    const BoundaryCurve& g = m.problem().domain.pieces[0];
    for (int i = 0; i < 30; ++i) {
      const double t = rng.uniform(0, 2 * M_PI);
      const Vec2 P = g.point(t);
      const JetPoint j{P.x(), P.y(), rng.uniform(-1, 1), 0.0, rng.uniform(-2, 2), 0.0};
      try {
        const auto a = m.chart(ChartKind::Affine).at(g, t, j, m.bindings());
        const auto b = m.chart(ChartKind::Tubular).at(g, t, j, m.bindings());
        // Near-tangent jets are ill conditioned in both charts.
        if (std::abs(a.barred.p) > 5) continue;
        EXPECT_NEAR(a.second_normalized, b.second_normalized, 1e-9 * (1 + std::abs(a.second_normalized)));
      } catch (const ChartUnsuitable&) {
      }
    }
  }
}

TEST(ChartConditions, TangentCurveIsUnsuitable) {
  const BeamModel m = flat_strip(0.0);
  const BoundaryCurve& wall = m.problem().domain.pieces[0];
  // The wall is vertical; a jet with huge slope is nearly tangent but finite, so
  // use the disc, where the tangent at t = pi/2 is horizontal.
  const BeamModel d = disc(0.0);
  const BoundaryCurve& g = d.problem().domain.pieces[0];
  EXPECT_THROW(d.chart(ChartKind::Affine).at(g, M_PI / 2, {0, 1, 0, 0, 0, 0}, d.bindings()), ChartUnsuitable);
  EXPECT_NO_THROW(m.chart(ChartKind::Affine).at(wall, 0.0, {0, 0, 0, 0, 0, 0}, m.bindings()));
}

TEST(EndpointResidual, FindsCrossingAndRejectsMisses) {
  const BeamModel m = disc(0.0);
  const BoundaryCurve& g = m.problem().domain.pieces[0];
  // u = 0.2 + 0.5 x crosses the unit circle near t = 0.6 and 3.9.
  const BeamCoefficients c{0.2, 0.5, 0.0, 0.0};
  const double s = crossing_parameter(m, g, 0.5, c);
  EXPECT_NEAR(g.point(s).y(), 0.2 + 0.5 * g.point(s).x(), 1e-12);
  const auto [r1, r2] = endpoint_nbc_residual(m, g, 0.5, c, ChartKind::Tubular);
  EXPECT_NEAR(r1, 0.0, 1e-12);
  EXPECT_NEAR(r2, 0.0, 1e-12);
  const BeamCoefficients far{5.0, 0.0, 0.0, 0.0};
  EXPECT_THROW(endpoint_nbc_residual(m, g, 0.5, far, ChartKind::Affine), NonCrossing);
}

TEST(LocalFamily, LoadedDiscAnchor) {
  const BeamModel m = disc(0.7);
  const BoundaryCurve& g = m.problem().domain.pieces[0];
  for (double t0 : {0.3, 2.5}) {
    for (ChartKind kind : {ChartKind::Affine, ChartKind::Tubular}) {
      LocalFamilyOptions opt;
      opt.chart = kind;
      const LocalFamily fam = local_solution_family(m, g, t0, opt);
      ASSERT_FALSE(fam.empty());
      EXPECT_GT(fam.points.size(), 20u);
      EXPECT_LE(fam.max_unreduced_residual, 1e-8);
      EXPECT_EQ(fam.min_nullity, 1);
      EXPECT_EQ(fam.max_nullity, 1);
    }
  }
}

TEST(LocalFamily, ChartsGiveTheSameFamily) {
  // Points of the affine family satisfy the tubular conditions away from
  // tangency to the boundary.
  const BeamModel m = disc(0.5);
  const BoundaryCurve& g = m.problem().domain.pieces[0];
  const LocalFamily fam = local_solution_family(m, g, 1.1);
  ASSERT_FALSE(fam.empty());
  int checked = 0;
  for (const auto& c : fam.coefficients) {
    const auto v = m.chart(ChartKind::Affine).at(g, 1.1, m.jet(c, g.point(1.1).x()), m.bindings());
    if (std::abs(v.barred.p) > 5) continue;
    ++checked;
    const auto r = m.anchor_residuals(g, 1.1, c, ChartKind::Tubular);
    EXPECT_LE(std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])}), 1e-8);
  }
  EXPECT_GT(checked, 10);
}

TEST(Solver, FlatStripUnloadedGivesAffineFunctions) {
  const BeamModel m = flat_strip(0.0);
  const BeamSolveReport rep = solve_free_sliding_beam(m, default_beam_seeds(m, 8, 11));
  ASSERT_FALSE(rep.solutions.empty());
  EXPECT_FALSE(rep.empty_certificate.has_value());
  for (const auto& s : rep.solutions) {
    EXPECT_NEAR(s.coeffs.c2, 0.0, 1e-9);
    EXPECT_NEAR(s.coeffs.c3, 0.0, 1e-9);
    EXPECT_EQ(s.nullity, 2);
    EXPECT_LE(std::max(s.residual_a, s.residual_b), 1e-10);
  }
}

TEST(Solver, FlatStripLoadedIsEmpty) {
  for (double rho0 : {0.5, -2.0}) {
    const BeamModel m = flat_strip(rho0);
    const BeamSolveReport rep = solve_free_sliding_beam(m, default_beam_seeds(m, 6, 12));
    EXPECT_TRUE(rep.solutions.empty());
    ASSERT_TRUE(rep.empty_certificate.has_value());
    // u''' = rho0 x + 6 c3 at x = 0 and 1: the best residual is |rho0| / sqrt(2).
    EXPECT_NEAR(*rep.empty_certificate, std::abs(rho0) / std::sqrt(2.0), 1e-12);
  }
}

TEST(Solver, SolutionsSatisfyTheFreeProblem) {
  const BeamModel m = disc(0.3);
  const BeamSolveReport rep = solve_free_sliding_beam(m, default_beam_seeds(m, 20, 3));
  ASSERT_FALSE(rep.solutions.empty());
  for (const auto& s : rep.solutions) {
    const NamedFunction u = beam_solution(m.particular(), s.coeffs);
    const StationarityReport r = stationarity_residuals(beam_lagrangian(), m.problem().domain, u, s.a, s.b,
                                                        ChartKind::Affine, m.bindings());
    EXPECT_LE(r.max(), 1e-8);
  }
}

TEST(Solver, RejectsEmptySeedList) {
  const BeamModel m = flat_strip(0.0);
  EXPECT_THROW(solve_free_sliding_beam(m, {}), Error);
}

TEST(Invariance, AffineImagesOfFlatStripSolutions) {
  Rng rng(75);
  const BeamModel m = flat_strip(0.0);
  const Lagrangian beam = beam_lagrangian();
  const BeamSolveReport rep = solve_free_sliding_beam(m, default_beam_seeds(m, 4, 13));
  ASSERT_FALSE(rep.solutions.empty());
  int done = 0;
  while (done < 10) {
    std::array<double, 4> a{};
    for (double& v : a) v = rng.uniform(-1.5, 1.5);
    if (std::abs(a[0] * a[3] - a[1] * a[2]) < 0.3) continue;
    const std::array<double, 2> b{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto& sol = rep.solutions[static_cast<std::size_t>(done) % rep.solutions.size()];
    const double c0 = sol.coeffs.c0, c1 = sol.coeffs.c1;
    // Image of the line: x' = alpha x + beta, u' = gamma x + delta.
    const double alpha = a[0] + a[1] * c1, beta = a[1] * c0 + b[0];
    const double gamma = a[2] + a[3] * c1, delta = a[3] * c0 + b[1];
    if (std::abs(alpha) < 0.2) continue;
    const NamedFunction image = [=](double x, int k) {
      if (k == 0) return gamma * (x - beta) / alpha + delta;
      return k == 1 ? gamma / alpha : 0.0;
    };
    Eigen::Matrix2d A;
    A << a[0], a[1], a[2], a[3];
    const Domain dom = m.problem().domain.affine_image(A, Vec2(b[0], b[1]));
    const PointTransformation phi = PointTransformation::affine(a, b);
    const Lagrangian pushed = pullback_lagrangian(beam, prolong(phi.inverted()));
    for (ChartKind kind : {ChartKind::Affine, ChartKind::Tubular}) {
      try {
        const StationarityReport r =
            stationarity_residuals(pushed, dom, image, sol.a, sol.b, kind, m.bindings());
        EXPECT_LE(r.max(), 1e-8) << "map " << done;
      } catch (const ChartUnsuitable&) {
        ADD_FAILURE() << "image is tangent to the mapped wall";
      }
    }
    ++done;
  }
}
