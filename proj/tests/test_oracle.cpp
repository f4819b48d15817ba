#include <gtest/gtest.h>

#include <cmath>

#include "fbvp/oracle.hpp"
#include "support.hpp"

using namespace fbvp;
using fbvp::testing::random_chart;
using fbvp::testing::Rng;
using fbvp::testing::SmoothFunction;

namespace {

Lagrangian beam() {
  return Lagrangian::parse("kappa*q^2/2 - rho(x)*u", 2, ParseContext().parameter("kappa").function("rho"));
}
Lagrangian length() { return Lagrangian::parse("sqrt(1+p^2)", 1); }

Bindings beam_bindings(double kappa, double rho0) {
  Bindings b;
  b.set("kappa", kappa).define("rho", [rho0](double, int k) { return k == 0 ? rho0 : 0.0; });
  return b;
}

NamedFunction poly(std::vector<double> c) {
  return [c](double x, int k) {
    double v = 0.0;
    for (std::size_t j = static_cast<std::size_t>(k); j < c.size(); ++j) {
      double coef = c[j];
      for (int m = 0; m < k; ++m) coef *= static_cast<double>(j) - m;
      v += coef * std::pow(x, static_cast<double>(j) - k);
    }
    return v;
  };
}

SampledCurve sample(const NamedFunction& f, double a, double b, int n) { return SampledCurve::graph(f, a, b, n); }

// Values only: derivatives then come from stencils.
SampledCurve sample_values(const NamedFunction& f, double a, double b, int n) {
  SampledCurve c = sample(f, a, b, n);
  return SampledCurve::graph(c.xs(), c.us());
}

}  // namespace

TEST(DiscreteAction, HorizontalSegmentLength) {
  EXPECT_NEAR(discrete_action(length(), poly({0.7}), 0, 1, {64, 1e-6}), 1.0, 1e-14);
}

TEST(DiscreteAction, BeamEnergyOfParabola) {
  EXPECT_NEAR(discrete_action(beam(), poly({0, 0, 1}), 0, 1, {2000, 1e-6}, beam_bindings(1, 0)), 2.0, 1e-6);
}

TEST(DiscreteAction, UnitDensityGivesIntervalLength) {
  Lagrangian dx(constant(1.0), 1);
  Rng rng(51);
  SmoothFunction f = SmoothFunction::random(rng);
  EXPECT_NEAR(discrete_action(dx, f.as_named(), -0.5, 1.5, {100, 1e-6}), 2.0, 1e-13);
}

TEST(DiscreteAction, ConvergesWithRefinement) {
  Rng rng(52);
  SmoothFunction f = SmoothFunction::random(rng);
  const double fine = discrete_action(length(), f.as_named(), 0, 1, {4096, 1e-6});
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const double err = std::abs(discrete_action(length(), f.as_named(), 0, 1, {n, 1e-6}) - fine);
    if (prev > 0) {
      EXPECT_GT(prev / err, 3.5);
    }
    prev = err;
  }
}

TEST(DiscreteAction, RejectsBadGrids) {
  EXPECT_THROW(discrete_action(length(), SampledCurve::graph({0, 0.5, 2}, {0, 0, 0})), Error);
  EXPECT_THROW(DiscreteActionConfig({16, 1e-6}).validate(), Error);
  EXPECT_THROW(DiscreteActionConfig({64, 1e-3}).validate(), Error);
  EXPECT_THROW(DiscreteActionConfig({64, 1e-9}).validate(), Error);
  EXPECT_NO_THROW(DiscreteActionConfig({64, 1e-8}).validate());
}

TEST(FirstVariation, LengthConstantShift) {
  SampledCurve u = sample_values(poly({0, 0.1}), 0, 1, 200);
  SampledCurve v = sample_values(poly({1}), 0, 1, 200);
  EXPECT_NEAR(first_variation_fd(length(), u, v, 1e-6), 0.0, 1e-9);
}

TEST(FirstVariation, LengthTransversalityTerm) {
  SampledCurve u = sample_values(poly({0, 0.1}), 0, 1, 200);
  SampledCurve v = sample_values(poly({0, 1}), 0, 1, 200);
  EXPECT_NEAR(first_variation_fd(length(), u, v, 1e-6), 0.1 / std::sqrt(1.01), 1e-6);
  EXPECT_NEAR(0.1 / std::sqrt(1.01), 0.0995037, 1e-7);
}

TEST(FirstVariation, BeamStationaryCurve) {
  Rng rng(53);
  SampledCurve u = sample_values(poly({0.3, -0.8}), 0, 1, 2000);
  for (int i = 0; i < 5; ++i) {
    SampledCurve v = sample_values(SmoothFunction::random(rng).as_named(), 0, 1, 2000);
    EXPECT_LE(std::abs(first_variation_fd(beam(), u, v, 1e-6, beam_bindings(1.0, 0.0))), 1e-5);
  }
}

TEST(Decomposition, BeamQuarticSolution) {
  Rng rng(54);
  SampledCurve u = sample(poly({0, 0, 0, 0, 1.0 / 24}), 0, 1, 2000);
  for (int i = 0; i < 5; ++i) {
    SampledCurve v = sample(SmoothFunction::random(rng).as_named(), 0, 1, 2000);
    VariationReport rep = check_variation_decomposition(beam(), u, v, {2000, 1e-6}, beam_bindings(1.0, 1.0));
    EXPECT_LE(rep.relative_error, 1e-4);
    EXPECT_NEAR(rep.interior, 0.0, 1e-9);
  }
}

TEST(Decomposition, RandomPairsBothLagrangians) {
  Rng rng(55);
  for (int i = 0; i < 20; ++i) {
    SampledCurve u = sample(SmoothFunction::random(rng, 0.5).as_named(), -0.5, 1.0, 2000);
    SampledCurve v = sample(SmoothFunction::random(rng).as_named(), -0.5, 1.0, 2000);
    VariationReport b = check_variation_decomposition(beam(), u, v, {2000, 1e-6}, beam_bindings(1.3, 0.7));
    VariationReport l = check_variation_decomposition(length(), u, v, {2000, 1e-6});
    EXPECT_LE(b.relative_error, 1e-4);
    EXPECT_LE(l.relative_error, 1e-4);
    // The eps and eps/2 quotients agree (truncation in eps is negligible).
    EXPECT_NEAR(b.lhs, b.lhs_half_step, 1e-6 * (1 + std::abs(b.lhs)));
  }
}

TEST(Decomposition, ErrorDropsWithGrid) {
  Rng rng(56);
  for (int trial = 0; trial < 3; ++trial) {
    SmoothFunction fu = SmoothFunction::random(rng, 0.5), fv = SmoothFunction::random(rng);
    for (const Lagrangian& lag : {beam(), length()}) {
      double prev = 0.0;
      for (int n : {32, 64, 128}) {
        VariationReport rep = check_variation_decomposition(lag, sample(fu.as_named(), 0, 1, n),
                                                            sample(fv.as_named(), 0, 1, n), {n, 1e-6},
                                                            beam_bindings(1.0, 0.5));
        if (prev > 0) {
          EXPECT_GT(prev / rep.error, 3.5) << "n = " << n;
        }
        prev = rep.error;
      }
    }
  }
}

TEST(Decomposition, CompactlySupportedVariation) {
  Rng rng(57);
  SmoothFunction fu = SmoothFunction::random(rng, 0.5);
  // v = x^2 (1 - x)^2 vanishes with its derivative at both ends.
  SampledCurve v = sample(poly({0, 0, 1, -2, 1}), 0, 1, 2000);
  for (const Lagrangian& lag : {beam(), length()}) {
    VariationReport rep = check_variation_decomposition(lag, sample(fu.as_named(), 0, 1, 2000), v, {2000, 1e-6},
                                                        beam_bindings(1.0, 0.5));
    EXPECT_NEAR(rep.boundary, 0.0, 1e-14);
    EXPECT_NEAR(rep.lhs, rep.interior, 1e-4 * (1 + std::abs(rep.interior)));
  }
}

TEST(Stationarity, FlatStripCharacterisation) {
  Rng rng(58);
  const Bindings b = beam_bindings(1.0, 0.0);
  const Lagrangian lag = beam();
  const NbcPair nbc = natural_boundary_conditions(lag);
  const Expr el = euler_lagrange(lag);
  auto residual = [&](const NamedFunction& f) {
    double worst = 0.0;
    for (double x : {0.0, 1.0}) {
      const Bindings jb = fbvp::testing::jet_bindings(f, x, b);
      worst = std::max({worst, std::abs(evaluate(nbc.first, jb)), std::abs(evaluate(nbc.second, jb))});
    }
    for (int i = 0; i <= 10; ++i) worst = std::max(worst, std::abs(evaluate(el, fbvp::testing::jet_bindings(f, i / 10.0, b))));
    return worst;
  };
  auto max_variation = [&](const NamedFunction& f) {
    double worst = 0.0;
    SampledCurve u = sample_values(f, 0, 1, 2000);
    for (int i = 0; i < 20; ++i) {
      SampledCurve v = sample_values(SmoothFunction::random(rng).as_named(), 0, 1, 2000);
      worst = std::max(worst, std::abs(first_variation_fd(lag, u, v, 1e-6, b)));
    }
    return worst;
  };
  const NamedFunction solution = poly({0.2, 0.5});
  const NamedFunction near_cubic = poly({0.2, 0.5, 0, 1e-3});
  const NamedFunction near_quadratic = poly({0.2, 0.5, 1e-3});
  EXPECT_LE(residual(solution), 1e-8);
  EXPECT_LE(max_variation(solution), 1e-5);
  for (const auto& f : {near_cubic, near_quadratic}) {
    EXPECT_GT(residual(f), 1e-8);
    EXPECT_GT(max_variation(f), 1e-5);
  }
}

TEST(Invariance, ActionOfPulledBackLagrangian) {
  // S(lambda, L) equals S(pullback lambda, preimage of L) for charts
  // (xbar, ubar) -> (x, u); the preimage is resampled on a uniform grid.
  Rng rng(59);
  for (int trial = 0; trial < 6; ++trial) {
    PointTransformation chart = random_chart(rng, true);
    const PointTransformation back = chart.inverted();
    SmoothFunction y = SmoothFunction::random(rng, 0.3);
    BoundProgram to_bar(Program(std::vector<Expr>{back.xbar, back.ubar}), {"x", "u"}, {});
    auto pre = [&](double t) {
      const double v[2] = {t, y(t)};
      return to_bar(v);
    };
    const double a = 0.0, b = 0.5;
    // The preimage must be a graph over xbar on [a, b].
    bool monotone = true;
    double prev = pre(a)[0];
    const double dir = pre(b)[0] > prev ? 1.0 : -1.0;
    for (int i = 1; i <= 200 && monotone; ++i) {
      const double next = pre(a + (b - a) * i / 200)[0];
      monotone = (next - prev) * dir > 1e-6;
      prev = next;
    }
    if (!monotone) {
      --trial;
      continue;
    }
    const int n = 400;
    const double xa = pre(a)[0], xb = pre(b)[0];
    const double lo = std::min(xa, xb), hi = std::max(xa, xb);
    std::vector<double> xs, us;
    double t = dir > 0 ? a : b;
    for (int i = 0; i <= n; ++i) {
      const double target = lo + (hi - lo) * i / n;
      for (int it = 0; it < 60; ++it) {
        const double f = pre(t)[0] - target;
        if (std::abs(f) < 1e-15) break;
        t -= f / ((pre(t + 1e-7)[0] - pre(t - 1e-7)[0]) / 2e-7);
      }
      xs.push_back(target);
      us.push_back(pre(t)[1]);
    }
    for (const Lagrangian& lag : {length(), beam()}) {
      const Bindings fixed = beam_bindings(1.1, 0.4);
      const double original = discrete_action(lag, y.as_named(), a, b, {n, 1e-6}, fixed);
      const Lagrangian pulled = pullback_lagrangian(lag, prolong(chart));
      const double barred = discrete_action(pulled, SampledCurve::graph(xs, us), fixed);
      EXPECT_NEAR(dir * barred, original, 1e-6 * (1 + std::abs(original)));
    }
  }
}
