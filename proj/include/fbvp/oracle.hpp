#pragma once

// Finite-difference checks of the variational formulas: the discrete action,
// its first variation along a direction, and the split of that variation into
// an Euler-Lagrange integral plus boundary terms.

#include <cmath>
#include <vector>

#include "fbvp/eval.hpp"
#include "fbvp/geometry.hpp"
#include "fbvp/lagrangian.hpp"
#include "fbvp/solve.hpp"
#include "fbvp/variational.hpp"

namespace fbvp {

struct DiscreteActionConfig {
  int n = 2000;
  double epsilon = 1e-6;

  void validate() const {
    if (n < 32) throw Error("discrete action needs n >= 32");
    if (n % 2 != 0) throw Error("discrete action needs an even n");
    if (!(epsilon >= 1e-8 && epsilon <= 1e-4)) throw Error("variation step must lie in [1e-8, 1e-4]");
  }
};

namespace detail {

inline void check_uniform(const SampledCurve& c) {
  if (!c.is_graph()) throw Error("discrete action needs graph samples");
  const auto& xs = c.xs();
  const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (std::abs(xs[i] - xs[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw Error("discrete action needs a uniform grid");
    }
  }
  if ((xs.size() - 1) % 2 != 0) throw Error("discrete action needs an even number of intervals");
}

/// Stencil jets (x, u, p, q) at every node; the exact callable is ignored.
inline std::vector<std::array<double, 4>> stencil_jets(const SampledCurve& c) {
  const SampledCurve raw = SampledCurve::graph(c.xs(), c.us());
  std::vector<std::array<double, 4>> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = {c.xs()[i], c.us()[i], raw.derivative(i, 1), raw.derivative(i, 2)};
  return out;
}

inline double simpson_sum(const std::vector<double>& f, double h) {
  const std::size_t n = f.size() - 1;
  double s = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return s * h / 3;
}

inline double action_of_jets(const Lagrangian& lag, const std::vector<std::array<double, 4>>& jets, double h,
                             const Bindings& fixed) {
  BoundProgram L(Program(lag.density()), {"x", "u", "p", "q"}, fixed);
  std::vector<double> f(jets.size());
  for (std::size_t i = 0; i < jets.size(); ++i) f[i] = L(jets[i])[0];
  return simpson_sum(f, h);
}

inline double grid_step(const SampledCurve& c) {
  return (c.xs().back() - c.xs().front()) / static_cast<double>(c.size() - 1);
}

}  // namespace detail

/// Simpson quadrature of L(x, u, u', u'') with u', u'' from fourth-order
/// stencils on a uniform grid. `fixed` binds the Lagrangian's parameters and
/// named functions.
inline double discrete_action(const Lagrangian& lag, const SampledCurve& u, const Bindings& fixed = {}) {
  detail::check_uniform(u);
  return detail::action_of_jets(lag, detail::stencil_jets(u), detail::grid_step(u), fixed);
}

/// Samples y on [a, b] with cfg.n intervals and takes the discrete action.
inline double discrete_action(const Lagrangian& lag, const NamedFunction& y, double a, double b,
                              const DiscreteActionConfig& cfg, const Bindings& fixed = {}) {
  cfg.validate();
  std::vector<double> xs, us;
  for (int i = 0; i <= cfg.n; ++i) {
    const double x = i == cfg.n ? b : a + (b - a) * i / cfg.n;
    xs.push_back(x);
    us.push_back(y(x, 0));
  }
  return discrete_action(lag, SampledCurve::graph(xs, us), fixed);
}

/// (S(u + eps v) - S(u - eps v)) / (2 eps) on the common grid of u and v.
inline double first_variation_fd(const Lagrangian& lag, const SampledCurve& u, const SampledCurve& v,
                                 double epsilon, const Bindings& fixed = {}) {
  detail::check_uniform(u);
  if (u.xs() != v.xs()) throw Error("u and v must share a grid");
  const auto ju = detail::stencil_jets(u);
  const auto jv = detail::stencil_jets(v);
  auto shifted = [&](double e) {
    std::vector<std::array<double, 4>> j = ju;
    for (std::size_t i = 0; i < j.size(); ++i) {
      for (int k = 1; k < 4; ++k) j[i][static_cast<std::size_t>(k)] += e * jv[i][static_cast<std::size_t>(k)];
    }
    return j;
  };
  const double h = detail::grid_step(u);
  return (detail::action_of_jets(lag, shifted(epsilon), h, fixed) -
          detail::action_of_jets(lag, shifted(-epsilon), h, fixed)) /
         (2 * epsilon);
}

struct VariationReport {
  double lhs = 0.0;           ///< finite-difference first variation
  double lhs_half_step = 0.0; ///< the same with epsilon / 2
  double interior = 0.0;      ///< quadrature of E(u) v
  double boundary = 0.0;      ///< [first v' + second v] from a to b
  double rhs = 0.0;
  double error = 0.0;
  /// error / (integral of |E(u) v| + |boundary terms at a| + |boundary terms at b|)
  double relative_error = 0.0;
};

/// Compares the finite-difference first variation with the Euler-Lagrange
/// integral plus the boundary bracket. Jets of u and v come from their exact
/// callables when attached, from stencils otherwise.
inline VariationReport check_variation_decomposition(const Lagrangian& lag, const SampledCurve& u,
                                                     const SampledCurve& v, const DiscreteActionConfig& cfg,
                                                     const Bindings& fixed = {}) {
  cfg.validate();
  detail::check_uniform(u);
  VariationReport rep;
  rep.lhs = first_variation_fd(lag, u, v, cfg.epsilon, fixed);
  rep.lhs_half_step = first_variation_fd(lag, u, v, cfg.epsilon / 2, fixed);

  const std::vector<std::string> layout{"x", "u", "p", "q", "r", "s"};
  BoundProgram E(Program(euler_lagrange(lag)), layout, fixed);
  const NbcPair nbc = natural_boundary_conditions(lag);
  BoundProgram B(Program(std::vector<Expr>{nbc.first, nbc.second}), layout, fixed);

  auto jet = [](const SampledCurve& c, std::size_t i) {
    const JetPoint j = c.jet(i, 4);
    return std::array<double, 6>{j.x, j.u, j.p, j.q, j.r, j.s};
  };
  std::vector<double> ev(u.size()), abs_ev(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    ev[i] = E(jet(u, i))[0] * v.us()[i];
    abs_ev[i] = std::abs(ev[i]);
  }
  const double h = detail::grid_step(u);
  rep.interior = detail::simpson_sum(ev, h);
  double scale = detail::simpson_sum(abs_ev, h);
  auto bracket = [&](std::size_t i) {
    const auto b = B(jet(u, i));
    return b[0] * v.derivative(i, 1) + b[1] * v.us()[i];
  };
  const double at_b = bracket(u.size() - 1);
  const double at_a = bracket(0);
  rep.boundary = at_b - at_a;
  scale += std::abs(at_a) + std::abs(at_b);
  rep.rhs = rep.interior + rep.boundary;
  rep.error = std::abs(rep.lhs - rep.rhs);
  rep.relative_error = scale > 0 ? rep.error / scale : rep.error;
  return rep;
}

}  // namespace fbvp
