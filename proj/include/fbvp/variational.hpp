#pragma once

#include "fbvp/calculus.hpp"
#include "fbvp/lagrangian.hpp"
#include "fbvp/prolongation.hpp"

namespace fbvp {

/// Boundary-term coefficients of the first variation: first multiplies the
/// variation's derivative, second the variation itself.
struct NbcPair {
  Expr first;
  Expr second;
};

/// E = L_u - D(L_p) + D^2(L_q).
inline Expr euler_lagrange(const Lagrangian& lag) {
  const Expr& L = lag.density();
  Expr e = partial_derivative(L, "u") - total_derivative(partial_derivative(L, "p"));
  if (lag.order() == 2) {
    e = e + total_derivative(total_derivative(partial_derivative(L, "q")));
  }
  return e;
}

/// (L_q, L_p - D(L_q)); for first-order Lagrangians (0, L_p).
inline NbcPair natural_boundary_conditions(const Lagrangian& lag) {
  const Expr& L = lag.density();
  if (lag.order() == 1) return {Expr(), partial_derivative(L, "p")};
  const Expr lq = partial_derivative(L, "q");
  return {lq, partial_derivative(L, "p") - total_derivative(lq)};
}

/// Natural boundary conditions of the Lagrangian pulled back through `chart`
/// (barred to original coordinates), in the barred jet variables.
inline NbcPair nbc_in_chart(const Lagrangian& lag, const ProlongedTransformation& chart) {
  return natural_boundary_conditions(pullback_lagrangian(lag, chart));
}

inline NbcPair nbc_in_chart(const Lagrangian& lag, const PointTransformation& chart) {
  return nbc_in_chart(lag, prolong(chart));
}

}  // namespace fbvp
