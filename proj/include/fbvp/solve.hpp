#pragma once

// Dense Newton, pseudo-arclength continuation and quadrature.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "fbvp/error.hpp"

namespace fbvp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// R: R^n -> R^m with an optional exact Jacobian and an optional box.
struct ResidualSystem {
  int n = 0;
  int m = 0;
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
  Vector lower;
  Vector upper;

  Vector operator()(const Vector& x) const { return residual(x); }

  /// Exact Jacobian when supplied, forward differences otherwise.
  Matrix jacobian_at(const Vector& x, const Vector* r0 = nullptr) const {
    if (jacobian) return jacobian(x);
    const Vector base = r0 ? *r0 : residual(x);
    Matrix J(base.size(), x.size());
    Vector y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[i]));
      y[i] = x[i] + h;
      J.col(i) = (residual(y) - base) / h;
      y[i] = x[i];
    }
    return J;
  }

  bool in_box(const Vector& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (lower.size() == x.size() && x[i] < lower[i]) return false;
      if (upper.size() == x.size() && x[i] > upper[i]) return false;
    }
    return true;
  }
};

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Minimum-norm solution of J dx = b; valid for rank-deficient and rectangular J.
inline Vector min_norm_solve(const Matrix& J, const Vector& b) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(J);
  cod.setThreshold(1e-12);
  return cod.solve(b);
}

/// Number of singular values below rel_tol * (largest singular value) plus the
/// column excess n - m.
inline int nullity(const Matrix& J, double rel_tol = 1e-7) {
  if (J.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(J);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * std::max(smax, 1e-300)) ++rank;
  }
  return static_cast<int>(J.cols()) - rank;
}

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double min_damping = std::ldexp(1.0, -20);
};

struct NewtonResult {
  bool converged = false;
  Vector x;
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> history;
  std::string message;
};

namespace detail {

inline NewtonResult damped_newton(const ResidualSystem& sys, Vector x, const NewtonOptions& opt) {
  NewtonResult res;
  Vector r = sys(x);
  double norm = inf_norm(r);
  res.history.push_back(norm);
  for (int it = 0;; ++it) {
    res.iterations = it;
    if (!std::isfinite(norm)) {
      res.message = "non-finite residual";
      break;
    }
    if (norm <= opt.tol) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iter) {
      res.message = "iteration limit reached";
      break;
    }
    const Matrix J = sys.jacobian_at(x, &r);
    const Vector dx = min_norm_solve(J, -r);
    if (!dx.allFinite()) {
      res.message = "non-finite Newton step";
      break;
    }
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= opt.min_damping) {
      const Vector y = x + lambda * dx;
      Vector ry;
      try {
        ry = sys(y);
      } catch (const Error&) {
        lambda /= 2;
        continue;
      }
      const double ny = inf_norm(ry);
      if (std::isfinite(ny) && ny < norm) {
        x = y;
        r = ry;
        norm = ny;
        accepted = true;
        break;
      }
      lambda /= 2;
    }
    res.history.push_back(norm);
    if (!accepted) {
      res.message = "damping floor reached";
      break;
    }
  }
  res.x = x;
  res.residual_norm = norm;
  return res;
}

}  // namespace detail

/// Damped Newton with minimum-norm steps. Square systems only.
inline NewtonResult newton_solve(const ResidualSystem& sys, const Vector& x0, const NewtonOptions& opt = {}) {
  if (sys.m != sys.n) {
    throw Error("newton_solve needs a square system, got " + std::to_string(sys.m) + " equations in " +
                std::to_string(sys.n) + " unknowns");
  }
  if (x0.size() != sys.n) throw Error("initial guess has the wrong dimension");
  try {
    return detail::damped_newton(sys, x0, opt);
  } catch (const Error& err) {
    NewtonResult res;
    res.x = x0;
    res.message = err.what();
    return res;
  }
}

enum class Termination { ClosedLoop, BoxBoundary, StepFailure, RankDeficient, MaxPoints };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ClosedLoop: return "closed loop";
    case Termination::BoxBoundary: return "boundary of box";
    case Termination::StepFailure: return "step failure";
    case Termination::RankDeficient: return "rank deficiency";
    case Termination::MaxPoints: return "point limit";
  }
  return "unknown";
}

struct ContinuationPath {
  std::vector<Vector> points;
  std::vector<Vector> tangents;
  std::vector<double> steps;
  Termination termination = Termination::MaxPoints;
};

struct ContinuationOptions {
  double tol = 1e-10;
  int max_halvings = 8;
  /// Coordinate periods (0 for non-periodic), used by closed-loop detection.
  std::vector<double> periods;
  /// Initial direction hint; the tangent is oriented to have positive overlap.
  Vector direction;
  double rank_tol = 1e-9;
};

namespace detail {

inline double wrapped_delta(double d, double period) {
  if (period <= 0) return d;
  d = std::fmod(d, period);
  if (d > period / 2) d -= period;
  if (d < -period / 2) d += period;
  return d;
}

inline Vector wrapped_difference(const Vector& a, const Vector& b, const std::vector<double>& periods) {
  Vector d = a - b;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (static_cast<std::size_t>(i) < periods.size()) d[i] = wrapped_delta(d[i], periods[static_cast<std::size_t>(i)]);
  }
  return d;
}

/// Unit null vector of an m x (m+1) Jacobian; nullopt if the rank drops.
inline std::optional<Vector> null_direction(const Matrix& J, double rank_tol) {
  Eigen::JacobiSVD<Matrix> svd(J, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s.size() && s[s.size() - 1] <= rank_tol * std::max(1.0, s[0])) return std::nullopt;
  return Vector(svd.matrixV().col(J.cols() - 1).normalized());
}

}  // namespace detail

/// Pseudo-arclength continuation of the solution curve of an underdetermined
/// system (m = n - 1) starting near `seed`.
inline ContinuationPath trace_family(const ResidualSystem& sys, const Vector& seed, double step, int max_points,
                                     const ContinuationOptions& opt = {}) {
  if (sys.m != sys.n - 1) throw Error("trace_family needs m = n - 1");
  ContinuationPath path;

  // Project the seed onto the family with minimum-norm corrections.
  NewtonOptions nopt;
  nopt.tol = opt.tol;
  NewtonResult start = detail::damped_newton(sys, seed, nopt);
  if (!start.converged) {
    path.termination = Termination::StepFailure;
    return path;
  }
  Vector x = start.x;
  auto t0 = detail::null_direction(sys.jacobian_at(x), opt.rank_tol);
  if (!t0) {
    path.termination = Termination::RankDeficient;
    return path;
  }
  Vector t = *t0;
  if (opt.direction.size() == t.size() && t.dot(opt.direction) < 0) t = -t;
  path.points.push_back(x);
  path.tangents.push_back(t);
  path.steps.push_back(0.0);

  const Vector origin = x;
  while (static_cast<int>(path.points.size()) < max_points) {
    double h = step;
    bool advanced = false;
    Vector y;
    for (int halving = 0; halving <= opt.max_halvings; ++halving, h /= 2) {
      const Vector predicted = x + h * t;
      ResidualSystem aug;
      aug.n = aug.m = sys.n;
      aug.residual = [&](const Vector& z) {
        Vector r(sys.n);
        r.head(sys.m) = sys(z);
        r[sys.m] = t.dot(z - predicted);
        return r;
      };
      NewtonResult corr;
      try {
        corr = detail::damped_newton(aug, predicted, nopt);
      } catch (const Error&) {
        continue;
      }
      if (!corr.converged) continue;
      const double dist = (corr.x - x).norm();
      if (dist > 2 * h || dist < h / 4) continue;
      y = corr.x;
      advanced = true;
      break;
    }
    if (!advanced) {
      path.termination = Termination::StepFailure;
      return path;
    }
    if (!sys.in_box(y)) {
      path.termination = Termination::BoxBoundary;
      return path;
    }
    if (path.points.size() >= 3) {
      // Closed when the new segment passes within step/2 of the start.
      const Vector a = detail::wrapped_difference(x, origin, opt.periods);
      const Vector seg = y - x;
      const double len2 = seg.squaredNorm();
      const double s = len2 > 0 ? std::clamp(-a.dot(seg) / len2, 0.0, 1.0) : 0.0;
      if ((a + s * seg).norm() < step / 2) {
        path.termination = Termination::ClosedLoop;
        return path;
      }
    }
    auto tn = detail::null_direction(sys.jacobian_at(y), opt.rank_tol);
    if (!tn) {
      path.points.push_back(y);
      path.tangents.push_back(t);
      path.steps.push_back((y - x).norm());
      path.termination = Termination::RankDeficient;
      return path;
    }
    Vector tnew = *tn;
    if (tnew.dot(t) < 0) tnew = -tnew;
    path.steps.push_back((y - x).norm());
    path.points.push_back(y);
    path.tangents.push_back(tnew);
    x = y;
    t = tnew;
  }
  path.termination = Termination::MaxPoints;
  return path;
}

/// Composite Simpson rule with n (even) subintervals.
inline double quadrature(const std::function<double(double)>& f, double a, double b, int n) {
  if (n < 2 || n % 2 != 0) throw Error("Simpson quadrature needs an even number of subintervals");
  const double h = (b - a) / n;
  auto eval = [&](double x) {
    try {
      return f(x);
    } catch (const DomainError& err) {
      std::ostringstream os;
      os << "evaluation failed at x = " << x;
      throw DomainError(os.str(), err.subexpression());
    }
  };
  double sum = eval(a) + eval(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * eval(a + i * h);
  return sum * h / 3;
}

/// Composite 10-point Gauss-Legendre rule over `panels` equal panels.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels = 1) {
  if (panels < 1) throw Error("gauss_legendre needs at least one panel");
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    sum += boost::math::quadrature::gauss<double, 10>::integrate(f, a + i * h, a + (i + 1) * h);
  }
  return sum;
}

}  // namespace fbvp
