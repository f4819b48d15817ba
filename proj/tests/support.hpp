#pragma once

// Shared helpers for the test suites: seeded generators and smooth sample
// functions with exact derivatives.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "fbvp/eval.hpp"
#include "fbvp/jet.hpp"
#include "fbvp/prolongation.hpp"

namespace fbvp::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// u(x) = sum a_k x^k (k <= 3) + sum b_j sin(w_j x + phi_j), with exact derivatives.
struct SmoothFunction {
  std::vector<double> poly;
  std::vector<double> amp, freq, phase;

  static SmoothFunction random(Rng& rng, double scale = 1.0) {
    SmoothFunction f;
    for (int k = 0; k < 4; ++k) f.poly.push_back(scale * rng.uniform(-1.0, 1.0));
    for (int j = 0; j < 2; ++j) {
      f.amp.push_back(scale * rng.uniform(-0.5, 0.5));
      f.freq.push_back(rng.uniform(0.5, 3.0));
      f.phase.push_back(rng.uniform(0.0, 6.28));
    }
    return f;
  }

  double operator()(double x, int order = 0) const {
    double v = 0.0;
    for (int k = order; k < static_cast<int>(poly.size()); ++k) {
      double c = poly[static_cast<std::size_t>(k)];
      for (int m = 0; m < order; ++m) c *= k - m;
      v += c * std::pow(x, k - order);
    }
    for (std::size_t j = 0; j < amp.size(); ++j) {
      v += amp[j] * std::pow(freq[j], order) * std::sin(freq[j] * x + phase[j] + order * M_PI / 2);
    }
    return v;
  }

  NamedFunction as_named() const {
    SmoothFunction copy = *this;
    return [copy](double x, int order) { return copy(x, order); };
  }
};

/// Binds x, u, p, q, r, s to the jet of `f` at `x`.
inline Bindings jet_bindings(const std::function<double(double, int)>& f, double x, Bindings b = {}) {
  b.set("x", x).set("u", f(x, 0)).set("p", f(x, 1)).set("q", f(x, 2)).set("r", f(x, 3)).set("s", f(x, 4));
  return b;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}


/// A random invertible planar map: an affine map with |det| >= 0.3 composed
/// with two mild nonlinear shears. Each factor has an explicit inverse.
inline PointTransformation random_chart(Rng& rng, bool nonlinear = true) {
  std::array<double, 4> a{};
  do {
    for (double& v : a) v = rng.uniform(-1.5, 1.5);
  } while (std::abs(a[0] * a[3] - a[1] * a[2]) < 0.3);
  PointTransformation t = PointTransformation::affine(a, {rng.uniform(-1, 1), rng.uniform(-1, 1)});
  if (!nonlinear) return t;
  const Expr x = var("x");
  const Expr u = var("u");
  const double e1 = rng.uniform(-0.3, 0.3);
  const double w = rng.uniform(0.5, 2.0);
  const double e2 = rng.uniform(-0.2, 0.2);
  PointTransformation s1{x, u + e1 * sin(w * x), std::make_pair(x, u - e1 * sin(w * x))};
  PointTransformation s2{x + e2 * u * u, u, std::make_pair(x - e2 * u * u, u)};
  return compose(t, compose(s2, s1));
}

/// Random jet point with moderate entries.
inline JetPoint random_jet(Rng& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale),
          rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

}  // namespace fbvp::testing
