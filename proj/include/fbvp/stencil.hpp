#pragma once

// Finite-difference weights on arbitrary nodes.

#include <algorithm>
#include <span>
#include <vector>

#include "fbvp/error.hpp"

namespace fbvp {

/// Fornberg's recursion: w[k][j] is the weight of node j in the k-th
/// derivative at z, for k = 0..m.
inline std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> nodes, int m) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0 || m < 0) throw Error("fornberg_weights needs nodes and m >= 0");
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m + 1), std::vector<double>(nodes.size(), 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[static_cast<std::size_t>(i)] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

/// k-th derivative of sampled data at node i from a window of k + 4 nodes,
/// centred where possible and shifted one-sided near the ends (fourth order).
inline double stencil_derivative(std::span<const double> xs, std::span<const double> ys, std::size_t i, int k) {
  const std::size_t n = xs.size();
  const std::size_t w = static_cast<std::size_t>(k + 4);
  if (n < w) throw Error("not enough samples for a derivative of order " + std::to_string(k));
  const std::size_t start = std::min(i > w / 2 ? i - w / 2 : 0, n - w);
  const auto weights = fornberg_weights(xs[i], xs.subspan(start, w), k);
  double d = 0.0;
  for (std::size_t j = 0; j < w; ++j) d += weights[static_cast<std::size_t>(k)][j] * ys[start + j];
  return d;
}

}  // namespace fbvp
