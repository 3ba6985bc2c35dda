#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace fracmorse {

/// Gauss-Legendre rule on [-1,1], nodes ascending. Computed once per order by
/// Newton iteration on P_n; accurate to machine precision and deterministic.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussRule(int n) : nodes(n), weights(n) {
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        double dx = p0 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
      weights[n - 1 - i] = weights[i];
    }
  }
};

const GaussRule& gauss_rule(int n);

/// Integral of w^alpha over [c,d], 0 <= c < d. Stable across alpha+1 -> 0
/// (log case) via expm1.
inline double power_integral(double c, double d, double alpha) {
  const double u = alpha + 1.0;
  if (c <= 0.0) {
    // requires u > 0
    return std::pow(d, u) / u;
  }
  const double lr = std::log(d / c);
  if (u == 0.0) return lr;
  return std::exp(u * std::log(c)) * std::expm1(u * lr) / u;
}

}  // namespace fracmorse
