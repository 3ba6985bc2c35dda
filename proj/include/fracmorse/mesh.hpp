#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fracmorse/errors.hpp"

namespace fracmorse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform partition of Omega = (a,b) with P1 hat functions on the n interior
/// nodes. Basis functions vanish identically outside [a,b], which encodes the
/// complement condition u = 0 in Omega^c.
struct Mesh1D {
  double a;
  double b;
  int n;     // interior nodes
  double s;  // fractional order, in (0,1)

  Mesh1D(double a_, double b_, int n_, double s_) : a(a_), b(b_), n(n_), s(s_) {
    if (!(b > a)) throw PreconditionError("Mesh1D: b must exceed a");
    if (n < 1) throw PreconditionError("Mesh1D: need at least one interior node");
    if (!(s > 0.0 && s < 1.0)) throw PreconditionError("Mesh1D: s must lie in (0,1)");
  }

  double h() const { return (b - a) / (n + 1); }
  double node(int i) const { return a + i * h(); }  // i = 1..n interior

  /// Piecewise-linear interpolant of nodal vector u (zero at a and b).
  double interpolate(const Vector& u, double x) const {
    const double hh = h();
    if (x <= a || x >= b) return 0.0;
    int c = static_cast<int>((x - a) / hh);
    if (c > n) c = n;
    const double xl = a + c * hh;
    const double t = (x - xl) / hh;
    const double ul = (c >= 1 && c <= n) ? u[c - 1] : 0.0;
    const double ur = (c + 1 >= 1 && c + 1 <= n) ? u[c] : 0.0;
    return ul * (1.0 - t) + ur * t;
  }
};

/// Strictly positive weight, stored nodally on the interior nodes and
/// interpolated piecewise-linearly (constant extension on the two boundary
/// cells).
struct WeightField {
  std::vector<double> values;
  double eta0;  // certified lower bound, > 0

  WeightField(std::vector<double> v, double eta0_) : values(std::move(v)), eta0(eta0_) {
    if (!(eta0 > 0.0)) throw PreconditionError("WeightField: eta0 must be positive");
    for (double x : values)
      if (!(x >= eta0)) throw PreconditionError("WeightField: nodal value below eta0");
  }

  static WeightField constant(int n, double c) {
    return WeightField(std::vector<double>(static_cast<size_t>(n), c), c);
  }

  /// Nodal value with constant extension at the ends (index 0 -> a, n+1 -> b).
  double at_node(int i, int n) const {
    if (i < 1) i = 1;
    if (i > n) i = n;
    return values[static_cast<size_t>(i - 1)];
  }
};

/// Stiffness (Gagliardo form) plus plain and weighted mass matrices.
struct OperatorPair {
  Matrix A;
  Matrix M;
  Matrix M_eta;
};

}  // namespace fracmorse
