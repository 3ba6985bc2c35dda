#include "fracmorse/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "fracmorse/quadrature.hpp"

namespace fracmorse {

const GaussRule& gauss_rule(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, GaussRule(n)).first;
  return it->second;
}

namespace {

// Unit-square interaction constants for a pair of cells sharing one vertex:
//   I_ab = iint_{[0,1]^2} xi^a zeta^b (xi+zeta)^{-1-2s} dxi dzeta,  a+b = 2.
// Closed forms via antiderivatives; the basis differences vanish linearly at
// the shared vertex, so only a+b = 2 monomials appear and both integrals
// converge for all s in (0,1).
struct TouchConstants {
  double i20;
  double i11;
};

TouchConstants touch_constants(double q) {
  auto pi12 = [](double alpha) { return power_integral(1.0, 2.0, alpha); };
  const double w = pi12(2.0 - q) - 2.0 * pi12(1.0 - q) + pi12(-q);
  const double i20 = (1.0 / q) * (1.0 / (3.0 - q) - w);
  // iint (xi+zeta)^{1-q} over the unit square, by the level-set density of xi+zeta
  const double s2 = 1.0 / (3.0 - q) + 2.0 * pi12(1.0 - q) - pi12(2.0 - q);
  const double i11 = 0.5 * s2 - i20;
  return {i20, i11};
}

// phi_i restricted to cell c (c = 0..n): returns {value-at, slope} as a linear
// function a + b*x, or zero if i is not supported there. i runs over interior
// node indices 1..n.
struct LinearPiece {
  double a = 0.0, b = 0.0;
  bool active = false;
};

LinearPiece basis_on_cell(const Mesh1D& mesh, int i, int c) {
  LinearPiece p;
  if (i < 1 || i > mesh.n) return p;
  const double h = mesh.h();
  const double xl = mesh.a + c * h;
  if (i == c) {  // falling on this cell
    p.a = (xl + h) / h;
    p.b = -1.0 / h;
    p.active = true;
  } else if (i == c + 1) {  // rising
    p.a = -xl / h;
    p.b = 1.0 / h;
    p.active = true;
  }
  return p;
}

std::array<int, 2> cell_dofs(const Mesh1D& mesh, int c) {
  std::array<int, 2> d{-1, -1};
  if (c >= 1 && c <= mesh.n) d[0] = c;
  if (c + 1 >= 1 && c + 1 <= mesh.n) d[1] = c + 1;
  return d;
}

// Omega x Omega interaction of one disjoint cell pair (gap >= 1 cell), all
// four dof pairs at once. Inner integral over the y-cell is closed-form in
// r = y - x; outer integral over the x-cell uses Gauss of the given order.
// Contributions are accumulated into local[4][4] over dofs {c, c+1, d, d+1}.
void disjoint_pair(const Mesh1D& mesh, int c, int d, int order,
                   double local[4][4]) {
  const double h = mesh.h();
  const double q = 2.0 * mesh.s;
  const double xc0 = mesh.a + c * h;
  const double y0 = mesh.a + d * h;
  const double y1 = y0 + h;

  const LinearPiece px[2] = {basis_on_cell(mesh, c, c), basis_on_cell(mesh, c + 1, c)};
  const LinearPiece py[2] = {basis_on_cell(mesh, d, d), basis_on_cell(mesh, d + 1, d)};
  // dof slots: 0 -> c, 1 -> c+1, 2 -> d, 3 -> d+1
  const GaussRule& g = gauss_rule(order);
  for (int m = 0; m < order; ++m) {
    const double x = xc0 + 0.5 * h * (g.nodes[m] + 1.0);
    const double w = 0.5 * h * g.weights[m];
    const double r0 = y0 - x, r1 = y1 - x;
    const double R0 = power_integral(r0, r1, -1.0 - q);
    const double R1 = power_integral(r0, r1, -q);
    const double R2 = power_integral(r0, r1, 1.0 - q);
    // factor_i(y) = phi_i(x) - phi_i(y) = C_i - b_i (y - x)
    double C[4], B[4];
    for (int t = 0; t < 2; ++t) {
      C[t] = px[t].active ? px[t].a + px[t].b * x : 0.0;
      B[t] = 0.0;
      C[2 + t] = py[t].active ? -(py[t].a + py[t].b * x) : 0.0;
      B[2 + t] = py[t].active ? py[t].b : 0.0;
    }
    for (int u = 0; u < 4; ++u) {
      for (int v = u; v < 4; ++v) {
        const double val =
            C[u] * C[v] * R0 - (C[u] * B[v] + C[v] * B[u]) * R1 + B[u] * B[v] * R2;
        local[u][v] += w * val;
      }
    }
  }
}

int dof_of_slot(int c, int d, int slot) {
  return slot < 2 ? c + slot : d + slot - 2;
}

// Complement correction: 2 * int_Omega phi_i phi_j k_c(x) dx with
// k_c(x) = ((x-a)^{-q} + (b-x)^{-q}) / q. Per-cell closed form by expanding
// the quadratic phi_i phi_j in powers of the distance to each endpoint.
void add_complement(const Mesh1D& mesh, Matrix& A) {
  const double h = mesh.h();
  const double q = 2.0 * mesh.s;
  const int n = mesh.n;
  for (int c = 0; c <= n; ++c) {
    const double c0 = mesh.a + c * h, c1 = c0 + h;
    const auto dofs = cell_dofs(mesh, c);
    for (int side = 0; side < 2; ++side) {
      // side 0: t = x - a on [c0-a, c1-a]; side 1: t = b - x on [b-c1, b-c0]
      double t0, t1;
      double pa[2], pb[2];  // phi as p + r*t per active dof
      if (side == 0) {
        t0 = c0 - mesh.a;
        t1 = c1 - mesh.a;
      } else {
        t0 = mesh.b - c1;
        t1 = mesh.b - c0;
      }
      for (int t = 0; t < 2; ++t) {
        const LinearPiece p = basis_on_cell(mesh, dofs[t] > 0 ? dofs[t] : -1, c);
        if (!p.active) {
          pa[t] = pb[t] = 0.0;
          continue;
        }
        if (side == 0) {  // x = a + t
          pa[t] = p.a + p.b * mesh.a;
          pb[t] = p.b;
        } else {  // x = b - t
          pa[t] = p.a + p.b * mesh.b;
          pb[t] = -p.b;
        }
      }
      for (int u = 0; u < 2; ++u) {
        if (dofs[u] < 0) continue;
        for (int v = u; v < 2; ++v) {
          if (dofs[v] < 0) continue;
          const double e0 = pa[u] * pa[v];
          const double e1 = pa[u] * pb[v] + pa[v] * pb[u];
          const double e2 = pb[u] * pb[v];
          double val = 0.0;
          if (e0 != 0.0) val += e0 * power_integral(t0, t1, -q);
          if (e1 != 0.0) val += e1 * power_integral(t0, t1, 1.0 - q);
          if (e2 != 0.0) val += e2 * power_integral(t0, t1, 2.0 - q);
          val *= 2.0 / q;
          A(dofs[u] - 1, dofs[v] - 1) += val;
          if (u != v) A(dofs[v] - 1, dofs[u] - 1) += val;
        }
      }
    }
  }
}

}  // namespace

Matrix assemble_stiffness(const Mesh1D& mesh) {
  const int n = mesh.n;
  const double h = mesh.h();
  const double q = 2.0 * mesh.s;
  Matrix A = Matrix::Zero(n, n);
  Matrix Aerr = Matrix::Zero(n, n);

  // same-cell: (phi_i(x)-phi_i(y)) = m_i (x-y) exactly, so the cell self-term
  // reduces to slopes times iint |x-y|^{1-q}
  const double t0 = 2.0 * std::pow(h, 3.0 - q) / ((2.0 - q) * (3.0 - q));
  for (int c = 0; c <= n; ++c) {
    const auto dofs = cell_dofs(mesh, c);
    const double slope[2] = {-1.0 / h, 1.0 / h};
    for (int u = 0; u < 2; ++u) {
      if (dofs[u] < 0) continue;
      for (int v = 0; v < 2; ++v) {
        if (dofs[v] < 0) continue;
        A(dofs[u] - 1, dofs[v] - 1) += slope[u] * slope[v] * t0;
      }
    }
  }

  // vertex-touching pairs: closed form via the scale-invariant unit-square
  // constants; basis differences are (alpha*xi + beta*zeta)/h around the
  // shared vertex
  const TouchConstants tc = touch_constants(q);
  const double scale_touch = 2.0 * std::pow(h, 1.0 - q);
  for (int c = 0; c + 1 <= n; ++c) {
    const int ids[3] = {c, c + 1, c + 2};
    const double alpha[3] = {1.0, -1.0, 0.0};
    const double beta[3] = {0.0, 1.0, -1.0};
    for (int u = 0; u < 3; ++u) {
      if (ids[u] < 1 || ids[u] > n) continue;
      for (int v = 0; v < 3; ++v) {
        if (ids[v] < 1 || ids[v] > n) continue;
        const double val = alpha[u] * alpha[v] * tc.i20 +
                           (alpha[u] * beta[v] + alpha[v] * beta[u]) * tc.i11 +
                           beta[u] * beta[v] * tc.i20;
        A(ids[u] - 1, ids[v] - 1) += scale_touch * val;
      }
    }
  }

  // disjoint pairs, with a two-order quadrature error estimate per entry
  for (int c = 0; c <= n; ++c) {
    for (int d = c + 2; d <= n; ++d) {
      double lo[4][4] = {}, hi[4][4] = {};
      disjoint_pair(mesh, c, d, 16, lo);
      disjoint_pair(mesh, c, d, 24, hi);
      for (int u = 0; u < 4; ++u) {
        const int i = dof_of_slot(c, d, u);
        if (i < 1 || i > n) continue;
        for (int v = u; v < 4; ++v) {
          const int j = dof_of_slot(c, d, v);
          if (j < 1 || j > n) continue;
          const double val = 2.0 * hi[u][v];
          const double err = 2.0 * std::abs(hi[u][v] - lo[u][v]);
          A(i - 1, j - 1) += val;
          Aerr(i - 1, j - 1) += err;
          if (i != j) {
            A(j - 1, i - 1) += val;
            Aerr(j - 1, i - 1) += err;
          }
        }
      }
    }
  }

  int wr = 0, wc = 0;
  const double worst = Aerr.maxCoeff(&wr, &wc);
  if (worst > kAssemblyTol)
    throw AssemblyError("assemble_stiffness: quadrature did not converge to the entry tolerance",
                        wr, wc);

  add_complement(mesh, A);
  // exact symmetry by construction of every local block; mirror to be safe
  A = ((A + A.transpose()) * 0.5).eval();
  return A;
}

Matrix assemble_mass(const Mesh1D& mesh, const WeightField& eta) {
  if (static_cast<int>(eta.values.size()) != mesh.n)
    throw PreconditionError("assemble_mass: weight size mismatch");
  const int n = mesh.n;
  const double h = mesh.h();
  Matrix M = Matrix::Zero(n, n);
  const GaussRule& g = gauss_rule(2);  // exact for the piecewise-cubic integrand
  for (int c = 0; c <= n; ++c) {
    const double x0 = mesh.a + c * h;
    const double etaL = eta.at_node(c, n), etaR = eta.at_node(c + 1, n);
    const auto dofs = cell_dofs(mesh, c);
    for (int m = 0; m < 2; ++m) {
      const double t = 0.5 * (g.nodes[m] + 1.0);
      const double x = x0 + t * h;
      const double w = 0.5 * h * g.weights[m];
      const double etax = etaL * (1.0 - t) + etaR * t;
      const double phi[2] = {1.0 - t, t};
      for (int u = 0; u < 2; ++u) {
        if (dofs[u] < 0) continue;
        for (int v = 0; v < 2; ++v) {
          if (dofs[v] < 0) continue;
          M(dofs[u] - 1, dofs[v] - 1) += w * etax * phi[u] * phi[v];
        }
      }
      (void)x;
    }
  }
  return M;
}

Matrix assemble_mass(const Mesh1D& mesh) {
  return assemble_mass(mesh, WeightField::constant(mesh.n, 1.0));
}

Matrix oracle_stiffness(const Mesh1D& mesh) {
  if (mesh.n > kOracleMaxN)
    throw PreconditionError("oracle_stiffness: n exceeds the oracle budget (64)");
  const int n = mesh.n;
  const double h = mesh.h();
  const double q = 2.0 * mesh.s;
  Matrix A = Matrix::Zero(n, n);

  // G_ij(t) = int over {x in Omega, x-t in Omega} of
  //   (phi_i(x)-phi_i(x-t)) (phi_j(x)-phi_j(x-t)) dx,
  // accumulated for all pairs at once; exact per segment (2-pt Gauss on a
  // piecewise-quadratic integrand).
  auto accumulate_G = [&](double t, double weight, Matrix& out) {
    const double lo = mesh.a + t, hi = mesh.b;
    if (lo >= hi) return;
    std::vector<double> cuts;
    for (int m = 0; m <= n + 1; ++m) {
      const double xm = mesh.a + m * h;
      if (xm > lo && xm < hi) cuts.push_back(xm);
      const double xs = xm + t;
      if (xs > lo && xs < hi) cuts.push_back(xs);
    }
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    const GaussRule& g2 = gauss_rule(2);
    auto hat = [&](int i, double x) {
      const double xi = mesh.a + i * h;
      const double d = std::abs(x - xi);
      return d < h ? 1.0 - d / h : 0.0;
    };
    for (size_t sgm = 0; sgm + 1 < cuts.size(); ++sgm) {
      const double sa = cuts[sgm], sb = cuts[sgm + 1];
      if (sb - sa < 1e-300) continue;
      for (int m = 0; m < 2; ++m) {
        const double x = sa + 0.5 * (sb - sa) * (g2.nodes[m] + 1.0);
        const double w = weight * 0.5 * (sb - sa) * g2.weights[m];
        const double y = x - t;
        int act[4], na = 0;
        const int cx = std::clamp(static_cast<int>((x - mesh.a) / h), 0, n);
        const int cy = std::clamp(static_cast<int>((y - mesh.a) / h), 0, n);
        for (int i : {cx, cx + 1, cy, cy + 1}) {
          if (i < 1 || i > n) continue;
          bool seen = false;
          for (int k = 0; k < na; ++k) seen = seen || act[k] == i;
          if (!seen) act[na++] = i;
        }
        double diff[4];
        for (int k = 0; k < na; ++k) diff[k] = hat(act[k], x) - hat(act[k], y);
        for (int ku = 0; ku < na; ++ku)
          for (int kv = 0; kv < na; ++kv)
            out(act[ku] - 1, act[kv] - 1) += w * diff[ku] * diff[kv];
      }
    }
  };

  // A_Omega = 2 int_0^T t^{-1-q} G(t) dt. The knots of G as a function of t
  // sit at the multiples of h, so G is a single cubic on each panel; on (0,h)
  // additionally G(0) = G'(0) = 0, hence G(t) = c2 t^2 + c3 t^3 exactly.
  // The first panel integrates in closed form from two samples of G; the
  // remaining panels are smooth and use Gauss quadrature.
  const GaussRule& g16 = gauss_rule(16);
  auto add_panel = [&](double ta, double tb, const GaussRule& g) {
    for (size_t m = 0; m < g.nodes.size(); ++m) {
      const double t = ta + 0.5 * (tb - ta) * (g.nodes[m] + 1.0);
      const double w = 0.5 * (tb - ta) * g.weights[m];
      accumulate_G(t, 2.0 * w * std::pow(t, -1.0 - q), A);
    }
  };
  {
    const double t1 = h / 3.0, t2 = 2.0 * h / 3.0, t3 = 0.5 * h;
    Matrix G1 = Matrix::Zero(n, n), G2 = Matrix::Zero(n, n), G3 = Matrix::Zero(n, n);
    accumulate_G(t1, 1.0, G1);
    accumulate_G(t2, 1.0, G2);
    accumulate_G(t3, 1.0, G3);
    const double det = t1 * t1 * t2 * t2 * (t2 - t1);
    const Matrix c2 = (G1 * (t2 * t2 * t2) - G2 * (t1 * t1 * t1)) / det;
    const Matrix c3 = (G2 * (t1 * t1) - G1 * (t2 * t2)) / det;
    const Matrix resid = G3 - c2 * (t3 * t3) - c3 * (t3 * t3 * t3);
    const double gscale = std::max(G2.cwiseAbs().maxCoeff(), 1e-300);
    if (resid.cwiseAbs().maxCoeff() > 1e-10 * gscale)
      throw OracleError("oracle_stiffness: first-panel cubic fit check failed");
    A += 2.0 * (c2 * power_integral(0.0, h, 1.0 - q) +
                c3 * power_integral(0.0, h, 2.0 - q));
  }
  const int npanels = n + 1;  // T = (n+1) h
  for (int m = 1; m < npanels; ++m) add_panel(m * h, (m + 1) * h, g16);

  // complement part by dyadically graded brute-force quadrature in x
  auto kc = [&](double x) {
    return (std::pow(x - mesh.a, -q) + std::pow(mesh.b - x, -q)) / q;
  };
  auto complement_cell = [&](int c) {
    const double c0 = mesh.a + c * h;
    const auto dofs = cell_dofs(mesh, c);
    auto phi_at = [&](int slot, double x) {
      const LinearPiece p = basis_on_cell(mesh, dofs[slot] > 0 ? dofs[slot] : -1, c);
      return p.active ? p.a + p.b * x : 0.0;
    };
    auto scatter = [&](double w, double x, double kval) {
      const double phi[2] = {phi_at(0, x), phi_at(1, x)};
      for (int u = 0; u < 2; ++u) {
        if (dofs[u] < 0) continue;
        for (int v = 0; v < 2; ++v) {
          if (dofs[v] < 0) continue;
          A(dofs[u] - 1, dofs[v] - 1) += 2.0 * w * phi[u] * phi[v] * kval;
        }
      }
    };
    if (c == 0 || c == n) {
      // boundary cell: the touching kernel part is integrated dyadically in
      // the distance variable t to the endpoint; the far part stays smooth
      const bool left = (c == 0);
      for (int l = 0; l < 60; ++l) {
        const double ta = h * std::pow(0.5, l + 1), tb = h * std::pow(0.5, l);
        for (size_t m = 0; m < g16.nodes.size(); ++m) {
          const double t = ta + 0.5 * (tb - ta) * (g16.nodes[m] + 1.0);
          const double w = 0.5 * (tb - ta) * g16.weights[m];
          // only the hat rising from the endpoint is active, value t/h
          const double phi = t / h;
          const int dof = left ? 1 : n;
          A(dof - 1, dof - 1) += 2.0 * w * phi * phi * std::pow(t, -q) / q;
        }
      }
      for (size_t m = 0; m < g16.nodes.size(); ++m) {
        const double x = c0 + 0.5 * h * (g16.nodes[m] + 1.0);
        const double w = 0.5 * h * g16.weights[m];
        const double far = left ? std::pow(mesh.b - x, -q) : std::pow(x - mesh.a, -q);
        scatter(w, x, far / q);
      }
    } else {
      for (size_t m = 0; m < g16.nodes.size(); ++m) {
        const double x = c0 + 0.5 * h * (g16.nodes[m] + 1.0);
        const double w = 0.5 * h * g16.weights[m];
        scatter(w, x, kc(x));
      }
    }
  };
  for (int c = 0; c <= n; ++c) complement_cell(c);

  A = ((A + A.transpose()) * 0.5).eval();
  return A;
}

OperatorPair assemble_operators(const Mesh1D& mesh, const WeightField& eta) {
  return OperatorPair{assemble_stiffness(mesh), assemble_mass(mesh),
                      assemble_mass(mesh, eta)};
}

OperatorPair assemble_operators(const Mesh1D& mesh) {
  Matrix A = assemble_stiffness(mesh);
  Matrix M = assemble_mass(mesh);
  return OperatorPair{std::move(A), M, M};
}

}  // namespace fracmorse
