#include "fracmorse/variational.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "fracmorse/quadrature.hpp"

namespace fracmorse {

namespace {

constexpr int kCellOrder = 4;  // exact through the cubic mass integrand

// Visit the 4 Gauss points of every cell; cb(i_left, i_right, phi_left,
// phi_right, uh, x, w) with i = 0 meaning a boundary (absent) dof.
template <typename F>
void for_quadrature(const Mesh1D& mesh, const Vector& u, F&& cb) {
  const int n = mesh.n;
  const double h = mesh.h();
  const GaussRule& g = gauss_rule(kCellOrder);
  for (int c = 0; c <= n; ++c) {
    const double x0 = mesh.a + c * h;
    const double ul = (c >= 1 && c <= n) ? u[c - 1] : 0.0;
    const double ur = (c + 1 >= 1 && c + 1 <= n) ? u[c] : 0.0;
    for (int m = 0; m < kCellOrder; ++m) {
      const double t = 0.5 * (g.nodes[m] + 1.0);
      const double w = 0.5 * h * g.weights[m];
      const double x = x0 + t * h;
      const double uh = ul * (1.0 - t) + ur * t;
      cb(c, c + 1, 1.0 - t, t, uh, x, w);
    }
  }
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalDomainError(std::string(what) + ": non-finite value");
}

double spectral_scale(const EnergyModel& model) {
  return model.ops.A.cwiseAbs().maxCoeff();
}

double dual_residual(const Eigen::LLT<Matrix>& lltA, const Vector& g) {
  return std::sqrt(std::max(0.0, g.dot(lltA.solve(g))));
}

// eigenvalue count of the symmetric matrix strictly below x, via Sturm
// sequence on the tridiagonal reduction
struct SturmCounter {
  Vector diag, sub;

  explicit SturmCounter(const Matrix& H) {
    Eigen::Tridiagonalization<Matrix> tri(H);
    diag = tri.diagonal();
    sub = tri.subDiagonal();
  }

  int below(double x) const {
    const int n = static_cast<int>(diag.size());
    int count = 0;
    double d = diag[0] - x;
    if (d < 0.0) ++count;
    for (int i = 1; i < n; ++i) {
      double denom = d;
      if (denom == 0.0) denom = 1e-300;
      d = diag[i] - x - sub[i - 1] * sub[i - 1] / denom;
      if (d < 0.0) ++count;
    }
    return count;
  }
};

CriticalPoint classify(const EnergyModel& model, const Vector& u,
                       Provenance prov, const SolverConfig& cfg,
                       const Eigen::LLT<Matrix>& lltA) {
  CriticalPoint cp;
  cp.u = u;
  cp.energy = energy(model, u);
  const Vector g = gradient(model, u);
  cp.residual_euclid = g.norm();
  cp.residual_dual = dual_residual(lltA, g);
  const MorseData md = morse_data(model, u, cfg.kernel_tol);
  cp.morse_index = md.index;
  cp.nullity = md.nullity;
  cp.degenerate_warning = md.warning;
  cp.sign = classify_sign(u);
  cp.provenance = prov;
  return cp;
}

// damped Newton iteration toward grad phi = 0; returns success
bool newton_polish(const EnergyModel& model, Vector& u, const SolverConfig& cfg,
                   const Eigen::LLT<Matrix>& lltA, int max_iter) {
  const double scale = spectral_scale(model);
  for (int it = 0; it < max_iter; ++it) {
    Vector g = gradient(model, u);
    double res = dual_residual(lltA, g);
    if (res <= cfg.tol) return true;
    Matrix H = hessian(model, u);
    Eigen::LDLT<Matrix> ldlt(H);
    Vector d;
    if (ldlt.info() == Eigen::Success &&
        ldlt.vectorD().cwiseAbs().minCoeff() > 1e-14 * scale) {
      d = ldlt.solve(-g);
    } else {
      Matrix Hs = H + 1e-8 * scale * Matrix::Identity(H.rows(), H.cols());
      d = Hs.ldlt().solve(-g);
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      Vector trial = u + alpha * d;
      const double tres = dual_residual(lltA, gradient(model, trial));
      if (tres < (1.0 - 1e-4 * alpha) * res) {
        u = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return false;
  }
  return dual_residual(lltA, gradient(model, u)) <= cfg.tol;
}

}  // namespace

double energy(const EnergyModel& model, const Vector& u) {
  if (u.size() != model.ops.A.rows())
    throw PreconditionError("energy: vector size mismatch");
  double reaction_part = 0.0;
  for_quadrature(model.mesh, u,
                 [&](int, int, double, double, double uh, double x, double w) {
                   reaction_part += w * model.r.F(x, uh);
                 });
  check_finite(reaction_part, "energy");
  return 0.5 * u.dot(model.ops.A * u) - reaction_part;
}

Vector gradient(const EnergyModel& model, const Vector& u) {
  if (u.size() != model.ops.A.rows())
    throw PreconditionError("gradient: vector size mismatch");
  const int n = model.mesh.n;
  Vector b = Vector::Zero(n);
  for_quadrature(model.mesh, u,
                 [&](int il, int ir, double pl, double pr, double uh, double x, double w) {
                   const double fv = w * model.r.f(x, uh);
                   if (il >= 1 && il <= n) b[il - 1] += fv * pl;
                   if (ir >= 1 && ir <= n) b[ir - 1] += fv * pr;
                 });
  check_finite(b.sum(), "gradient");
  return model.ops.A * u - b;
}

Matrix hessian(const EnergyModel& model, const Vector& u) {
  if (u.size() != model.ops.A.rows())
    throw PreconditionError("hessian: vector size mismatch");
  const int n = model.mesh.n;
  Matrix C = Matrix::Zero(n, n);
  for_quadrature(model.mesh, u,
                 [&](int il, int ir, double pl, double pr, double uh, double x, double w) {
                   const double fp = w * model.r.fprime(x, uh);
                   if (il >= 1 && il <= n) C(il - 1, il - 1) += fp * pl * pl;
                   if (ir >= 1 && ir <= n) C(ir - 1, ir - 1) += fp * pr * pr;
                   if (il >= 1 && il <= n && ir <= n) {
                     C(il - 1, ir - 1) += fp * pl * pr;
                     C(ir - 1, il - 1) += fp * pl * pr;
                   }
                 });
  check_finite(C.sum(), "hessian");
  return model.ops.A - C;
}

SignClass classify_sign(const Vector& u, double tol) {
  const double mx = u.maxCoeff(), mn = u.minCoeff();
  if (std::abs(mx) <= tol && std::abs(mn) <= tol) return SignClass::zero;
  if (mn > -tol) return SignClass::positive;
  if (mx < tol) return SignClass::negative;
  return SignClass::mixed;
}

MorseData morse_data(const EnergyModel& model, const Vector& u, double kernel_tol) {
  const Matrix H = symmetrize(hessian(model, u));
  const double tau = kernel_tol * spectral_scale(model);
  SturmCounter sturm(H);
  MorseData md;
  md.index = sturm.below(-tau);
  md.nullity = sturm.below(tau) - md.index;
  // threshold sensitivity: widen and narrow the band; disagreement means a
  // cluster sits near the cut, so fall back to explicit eigenvalues
  const int lo_wide = sturm.below(-3.0 * tau), hi_wide = sturm.below(3.0 * tau);
  const int lo_narrow = sturm.below(-tau / 3.0), hi_narrow = sturm.below(tau / 3.0);
  if (lo_wide != lo_narrow || hi_wide != hi_narrow) {
    md.warning = true;
    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    int idx = 0, nul = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()[i] < -tau)
        ++idx;
      else if (es.eigenvalues()[i] <= tau)
        ++nul;
    }
    md.index = idx;
    md.nullity = nul;
  }
  return md;
}

CriticalPoint minimize(const EnergyModel& model, const Vector& u0,
                       const SolverConfig& cfg) {
  Eigen::LLT<Matrix> lltA(symmetrize(model.ops.A));
  if (lltA.info() != Eigen::Success)
    throw SolverError("minimize: stiffness factorization failed", 0, 0.0);
  Vector u = u0;
  double last_res = 0.0;
  const double diverge_norm = 1e8 * std::max(1.0, u0.norm());
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (u.norm() > diverge_norm)
      throw NonConvergenceError("minimize: iterates diverged", it, last_res);
    const Vector g = gradient(model, u);
    last_res = dual_residual(lltA, g);
    if (last_res <= cfg.tol) return classify(model, u, Provenance::minimizer, cfg, lltA);
    Vector d;
    const Matrix H = hessian(model, u);
    Eigen::LLT<Matrix> lltH(symmetrize(H));
    if (lltH.info() == Eigen::Success)
      d = lltH.solve(-g);  // Newton step in the convex regime
    else
      d = -lltA.solve(g);  // preconditioned steepest descent
    const double phi0 = energy(model, u);
    const double slope = g.dot(d);
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      const Vector trial = u + alpha * d;
      double phi_trial;
      try {
        phi_trial = energy(model, trial);
      } catch (const NumericalDomainError&) {
        alpha *= 0.5;  // overflowed trial, shrink the step
        continue;
      }
      if (phi_trial <= phi0 + 1e-4 * alpha * slope) {
        u = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw NonConvergenceError("minimize: line search stalled", it, last_res);
  }
  throw NonConvergenceError("minimize: iteration budget exhausted", cfg.max_iter,
                            last_res);
}

CriticalPoint mountain_pass(const EnergyModel& model, const Vector& endpoint,
                            const SolverConfig& cfg) {
  const int n = model.mesh.n;
  if (endpoint.size() != n) throw PreconditionError("mountain_pass: size mismatch");
  Eigen::LLT<Matrix> lltA(symmetrize(model.ops.A));
  const double phi_end = energy(model, endpoint);
  if (!(phi_end < 0.0))
    throw GeometryError("mountain_pass: endpoint must have negative energy");

  const double enorm = std::sqrt(endpoint.dot(model.ops.A * endpoint));
  // strict-local-min ring at radius r in the A-norm
  const double r = 0.05 * enorm;
  {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double ring_min = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 32; ++t) {
      Vector v(n);
      for (int i = 0; i < n; ++i) v[i] = gauss(rng);
      v *= r / std::sqrt(v.dot(model.ops.A * v));
      ring_min = std::min(ring_min, energy(model, v));
    }
    if (!(ring_min > std::max(energy(model, Vector::Zero(n)), phi_end)))
      throw GeometryError("mountain_pass: no strict-local-minimum ring detected");
  }

  const int P = std::max(5, cfg.path_nodes);
  std::vector<Vector> path(P);
  for (int i = 0; i < P; ++i) path[i] = (double(i) / (P - 1)) * endpoint;

  const double scale = spectral_scale(model);
  double last_res = 0.0;
  double best_level = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    // locate the path maximum
    int mx = 0;
    double phimax = -std::numeric_limits<double>::infinity();
    std::vector<double> phis(P);
    for (int i = 0; i < P; ++i) {
      phis[i] = energy(model, path[i]);
      if (phis[i] > phimax) {
        phimax = phis[i];
        mx = i;
      }
    }
    if (mx == 0 || mx == P - 1)
      throw GeometryError("mountain_pass: path maximum drifted into an endpoint");

    // the deformation can reach a fixed point of the deform/re-parametrize map
    // with the discrete maximum still above the polish trigger; detect the
    // stalled minimax level and polish from the stuck maximum anyway
    if (phimax < best_level - 1e-12 * std::max(1.0, std::abs(best_level))) {
      best_level = phimax;
      stalled = 0;
    } else {
      ++stalled;
    }

    Vector g = gradient(model, path[mx]);
    last_res = dual_residual(lltA, g);
    if (last_res <= cfg.switch_tol * scale || last_res <= cfg.tol || stalled >= 50) {
      Vector u = path[mx];
      if (newton_polish(model, u, cfg, lltA, cfg.max_iter) &&
          energy(model, u) > 0.0) {
        CriticalPoint cp = classify(model, u, Provenance::mountain_pass, cfg, lltA);
        return cp;
      }
      if (stalled >= 50)
        throw NonConvergenceError("mountain_pass: deformation stalled", outer, last_res);
      // polish failed: keep deforming
    }

    // deform every interior node downhill; Armijo only on the maximum node
    for (int i = 1; i + 1 < P; ++i) {
      Vector gi = (i == mx) ? g : gradient(model, path[i]);
      Vector d = -lltA.solve(gi);
      const double dn = std::sqrt(d.dot(model.ops.A * d));
      if (dn < 1e-300) continue;
      const double cap = 0.1 * enorm;
      if (dn > cap) d *= cap / dn;
      if (i == mx) {
        double alpha = 1.0;
        for (int half = 0; half < 30; ++half) {
          if (energy(model, path[i] + alpha * d) < phis[i]) {
            path[i] += alpha * d;
            break;
          }
          alpha *= 0.5;
        }
      } else {
        path[i] += 0.2 * d;
      }
    }

    // re-parametrize to equal A-norm spacing
    std::vector<double> len(P, 0.0);
    for (int i = 1; i < P; ++i) {
      const Vector dv = path[i] - path[i - 1];
      len[i] = len[i - 1] + std::sqrt(std::max(0.0, dv.dot(model.ops.A * dv)));
    }
    if (len[P - 1] > 0.0) {
      std::vector<Vector> fresh(P);
      fresh[0] = path[0];
      fresh[P - 1] = path[P - 1];
      for (int i = 1; i + 1 < P; ++i) {
        const double target = len[P - 1] * i / (P - 1);
        int seg = 1;
        while (seg < P - 1 && len[seg] < target) ++seg;
        const double t = (target - len[seg - 1]) / std::max(1e-300, len[seg] - len[seg - 1]);
        fresh[i] = (1.0 - t) * path[seg - 1] + t * path[seg];
      }
      path = std::move(fresh);
    }
  }
  throw NonConvergenceError("mountain_pass: outer budget exhausted", cfg.max_outer,
                            last_res);
}

std::vector<CriticalPoint> newton_multistart(const EnergyModel& model, int n_starts,
                                             unsigned seed, const SolverConfig& cfg) {
  const int n = model.mesh.n;
  Eigen::LLT<Matrix> lltA(symmetrize(model.ops.A));
  const int span = std::min(cfg.span_modes, n);
  EigenSet modes = solve_eigen(model.ops, span);
  const Vector e1 = modes.vectors.col(0);
  const double e1_anorm = std::sqrt(e1.dot(model.ops.A * e1));
  const double mags[3] = {0.1, 1.0, 10.0};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<CriticalPoint> found;

  auto try_add = [&](Vector u) {
    const double ua = std::sqrt(u.dot(model.ops.A * u));
    for (const CriticalPoint& cp : found) {
      const Vector dv = u - cp.u;
      const double dist = std::sqrt(std::max(0.0, dv.dot(model.ops.A * dv)));
      if (dist <= 1e-4 * std::max(1.0, ua)) return;
    }
    found.push_back(classify(model, u, Provenance::newton, cfg, lltA));
  };

  // the zero state is always a candidate critical point of the shipped models
  {
    Vector z = Vector::Zero(n);
    if (dual_residual(lltA, gradient(model, z)) <= cfg.tol) try_add(z);
  }

  for (int st = 0; st < n_starts; ++st) {
    Vector coeff(span);
    for (int j = 0; j < span; ++j) coeff[j] = gauss(rng);
    Vector u0 = modes.vectors.leftCols(span) * coeff;
    const double an = std::sqrt(u0.dot(model.ops.A * u0));
    if (an < 1e-14) continue;
    u0 *= mags[st % 3] * e1_anorm / an;
    Vector u = u0;
    if (newton_polish(model, u, cfg, lltA, cfg.max_iter)) try_add(u);
  }
  return found;
}

}  // namespace fracmorse
