#include "fracmorse/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace fracmorse {

Matrix symmetrize(const Matrix& X) { return 0.5 * (X + X.transpose()); }

namespace {

void fix_sign(Vector& e) {
  int idx = 0;
  e.cwiseAbs().maxCoeff(&idx);
  if (e[idx] < 0.0) e = -e;
}

double eta_norm(const Matrix& M_eta, const Vector& u) {
  return std::sqrt(u.dot(M_eta * u));
}

}  // namespace

std::string sign_class(const Vector& e) {
  bool pos = false, neg = false;
  for (int i = 0; i < e.size(); ++i) {
    pos = pos || e[i] > 0.0;
    neg = neg || e[i] < 0.0;
  }
  return (pos && neg) ? "nodal" : "one-signed";
}

EigenSet solve_eigen(const OperatorPair& ops, int k_max) {
  const int n = static_cast<int>(ops.A.rows());
  if (k_max < 1 || k_max > n)
    throw PreconditionError("solve_eigen: k_max must lie in [1, n]");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(ops.A),
                                                      symmetrize(ops.M_eta));
  if (es.info() != Eigen::Success)
    throw SolverError("solve_eigen: generalized eigensolver failed", 0, 0.0);

  EigenSet set;
  set.lambdas = es.eigenvalues().head(k_max);
  set.vectors = es.eigenvectors().leftCols(k_max);
  const double anorm = ops.A.cwiseAbs().maxCoeff();
  for (int k = 0; k < k_max; ++k) {
    Vector e = set.vectors.col(k);
    e /= eta_norm(ops.M_eta, e);
    fix_sign(e);
    set.vectors.col(k) = e;
    const double res = (ops.A * e - set.lambdas[k] * (ops.M_eta * e)).norm();
    if (!(res <= kEigenResidualTol * anorm * std::max(1.0, e.norm())))
      throw SolverError("solve_eigen: residual exceeds tolerance", k, res);
  }
  return set;
}

double rayleigh_quotient(const OperatorPair& ops, const Vector& u) {
  if (u.size() != ops.A.rows() || u.norm() == 0.0)
    throw PreconditionError("rayleigh_quotient: nonzero vector of matching size required");
  return u.dot(ops.A * u) / u.dot(ops.M_eta * u);
}

std::pair<double, Vector> deflated_minimize(const OperatorPair& ops, int k,
                                            int restarts, unsigned seed) {
  const int n = static_cast<int>(ops.A.rows());
  if (k < 1 || k > n) throw PreconditionError("deflated_minimize: k out of range");
  if (restarts < 1) throw PreconditionError("deflated_minimize: need at least one restart");

  Eigen::LLT<Matrix> llt(symmetrize(ops.A));
  if (llt.info() != Eigen::Success)
    throw SolverError("deflated_minimize: stiffness factorization failed", 0, 0.0);
  const double anorm = ops.A.cwiseAbs().maxCoeff();
  const double stat_tol = 1e-11 * anorm;
  const int max_iter = 2000;

  Matrix deflate(n, 0);  // columns e_1..e_{j-1}, eta-normalized
  auto project = [&](Vector& u) {
    for (int c = 0; c < deflate.cols(); ++c) {
      const Vector ec = deflate.col(c);
      u -= ec * ec.dot(ops.M_eta * u);
    }
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double lam = 0.0;
  Vector best;

  for (int mode = 1; mode <= k; ++mode) {
    bool converged = false;
    double mode_lam = 0.0;
    Vector mode_vec;
    double last_res = 0.0;
    for (int r = 0; r < restarts && !converged; ++r) {
      Vector u(n);
      for (int i = 0; i < n; ++i) u[i] = gauss(rng);
      project(u);
      const double nrm = eta_norm(ops.M_eta, u);
      if (nrm < 1e-12) continue;
      u /= nrm;
      for (int it = 0; it < max_iter; ++it) {
        const Vector Au = ops.A * u;
        const Vector Mu = ops.M_eta * u;
        const double l = u.dot(Au) / u.dot(Mu);
        Vector g = Au - l * Mu;
        project(g);
        last_res = g.norm();
        if (last_res <= stat_tol) {
          mode_lam = l;
          mode_vec = u;
          converged = true;
          break;
        }
        Vector d = llt.solve(g);
        project(d);
        // Rayleigh-Ritz on span{u, d}
        Matrix B(n, 2);
        B.col(0) = u;
        B.col(1) = d;
        const Matrix Ab = symmetrize(B.transpose() * ops.A * B);
        const Matrix Mb = symmetrize(B.transpose() * ops.M_eta * B);
        if (Mb.determinant() <= 1e-30 * Mb.trace() * Mb.trace()) break;
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es2(Ab, Mb);
        const Eigen::Vector2d c = es2.eigenvectors().col(0);
        u = B * c;
        project(u);
        const double un = eta_norm(ops.M_eta, u);
        if (un < 1e-14) break;
        u /= un;
      }
    }
    if (!converged)
      throw NonConvergenceError("deflated_minimize: restarts exhausted before stationarity",
                                max_iter, last_res);
    fix_sign(mode_vec);
    deflate.conservativeResize(n, deflate.cols() + 1);
    deflate.col(deflate.cols() - 1) = mode_vec;
    lam = mode_lam;
    best = mode_vec;
  }
  return {lam, best};
}

CourantFischerReport courant_fischer_check(const OperatorPair& ops, int k,
                                           int trials, unsigned seed) {
  const int n = static_cast<int>(ops.A.rows());
  if (k < 1 || k > n) throw PreconditionError("courant_fischer_check: k out of range");
  EigenSet set = solve_eigen(ops, k);

  // inf over the unit A-sphere of F of u' M_eta u equals the smallest
  // eigenvalue of (F'M_eta F, F'AF)
  auto subspace_inf = [&](const Matrix& F) {
    const Matrix Mf = symmetrize(F.transpose() * ops.M_eta * F);
    const Matrix Af = symmetrize(F.transpose() * ops.A * F);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(Mf, Af);
    return es.eigenvalues()[0];
  };

  CourantFischerReport rep;
  rep.bound = 1.0 / set.lambdas[k - 1];
  rep.trials = trials;
  rep.attained = subspace_inf(set.vectors.leftCols(k));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  rep.max_sampled = -std::numeric_limits<double>::infinity();
  const double tol = 1e-10 * std::max(1.0, rep.bound);
  for (int t = 0; t < trials; ++t) {
    Matrix F(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) F(i, j) = gauss(rng);
    const double v = subspace_inf(F);
    rep.max_sampled = std::max(rep.max_sampled, v);
    if (v > rep.bound + tol) ++rep.violations;
  }
  return rep;
}

SpectrumReport monotonicity_check(const Mesh1D& mesh, const WeightField& eta1,
                                  const WeightField& eta2, int k_max) {
  if (eta1.values.size() != eta2.values.size())
    throw PreconditionError("monotonicity_check: weight size mismatch");
  bool equal = true;
  for (size_t i = 0; i < eta1.values.size(); ++i) {
    if (eta2.values[i] < eta1.values[i])
      throw PreconditionError("monotonicity_check: eta2 must dominate eta1 nodally");
    equal = equal && eta2.values[i] == eta1.values[i];
  }
  if (equal) throw PreconditionError("monotonicity_check: weights must differ");

  const Matrix A = assemble_stiffness(mesh);
  const Matrix M = assemble_mass(mesh);
  OperatorPair ops1{A, M, assemble_mass(mesh, eta1)};
  OperatorPair ops2{A, M, assemble_mass(mesh, eta2)};
  EigenSet s1 = solve_eigen(ops1, k_max);
  EigenSet s2 = solve_eigen(ops2, k_max);

  SpectrumReport rep;
  rep.gap_1_2 = k_max >= 2 ? s1.lambdas[1] - s1.lambdas[0] : 0.0;
  const double tol = 1e-9 * std::max(1.0, s1.lambdas[k_max - 1]);
  for (int k = 0; k < k_max; ++k) {
    rep.sign_class.push_back(sign_class(s1.vectors.col(k)));
    rep.records.push_back({k + 1, s1.lambdas[k], s2.lambdas[k]});
    if (s1.lambdas[k] < s2.lambdas[k] - tol)
      throw SolverError("monotonicity_check: eigenvalue ordering violated", k,
                        s2.lambdas[k] - s1.lambdas[k]);
    if (s1.lambdas[k] - s2.lambdas[k] > 1e-8 * std::max(1.0, s1.lambdas[k]))
      ++rep.strict_count;
  }
  return rep;
}

}  // namespace fracmorse
