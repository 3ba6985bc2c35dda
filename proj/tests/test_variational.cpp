#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fracmorse/quadrature.hpp"
#include "fracmorse/variational.hpp"

using namespace fracmorse;

namespace {

struct Setup {
  Mesh1D mesh;
  OperatorPair ops;
  EigenSet sp;

  explicit Setup(int n, double s = 0.5)
      : mesh(-1.0, 1.0, n, s), ops(assemble_operators(mesh)),
        sp(solve_eigen(ops, std::min(8, n))) {}
};

// acceptance wiring of the multiple-solutions example: linear slope mu on
// [-1,1], asymptotic slope at the upper edge lambda_{k+1} of the declared
// spectral interval [lambda_k, lambda_{k+1}]
EnergyModel h2_model(const Setup& st, int k = 2) {
  const double mu = 0.5 * st.sp.lambdas[0];
  return EnergyModel{st.ops, example_reaction(mu, k + 1, st.sp.lambdas), st.mesh};
}

EnergyModel h1_model(const Setup& st, int k = 2) {
  const double mu = 0.5 * (st.sp.lambdas[0] + st.sp.lambdas[1]);
  return EnergyModel{st.ops, example_reaction(mu, k + 1, st.sp.lambdas), st.mesh};
}

Vector random_vector(int n, double amp, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  Vector u(n);
  for (int i = 0; i < n; ++i) u[i] = dist(rng);
  return u;
}

// refined quadrature of the reaction integral (8 subcells, 10-point Gauss)
double reaction_integral_oracle(const EnergyModel& m, const Vector& u) {
  const int n = m.mesh.n;
  const double h = m.mesh.h();
  const GaussRule& g = gauss_rule(10);
  double total = 0.0;
  for (int c = 0; c <= n; ++c) {
    const double x0 = m.mesh.a + c * h;
    const double ul = (c >= 1 && c <= n) ? u[c - 1] : 0.0;
    const double ur = (c + 1 >= 1 && c + 1 <= n) ? u[c] : 0.0;
    for (int sub = 0; sub < 8; ++sub) {
      const double t0 = sub / 8.0, t1 = (sub + 1) / 8.0;
      for (size_t q = 0; q < g.nodes.size(); ++q) {
        const double t = t0 + 0.5 * (t1 - t0) * (g.nodes[q] + 1.0);
        const double w = 0.5 * (t1 - t0) * h * g.weights[q];
        total += w * m.r.F(x0 + t * h, ul * (1.0 - t) + ur * t);
      }
    }
  }
  return total;
}

}  // namespace

TEST_CASE("energy and gradient vanish at zero") {
  Setup st(32);
  EnergyModel m = h2_model(st);
  Vector z = Vector::Zero(32);
  CHECK(energy(m, z) == 0.0);
  CHECK(gradient(m, z).norm() == 0.0);
}

TEST_CASE("linear reaction reduces to the quadratic pencil") {
  Setup st(32);
  const double lam = 0.5 * (st.sp.lambdas[1] + st.sp.lambdas[2]);
  EnergyModel m{st.ops, linear_reaction(lam), st.mesh};
  const Vector u = random_vector(32, 2.0, 5);
  const double quad = 0.5 * u.dot(st.ops.A * u) - 0.5 * lam * u.dot(st.ops.M * u);
  CHECK(energy(m, u) == doctest::Approx(quad).epsilon(1e-13));
  const Vector g = (st.ops.A - lam * st.ops.M) * u;
  CHECK((gradient(m, u) - g).norm() < 1e-12 * g.norm());
  const Matrix H = hessian(m, u);
  CHECK((H - st.ops.A + lam * st.ops.M).cwiseAbs().maxCoeff() <
        1e-13 * st.ops.A.cwiseAbs().maxCoeff());
}

TEST_CASE("hessian at zero is the linearized pencil") {
  Setup st(48);
  EnergyModel m = h2_model(st);
  const double mu = 0.5 * st.sp.lambdas[0];
  const Matrix H0 = hessian(m, Vector::Zero(48));
  CHECK((H0 - st.ops.A + mu * st.ops.M).cwiseAbs().maxCoeff() <
        1e-12 * st.ops.A.cwiseAbs().maxCoeff());
  Eigen::LLT<Matrix> llt(H0);
  CHECK(llt.info() == Eigen::Success);  // mu < lambda_1
}

TEST_CASE("finite-difference consistency of gradient and hessian") {
  Setup st(64);
  std::vector<EnergyModel> models;
  models.push_back(h2_model(st));
  models.push_back(h1_model(st));
  models.push_back({st.ops, truncate(models[0].r, TruncSign::plus), st.mesh});
  models.push_back({st.ops, truncate(models[0].r, TruncSign::minus), st.mesh});
  const double eps = 1e-5;
  int probe = 0;
  for (const EnergyModel& m : models) {
    for (int rep = 0; rep < 20; ++rep) {
      const Vector u = random_vector(64, 2.0, 100 + probe);
      const Vector v = random_vector(64, 1.0, 200 + probe);
      ++probe;
      const double fd = (energy(m, u + eps * v) - energy(m, u - eps * v)) / (2.0 * eps);
      const double gv = gradient(m, u).dot(v);
      CHECK(std::abs(fd - gv) < 1e-6 * std::max(1.0, std::abs(gv)));
      const Vector hfd = (gradient(m, u + eps * v) - gradient(m, u - eps * v)) / (2.0 * eps);
      const Vector hv = hessian(m, u) * v;
      CHECK((hfd - hv).norm() < 1e-5 * std::max(1.0, hv.norm()));
    }
  }
}

TEST_CASE("reaction quadrature against a refined oracle") {
  Setup st(32);
  EnergyModel m = h2_model(st);
  // inside the linear band the cell integrand is a polynomial and the fixed
  // rule is exact
  {
    const Vector u = random_vector(32, 0.9, 7);
    const double coarse = 0.5 * u.dot(st.ops.A * u) - energy(m, u);
    const double fine = reaction_integral_oracle(m, u);
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-12));
  }
  // kink-crossing amplitudes: fixed 4-point rule, documented looser tolerance
  {
    const Vector u = random_vector(32, 3.0, 8);
    const double coarse = 0.5 * u.dot(st.ops.A * u) - energy(m, u);
    const double fine = reaction_integral_oracle(m, u);
    CHECK(coarse == doctest::Approx(fine).epsilon(2e-3));
  }
}

TEST_CASE("truncation identity on one-signed vectors") {
  Setup st(32);
  EnergyModel m = h2_model(st);
  EnergyModel mp{st.ops, truncate(m.r, TruncSign::plus), st.mesh};
  Vector u = random_vector(32, 2.0, 9).cwiseAbs();
  CHECK(energy(mp, u) == energy(m, u));
  CHECK((gradient(mp, u) - gradient(m, u)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sign classification") {
  Vector u(3);
  u << 0.0, 0.0, 0.0;
  CHECK(classify_sign(u) == SignClass::zero);
  u << 1.0, 0.5, 2.0;
  CHECK(classify_sign(u) == SignClass::positive);
  u << -1.0, -0.5, 0.0;
  CHECK(classify_sign(u) == SignClass::negative);
  u << -1.0, 0.5, 2.0;
  CHECK(classify_sign(u) == SignClass::mixed);
}

TEST_CASE("inertia at the origin tracks the spectral position of the slope") {
  Setup st(64);
  const Vector z = Vector::Zero(64);
  {
    MorseData md = morse_data(h2_model(st), z);
    CHECK(md.index == 0);
    CHECK(md.nullity == 0);
  }
  {
    MorseData md = morse_data(h1_model(st), z);
    CHECK(md.index == 1);
    CHECK(md.nullity == 0);
  }
  for (int k : {1, 2, 3}) {
    const double lam = 0.5 * (st.sp.lambdas[k - 1] + st.sp.lambdas[k]);
    EnergyModel m{st.ops, linear_reaction(lam), st.mesh};
    MorseData md = morse_data(m, z);
    CHECK(md.index == k);
    CHECK(md.nullity == 0);
    CHECK_FALSE(md.warning);
  }
  // exact eigen-slope sits in the kernel band
  {
    EnergyModel m{st.ops, linear_reaction(st.sp.lambdas[1]), st.mesh};
    MorseData md = morse_data(m, z);
    CHECK(md.nullity == 1);
    CHECK(md.index == 1);
  }
}

TEST_CASE("minimize stays at the origin and respects the local basin") {
  Setup st(64);
  EnergyModel m = h2_model(st);
  SolverConfig cfg;
  CriticalPoint cp = minimize(m, Vector::Zero(64), cfg);
  CHECK(cp.sign == SignClass::zero);
  CHECK(cp.provenance == Provenance::minimizer);
  CHECK(cp.residual_dual <= cfg.tol);
  // small starts in the basin of the strict local minimum fall back to 0
  EnergyModel mp{st.ops, truncate(m.r, TruncSign::plus), st.mesh};
  CriticalPoint basin = minimize(mp, 0.01 * st.sp.vectors.col(0), cfg);
  CHECK(basin.sign == SignClass::zero);
  // the truncated functional is unbounded below along e_1, so descent from a
  // negative-energy point diverges rather than converging to a minimum
  Vector e1 = st.sp.vectors.col(0);
  double tau = 1.0;
  while (energy(mp, tau * e1) >= 0.0) tau *= 1.5;
  CHECK_THROWS_AS(minimize(mp, tau * e1, cfg), NonConvergenceError);
}

TEST_CASE("mountain pass finds the one-signed index-1 solutions") {
  Setup st(64);
  EnergyModel base = h2_model(st);
  SolverConfig cfg;
  const Vector e1 = st.sp.vectors.col(0);

  EnergyModel mp{st.ops, truncate(base.r, TruncSign::plus), st.mesh};
  double tau = 1.0;
  while (energy(mp, tau * e1) >= 0.0) tau *= 1.5;
  CriticalPoint up = mountain_pass(mp, tau * e1, cfg);
  CHECK(up.sign == SignClass::positive);
  CHECK(up.provenance == Provenance::mountain_pass);
  CHECK(up.residual_dual <= cfg.tol);
  CHECK(up.energy > 0.0);
  if (!up.degenerate_warning) {
    CHECK(up.morse_index == 1);
    CHECK(up.nullity == 0);
  }

  EnergyModel mm{st.ops, truncate(base.r, TruncSign::minus), st.mesh};
  CriticalPoint um = mountain_pass(mm, -tau * e1, cfg);
  CHECK(um.sign == SignClass::negative);
  CHECK(um.residual_dual <= cfg.tol);
  // odd reaction on a symmetric interval: the pair is an exact mirror
  CHECK((up.u + um.u).cwiseAbs().maxCoeff() < 1e-6 * up.u.cwiseAbs().maxCoeff());

  // convex quadratic energy has no mountain-pass geometry
  EnergyModel lin{st.ops, linear_reaction(0.5 * st.sp.lambdas[0]), st.mesh};
  CHECK_THROWS_AS(mountain_pass(lin, tau * e1, cfg), GeometryError);
}

TEST_CASE("multistart recovers the multiple-solution structure") {
  Setup st(64);
  SolverConfig cfg;

  SUBCASE("three nontrivial solutions, one positive and one negative") {
    EnergyModel m = h2_model(st);
    auto pts = newton_multistart(m, 64, 31, cfg);
    int pos = 0, neg = 0, nontrivial = 0;
    for (const CriticalPoint& cp : pts) {
      CHECK(cp.residual_dual <= cfg.tol);
      if (cp.sign != SignClass::zero) ++nontrivial;
      if (cp.sign == SignClass::positive) ++pos;
      if (cp.sign == SignClass::negative) ++neg;
    }
    CHECK(nontrivial >= 3);
    CHECK(pos >= 1);
    CHECK(neg >= 1);
  }

  SUBCASE("existence configuration yields a nontrivial solution") {
    EnergyModel m = h1_model(st);
    auto pts = newton_multistart(m, 64, 17, cfg);
    int nontrivial = 0;
    for (const CriticalPoint& cp : pts)
      if (cp.sign != SignClass::zero) ++nontrivial;
    CHECK(nontrivial >= 1);
  }

  SUBCASE("nonresonant linear reaction has only the zero solution") {
    const double lam = 0.5 * (st.sp.lambdas[1] + st.sp.lambdas[2]);
    EnergyModel m{st.ops, linear_reaction(lam), st.mesh};
    auto pts = newton_multistart(m, 32, 3, cfg);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].sign == SignClass::zero);
  }

  SUBCASE("deterministic under a fixed seed") {
    EnergyModel m = h2_model(st);
    auto a = newton_multistart(m, 24, 77, cfg);
    auto b = newton_multistart(m, 24, 77, cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
      CHECK((a[i].u - b[i].u).cwiseAbs().maxCoeff() == 0.0);
  }
}
