// End-to-end acceptance checks, one summary line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fracmorse/runconfig.hpp"
#include "fracmorse/variational.hpp"

using namespace fracmorse;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  (%s)\n", criterion, pass ? "pass" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

WeightField bump_weight(const Mesh1D& mesh, double base = 1.0) {
  WeightField w = WeightField::constant(mesh.n, base);
  for (int i = 1; i <= mesh.n; ++i) {
    const double x = (mesh.node(i) - mesh.a) / (mesh.b - mesh.a);
    w.values[i - 1] += 1.5 * std::exp(-40.0 * (x - 0.3) * (x - 0.3));
  }
  return w;
}

WeightField ramp_weight(const Mesh1D& mesh) {
  WeightField w = WeightField::constant(mesh.n, 1.0);
  for (int i = 1; i <= mesh.n; ++i)
    w.values[i - 1] += (mesh.node(i) - mesh.a) / (mesh.b - mesh.a);
  return w;
}

void criterion_1() {
  const auto t0 = clock_type::now();
  double worst = 0.0;
  for (int n : {4, 8, 16, 32})
    for (double s : {0.25, 0.5, 0.75}) {
      Mesh1D mesh(-1.0, 1.0, n, s);
      const Matrix A = assemble_stiffness(mesh);
      const Matrix O = oracle_stiffness(mesh);
      worst = std::max(worst,
                       (A - O).cwiseAbs().maxCoeff() / O.cwiseAbs().maxCoeff());
    }
  const double dt = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max rel diff %.2e, %.1f s", worst, dt);
  report(1, worst <= 1e-8 && dt < 60.0, buf);
}

void criterion_2() {
  const auto t0 = clock_type::now();
  bool ok = true;
  std::string why = "spectral structure holds for 9 configurations";
  for (double s : {0.25, 0.5, 0.75}) {
    Mesh1D mesh(-1.0, 1.0, 256, s);
    const Matrix A = assemble_stiffness(mesh);
    std::vector<WeightField> weights{WeightField::constant(256, 1.0),
                                     bump_weight(mesh), ramp_weight(mesh)};
    for (const WeightField& w : weights) {
      OperatorPair ops{A, assemble_mass(mesh), assemble_mass(mesh, w)};
      EigenSet sp = solve_eigen(ops, 6);
      if (!(sp.lambdas[0] > 0.0)) ok = false, why = "lambda_1 not positive";
      if (!(sp.lambdas[1] - sp.lambdas[0] > 1e-6 * sp.lambdas[0]))
        ok = false, why = "gap too small";
      if (sign_class(sp.vectors.col(0)) != "one-signed")
        ok = false, why = "e_1 not one-signed";
      for (int k = 2; k <= 6; ++k)
        if (sign_class(sp.vectors.col(k - 1)) != "nodal")
          ok = false, why = "e_k not sign-changing";
      const Matrix G = sp.vectors.transpose() * ops.M_eta * sp.vectors;
      if ((G - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() >= 1e-8)
        ok = false, why = "orthonormality residual too large";
    }
  }
  const double dt = seconds_since(t0);
  report(2, ok && dt < 120.0, why + ", " + std::to_string(dt).substr(0, 5) + " s");
}

void criterion_3() {
  Mesh1D mesh(-1.0, 1.0, 128, 0.5);
  const Matrix A = assemble_stiffness(mesh);
  const Matrix M = assemble_mass(mesh);
  const Matrix Meta = assemble_mass(mesh, bump_weight(mesh));
  EigenSet ref = solve_eigen({A, M, Meta}, 6);
  double worst = 0.0;
  for (double c : {0.5, 2.0, 10.0}) {
    EigenSet sc = solve_eigen({A, M, c * Meta}, 6);
    for (int k = 0; k < 6; ++k)
      worst = std::max(worst,
                       std::abs(sc.lambdas[k] - ref.lambdas[k] / c) /
                           (ref.lambdas[k] / c));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max rel scaling error %.2e", worst);
  report(3, worst <= 1e-10, buf);
}

void criterion_4() {
  Mesh1D mesh(-1.0, 1.0, 128, 0.5);
  WeightField eta1 = WeightField::constant(128, 1.0);
  WeightField eta2 = bump_weight(mesh);
  SpectrumReport rep = monotonicity_check(mesh, eta1, eta2, 6);
  double min_margin = 1e300;
  bool ok = true;
  for (const MonotonicityRecord& r : rep.records) {
    const double margin = r.lambda_eta1 - r.lambda_eta2;
    min_margin = std::min(min_margin, margin);
    if (margin < -1e-10 * r.lambda_eta1) ok = false;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "min margin %.3e", min_margin);
  report(4, ok, buf);
}

void criterion_5() {
  Mesh1D mesh(-1.0, 1.0, 96, 0.5);
  OperatorPair ops = assemble_operators(mesh, bump_weight(mesh));
  bool ok = true;
  double worst_attained = 0.0;
  int violations = 0;
  for (int k = 1; k <= 4; ++k) {
    CourantFischerReport cf = courant_fischer_check(ops, k, 100, 42 + k);
    violations += cf.violations;
    worst_attained =
        std::max(worst_attained, std::abs(cf.attained - cf.bound) / cf.bound);
    if (cf.violations != 0 || std::abs(cf.attained - cf.bound) > 1e-8 * cf.bound)
      ok = false;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d violations, attainment error %.2e",
                violations, worst_attained);
  report(5, ok, buf);
}

void criterion_6() {
  Mesh1D mesh(-1.0, 1.0, 64, 0.5);
  OperatorPair ops = assemble_operators(mesh);
  EigenSet sp = solve_eigen(ops, 8);
  Reaction h2 = example_reaction(0.5 * sp.lambdas[0], 3, sp.lambdas);
  Reaction h1 = example_reaction(0.5 * (sp.lambdas[0] + sp.lambdas[1]), 3, sp.lambdas);
  std::vector<Reaction> rs{h2, h1, truncate(h2, TruncSign::plus),
                           truncate(h2, TruncSign::minus)};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  const double eps = 1e-5;
  double worst_g = 0.0, worst_h = 0.0;
  for (const Reaction& r : rs) {
    EnergyModel m{ops, r, mesh};
    for (int rep = 0; rep < 20; ++rep) {
      Vector u(64), v(64);
      for (int i = 0; i < 64; ++i) {
        u[i] = dist(rng);
        v[i] = dist(rng);
      }
      const double fd = (energy(m, u + eps * v) - energy(m, u - eps * v)) / (2 * eps);
      const double gv = gradient(m, u).dot(v);
      worst_g = std::max(worst_g, std::abs(fd - gv) / std::max(1.0, std::abs(gv)));
      const Vector hfd =
          (gradient(m, u + eps * v) - gradient(m, u - eps * v)) / (2 * eps);
      const Vector hv = hessian(m, u) * v;
      worst_h = std::max(worst_h, (hfd - hv).norm() / std::max(1.0, hv.norm()));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "gradient %.2e, hessian %.2e", worst_g, worst_h);
  report(6, worst_g <= 1e-6 && worst_h <= 1e-5, buf);
}

void criterion_7() {
  const auto t0 = clock_type::now();
  Mesh1D mesh(-1.0, 1.0, 128, 0.5);
  OperatorPair ops = assemble_operators(mesh);
  EigenSet sp = solve_eigen(ops, 8);
  const double mu = 0.5 * sp.lambdas[0];
  // spectral interval index k = 2: asymptotic slope at the upper edge lambda_3
  Reaction r = example_reaction(mu, 3, sp.lambdas);
  EnergyModel model{ops, r, mesh};
  SolverConfig cfg;

  MorseData at_zero = morse_data(model, Vector::Zero(128));
  const bool zero_ok = at_zero.index == 0 && at_zero.nullity == 0;

  // the truncated mountain passes are deterministic, shared across seeds
  const Vector e1 = sp.vectors.col(0);
  std::vector<CriticalPoint> passes;
  for (TruncSign ts : {TruncSign::plus, TruncSign::minus}) {
    EnergyModel trunc{ops, truncate(r, ts), mesh};
    const double dir = ts == TruncSign::plus ? 1.0 : -1.0;
    double tau = 1.0;
    while (tau < 1e6 && energy(trunc, dir * tau * e1) >= 0.0) tau *= 1.5;
    passes.push_back(mountain_pass(trunc, dir * tau * e1, cfg));
  }

  int good = 0, degenerate = 0;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    std::vector<CriticalPoint> pts = newton_multistart(model, 64, seed, cfg);
    pts.insert(pts.end(), passes.begin(), passes.end());
    std::vector<const CriticalPoint*> distinct;
    for (const CriticalPoint& cp : pts) {
      if (cp.sign == SignClass::zero || cp.residual_dual >= 1e-8) continue;
      bool dup = false;
      for (const CriticalPoint* q : distinct) {
        const Vector d = cp.u - q->u;
        if (std::sqrt(d.dot(ops.A * d)) <=
            1e-4 * std::max(1.0, std::sqrt(cp.u.dot(ops.A * cp.u))))
          dup = true;
      }
      if (!dup) distinct.push_back(&cp);
    }
    bool has_pos = false, has_neg = false, morse_ok = true, seed_degenerate = false;
    for (const CriticalPoint* cp : distinct) {
      const bool one_signed =
          cp->sign == SignClass::positive || cp->sign == SignClass::negative;
      if (cp->sign == SignClass::positive) has_pos = true;
      if (cp->sign == SignClass::negative) has_neg = true;
      if (one_signed) {
        if (cp->nullity > 0 || cp->degenerate_warning)
          seed_degenerate = true;
        else if (cp->morse_index != 1)
          morse_ok = false;
      }
    }
    if (seed_degenerate) {
      ++degenerate;
      std::printf("  criterion 7: seed %u degenerate, excluded\n", seed);
      continue;
    }
    if (distinct.size() >= 3 && has_pos && has_neg && morse_ok) ++good;
  }
  const double dt = seconds_since(t0);
  const int counted = 10 - degenerate;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d/%d seeds, morse(0)=(%d,%d), %.1f s", good,
                counted, at_zero.index, at_zero.nullity, dt);
  report(7, zero_ok && counted > 0 && 10 * good >= 9 * counted && dt < 300.0, buf);
}

void criterion_8() {
  const auto t0 = clock_type::now();
  Mesh1D mesh(-1.0, 1.0, 128, 0.5);
  OperatorPair ops = assemble_operators(mesh);
  EigenSet sp = solve_eigen(ops, 8);
  const double mu = 0.5 * (sp.lambdas[0] + sp.lambdas[1]);  // in (lambda_1, lambda_2)
  Reaction r = example_reaction(mu, 3, sp.lambdas);
  EnergyModel model{ops, r, mesh};
  SolverConfig cfg;
  MorseData at_zero = morse_data(model, Vector::Zero(128));
  int nontrivial = 0;
  for (const CriticalPoint& cp : newton_multistart(model, 64, 5, cfg))
    if (cp.sign != SignClass::zero && cp.residual_dual < 1e-8) ++nontrivial;
  const double dt = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d nontrivial, morse(0)=(%d,%d), %.1f s",
                nontrivial, at_zero.index, at_zero.nullity, dt);
  report(8, nontrivial >= 1 && at_zero.index == 1 && at_zero.nullity == 0 && dt < 180.0,
         buf);
}

void criterion_9() {
  Mesh1D mesh(-1.0, 1.0, 64, 0.5);
  OperatorPair ops = assemble_operators(mesh);
  EigenSet sp = solve_eigen(ops, 5);
  SolverConfig cfg;
  bool ok = true;
  std::string detail;
  for (int k : {1, 2, 3}) {
    const double lam = 0.5 * (sp.lambdas[k - 1] + sp.lambdas[k]);
    EnergyModel m{ops, linear_reaction(lam), mesh};
    MorseData md = morse_data(m, Vector::Zero(64));
    auto pts = newton_multistart(m, 32, 9, cfg);
    const bool only_zero = pts.size() == 1 && pts[0].sign == SignClass::zero;
    if (!(only_zero && md.index == k && md.nullity == 0)) ok = false;
    detail += (detail.empty() ? "" : ", ") + std::string("k=") + std::to_string(k) +
              ":(" + std::to_string(md.index) + "," + std::to_string(md.nullity) +
              ")/" + std::to_string(pts.size());
  }
  report(9, ok, detail);
}

void criterion_10() {
  const char* bin = std::getenv("FRACMORSE_CLI");
  if (!bin) {
    report(10, false, "FRACMORSE_CLI not set");
    return;
  }
  const fs::path base =
      fs::temp_directory_path() / ("fracmorse_accept_" + std::to_string(::getpid()));
  fs::create_directories(base);
  const fs::path cfg = base / "c7.cfg";
  {
    std::ofstream out(cfg);
    out << "domain.a = -1\ndomain.b = 1\nmesh.n = 128\noperator.s = 0.5\n"
        << "reaction.kind = example_h2\n"
        << "reaction.mu = 3.64\nreaction.k = 2\n"  // about half of lambda_1
        << "solver.seed = 1\nsolver.n_starts = 64\n";
  }
  bool ok = true;
  std::string sum1, sum2;
  for (int run = 1; run <= 2; ++run) {
    const fs::path out = base / ("run" + std::to_string(run));
    const std::string cmd = std::string(bin) + " solve --config " + cfg.string() +
                            " --out " + out.string() + " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) ok = false;
    std::ifstream in(out / "manifest.json", std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    (run == 1 ? sum1 : sum2) = buf.str();
  }
  ok = ok && !sum1.empty() && sum1 == sum2;
  report(10, ok, ok ? "manifests byte-identical across repeated runs"
                    : "manifests differ or run failed");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  return failures == 0 ? 0 : 1;
}
