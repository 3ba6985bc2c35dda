#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracmorse/runconfig.hpp"
#include "fracmorse/variational.hpp"

using namespace fracmorse;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitHypotheses = 4;
constexpr int kExitVerify = 5;

struct CommonArgs {
  std::string config_path;
  std::optional<long> seed;
  bool force = false;
  std::string out;
};

Mesh1D mesh_from(const RunConfig& cfg) {
  return Mesh1D(cfg.require_double("domain.a"), cfg.require_double("domain.b"),
                static_cast<int>(cfg.require_int("mesh.n")),
                cfg.require_double("operator.s"));
}

WeightField weight_from(const RunConfig& cfg, int n) {
  const std::string kind = cfg.get_string("weight.kind", "constant");
  if (kind == "constant") {
    const double c = cfg.get_double("weight.value", 1.0);
    if (!(c > 0.0)) throw PreconditionError("config key weight.value: must be positive");
    return WeightField::constant(n, c);
  }
  if (kind == "table") {
    std::vector<double> vals;
    std::istringstream in(cfg.require_string("weight.values"));
    std::string tok;
    while (std::getline(in, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != n)
      throw PreconditionError("config key weight.values: expected " + std::to_string(n) +
                              " comma-separated entries");
    double lo = vals[0];
    for (double v : vals) lo = std::min(lo, v);
    if (!(lo > 0.0)) throw PreconditionError("config key weight.values: must be positive");
    return WeightField(vals, lo);
  }
  throw PreconditionError("config key weight.kind: unknown kind " + kind);
}

Reaction custom_table_reaction(const RunConfig& cfg) {
  // odd extension of samples "t1:f1,t2:f2,..." with t strictly increasing,
  // piecewise-linear f, exact piecewise-quadratic primitive
  std::vector<double> ts{0.0}, fs{0.0};
  std::istringstream in(cfg.require_string("reaction.table"));
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const size_t colon = tok.find(':');
    if (colon == std::string::npos)
      throw PreconditionError("config key reaction.table: expected t:f pairs");
    ts.push_back(std::stod(tok.substr(0, colon)));
    fs.push_back(std::stod(tok.substr(colon + 1)));
    if (ts.back() <= ts[ts.size() - 2])
      throw PreconditionError("config key reaction.table: t values must increase");
  }
  if (ts.size() < 3)
    throw PreconditionError("config key reaction.table: need at least two samples");
  std::vector<double> Fs(ts.size(), 0.0);
  for (size_t i = 1; i < ts.size(); ++i)
    Fs[i] = Fs[i - 1] + 0.5 * (fs[i - 1] + fs[i]) * (ts[i] - ts[i - 1]);
  auto eval = [ts, fs, Fs](double t, bool primitive) {
    const double at = std::abs(t), sgn = t < 0.0 ? -1.0 : 1.0;
    size_t i = 1;
    while (i + 1 < ts.size() && at > ts[i]) ++i;
    const double t0 = ts[i - 1], t1 = ts[i];
    const double slope = (fs[i] - fs[i - 1]) / (t1 - t0);
    const double d = at - t0;  // extrapolates linearly beyond the last sample
    if (primitive) return Fs[i - 1] + fs[i - 1] * d + 0.5 * slope * d * d;
    return sgn * (fs[i - 1] + slope * d);
  };
  Reaction r;
  r.f = [eval](double, double t) { return eval(t, false); };
  r.F = [eval](double, double t) { return eval(t, true); };
  r.fprime = [ts, fs](double, double t) {
    const double at = std::abs(t);
    size_t i = 1;
    while (i + 1 < ts.size() && at > ts[i]) ++i;
    return (fs[i] - fs[i - 1]) / (ts[i] - ts[i - 1]);
  };
  r.meta.slope_zero_lo = r.meta.slope_zero_hi = fs[1] / ts[1];
  const size_t m = ts.size() - 1;
  r.meta.slope_inf_lo = r.meta.slope_inf_hi = (fs[m] - fs[m - 1]) / (ts[m] - ts[m - 1]);
  r.meta.delta0 = ts[1];
  return r;
}

const char* sign_name(SignClass s) {
  switch (s) {
    case SignClass::zero: return "zero";
    case SignClass::positive: return "positive";
    case SignClass::negative: return "negative";
    default: return "mixed";
  }
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::minimizer: return "minimizer";
    case Provenance::mountain_pass: return "mountain_pass";
    default: return "newton";
  }
}

std::string nodal_csv(const Mesh1D& mesh, const Vector& u, const char* value_col) {
  std::string out = std::string("node_index,x,") + value_col + "\n";
  for (int i = 1; i <= mesh.n; ++i)
    out += std::to_string(i) + "," + format_double(mesh.node(i)) + "," +
           format_double(u[i - 1]) + "\n";
  return out;
}

ordered_json clause_json(const ClauseResult& c) {
  return {{"pass", c.pass}, {"worst_value", c.worst_value}, {"worst_t", c.worst_t}};
}

int cmd_assemble(const RunConfig& cfg, const CommonArgs& args) {
  Mesh1D mesh = mesh_from(cfg);
  OperatorPair ops = assemble_operators(mesh, weight_from(cfg, mesh.n));
  OutputWriter out(resolve_out_dir(cfg, args.out));
  std::string stiff = "row,col,value\n";
  for (int i = 0; i < mesh.n; ++i)
    for (int j = 0; j < mesh.n; ++j)
      stiff += std::to_string(i) + "," + std::to_string(j) + "," +
               format_double(ops.A(i, j)) + "\n";
  out.write("stiffness.csv", stiff);
  std::string mass = "row,col,value\n";
  for (int i = 0; i < mesh.n; ++i)
    for (int j = 0; j < mesh.n; ++j)
      mass += std::to_string(i) + "," + std::to_string(j) + "," +
              format_double(ops.M_eta(i, j)) + "\n";
  out.write("mass.csv", mass);
  ordered_json header{{"a", mesh.a},
                      {"b", mesh.b},
                      {"n", mesh.n},
                      {"s", mesh.s},
                      {"tolerance", kAssemblyTol},
                      {"checksum", fnv1a_hex(stiff)}};
  out.finalize("assemble", cfg, header.dump());
  return kExitOk;
}

int cmd_spectrum(const RunConfig& cfg, const CommonArgs& args) {
  Mesh1D mesh = mesh_from(cfg);
  const int k_max = static_cast<int>(cfg.get_int("spectrum.k_max", 6));
  if (k_max < 1 || k_max > mesh.n)
    throw PreconditionError("config key spectrum.k_max: must lie in [1, mesh.n]");
  const unsigned seed =
      static_cast<unsigned>(args.seed.value_or(cfg.get_int("solver.seed", 0)));

  WeightField eta = weight_from(cfg, mesh.n);
  OperatorPair ops = assemble_operators(mesh, eta);
  EigenSet sp = solve_eigen(ops, k_max);

  OutputWriter out(resolve_out_dir(cfg, args.out));
  std::string table = "k,lambda,residual\n";
  for (int k = 0; k < k_max; ++k) {
    const Vector res = ops.A * sp.vectors.col(k) - sp.lambdas[k] * ops.M_eta * sp.vectors.col(k);
    table += std::to_string(k + 1) + "," + format_double(sp.lambdas[k]) + "," +
             format_double(res.norm()) + "\n";
    char name[32];
    std::snprintf(name, sizeof(name), "mode_%04d.csv", k + 1);
    out.write(name, nodal_csv(mesh, sp.vectors.col(k), "value"));
  }
  out.write("spectrum.csv", table);

  WeightField eta2(eta.values, eta.eta0);
  for (double& v : eta2.values) v *= 2.0;
  eta2.eta0 *= 2.0;
  SpectrumReport mono = monotonicity_check(mesh, eta, eta2, k_max);
  CourantFischerReport cf = courant_fischer_check(ops, std::min(3, k_max), 100, seed);

  ordered_json rep;
  rep["gap_1_2"] = mono.gap_1_2;
  rep["sign_class"] = mono.sign_class;
  ordered_json recs = ordered_json::array();
  for (const MonotonicityRecord& r : mono.records)
    recs.push_back({{"k", r.k}, {"lambda_eta1", r.lambda_eta1}, {"lambda_eta2", r.lambda_eta2}});
  rep["monotonicity"] = {{"records", recs}, {"strict_count", mono.strict_count}};
  rep["courant_fischer"] = {{"k", std::min(3, k_max)},
                            {"bound", cf.bound},
                            {"max_sampled", cf.max_sampled},
                            {"attained", cf.attained},
                            {"trials", cf.trials},
                            {"violations", cf.violations}};
  out.write("report.json", rep.dump(2) + "\n");
  out.finalize("spectrum", cfg, ordered_json{{"n", mesh.n}, {"s", mesh.s}}.dump());
  return kExitOk;
}

struct SolveSetup {
  Reaction reaction;
  HypothesisMode mode = HypothesisMode::H2;
  HypothesisParams params;
};

SolveSetup reaction_from(const RunConfig& cfg, const EigenSet& sp) {
  SolveSetup su;
  const std::string kind = cfg.require_string("reaction.kind");
  if (kind == "example_h1" || kind == "example_h2") {
    const double mu = cfg.require_double("reaction.mu");
    const int k = static_cast<int>(cfg.require_int("reaction.k"));
    // slope at infinity sits at the upper edge lambda_{k+1} of the declared
    // interval [lambda_k, lambda_{k+1}]
    su.reaction = example_reaction(mu, k + 1, sp.lambdas);
    su.params.k = k;
    if (kind == "example_h1") {
      su.mode = HypothesisMode::H1;
      su.params.h = static_cast<int>(cfg.require_int("reaction.h"));
    }
  } else if (kind == "custom_table") {
    su.reaction = custom_table_reaction(cfg);
    su.mode = cfg.get_string("reaction.mode", "h2") == "h1" ? HypothesisMode::H1
                                                            : HypothesisMode::H2;
    su.params.k = static_cast<int>(cfg.get_int("reaction.k", 1));
    su.params.h = static_cast<int>(cfg.get_int("reaction.h", 0));
    su.params.delta0 = su.reaction.meta.delta0;
  } else {
    throw PreconditionError("config key reaction.kind: unknown kind " + kind);
  }
  return su;
}

int cmd_solve(const RunConfig& cfg, const CommonArgs& args) {
  Mesh1D mesh = mesh_from(cfg);
  const unsigned seed =
      static_cast<unsigned>(args.seed.value_or(cfg.get_int("solver.seed", 0)));
  SolverConfig scfg;
  scfg.tol = cfg.get_double("solver.tol", scfg.tol);
  scfg.max_iter = static_cast<int>(cfg.get_int("solver.max_iter", scfg.max_iter));
  const int n_starts = static_cast<int>(cfg.get_int("solver.n_starts", 64));
  const std::string pipeline = cfg.get_string("solve.pipeline", "all");
  if (pipeline != "all" && pipeline != "newton_multistart" &&
      pipeline != "mountain_pass" && pipeline != "minimize")
    throw PreconditionError("config key solve.pipeline: unknown pipeline " + pipeline);

  OperatorPair ops = assemble_operators(mesh);
  EigenSet sp = solve_eigen(ops, std::min(mesh.n, 8));
  SolveSetup su = reaction_from(cfg, sp);

  HypothesisReport hyp = check_hypotheses(su.reaction, sp, su.mode, su.params);
  const bool hyp_ok = hyp.all_pass();
  if (!hyp_ok && !args.force) {
    std::cerr << "hypothesis check failed";
    if (!hyp.divergence.pass) std::cerr << " [divergence]";
    if (!hyp.slope_infinity.pass) std::cerr << " [slope at infinity]";
    if (!hyp.near_zero.pass) std::cerr << " [near zero]";
    std::cerr << "; rerun with --force to proceed\n";
    return kExitHypotheses;
  }

  EnergyModel model{ops, su.reaction, mesh};
  std::vector<CriticalPoint> points;
  auto try_add = [&](const CriticalPoint& cp) {
    for (const CriticalPoint& q : points) {
      const Vector d = cp.u - q.u;
      const double dist = std::sqrt(d.dot(ops.A * d));
      const double scale = std::max(1.0, std::sqrt(cp.u.dot(ops.A * cp.u)));
      if (dist <= 1e-4 * scale) return;
    }
    points.push_back(cp);
  };

  if (pipeline == "all" || pipeline == "newton_multistart")
    for (const CriticalPoint& cp : newton_multistart(model, n_starts, seed, scfg))
      try_add(cp);
  if (pipeline == "all" || pipeline == "mountain_pass") {
    const Vector e1 = sp.vectors.col(0);
    for (TruncSign ts : {TruncSign::plus, TruncSign::minus}) {
      EnergyModel trunc{ops, truncate(su.reaction, ts), mesh};
      const double dir = ts == TruncSign::plus ? 1.0 : -1.0;
      double tau = 1.0;
      while (tau < 1e6 && energy(trunc, dir * tau * e1) >= 0.0) tau *= 1.5;
      try {
        try_add(mountain_pass(trunc, dir * tau * e1, scfg));
      } catch (const std::runtime_error& e) {
        // in the combined pipeline the multistart already covers these points
        if (pipeline == "mountain_pass") throw;
        std::cerr << "mountain pass (" << (dir > 0 ? "+" : "-") << ") skipped: "
                  << e.what() << "\n";
      }
    }
  }
  if (pipeline == "all" || pipeline == "minimize")
    try_add(minimize(model, Vector::Zero(mesh.n), scfg));

  std::sort(points.begin(), points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              if (a.energy != b.energy) return a.energy < b.energy;
              return a.u[0] < b.u[0];
            });

  OutputWriter out(resolve_out_dir(cfg, args.out));
  ordered_json summary;
  int n_nontrivial = 0;
  ordered_json signs = ordered_json::array(), morses = ordered_json::array();
  ordered_json sols = ordered_json::array();
  for (size_t i = 0; i < points.size(); ++i) {
    const CriticalPoint& cp = points[i];
    char name[32];
    std::snprintf(name, sizeof(name), "solution_%03zu.csv", i + 1);
    out.write(name, nodal_csv(mesh, cp.u, "u_value"));
    ordered_json j{{"file", name},
                   {"energy", cp.energy},
                   {"residual_euclid", cp.residual_euclid},
                   {"residual_dual", cp.residual_dual},
                   {"morse_index", cp.morse_index},
                   {"nullity", cp.nullity},
                   {"degenerate_warning", cp.degenerate_warning},
                   {"sign_class", sign_name(cp.sign)},
                   {"provenance", provenance_name(cp.provenance)}};
    sols.push_back(j);
    signs.push_back(sign_name(cp.sign));
    morses.push_back(cp.morse_index);
    if (cp.sign != SignClass::zero) ++n_nontrivial;
  }
  summary["n_solutions"] = points.size();
  summary["n_nontrivial"] = n_nontrivial;
  summary["sign_classes"] = signs;
  summary["morse_indices"] = morses;
  summary["hypotheses_ok"] = hyp_ok;
  summary["hypotheses"] = {{"divergence", clause_json(hyp.divergence)},
                           {"slope_infinity", clause_json(hyp.slope_infinity)},
                           {"near_zero", clause_json(hyp.near_zero)},
                           {"strict_margin", hyp.strict_margin}};
  summary["seed"] = seed;
  summary["solver"] = {{"tol", scfg.tol},
                       {"max_iter", scfg.max_iter},
                       {"n_starts", n_starts},
                       {"pipeline", pipeline}};
  summary["solutions"] = sols;
  out.write("summary.json", summary.dump(2) + "\n");
  out.finalize("solve", cfg,
               ordered_json{{"n", mesh.n}, {"s", mesh.s}, {"seed", seed}}.dump());
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const CommonArgs& args) {
  Mesh1D mesh = mesh_from(cfg);
  const int k_max = static_cast<int>(cfg.get_int("verify.k_max", 4));
  if (k_max < 1 || k_max > mesh.n)
    throw PreconditionError("config key verify.k_max: must lie in [1, mesh.n]");
  const unsigned seed =
      static_cast<unsigned>(args.seed.value_or(cfg.get_int("solver.seed", 0)));

  OperatorPair ops = assemble_operators(mesh, weight_from(cfg, mesh.n));
  if (cfg.get_int("verify.inject_sign_flip", 0) != 0 && mesh.n >= 2) {
    // test hook: corrupt one symmetric entry pair to exercise the failure path
    ops.A(0, 1) = -ops.A(0, 1);
    ops.A(1, 0) = -ops.A(1, 0);
  }
  const double ascale = ops.A.cwiseAbs().maxCoeff();

  std::vector<std::pair<std::string, bool>> checks;

  {  // structure: symmetry, Toeplitz banding, positive definiteness
    bool ok = (ops.A - ops.A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ascale;
    for (int d = 0; d < mesh.n && ok; ++d)
      for (int i = 0; i + d < mesh.n; ++i)
        if (std::abs(ops.A(i, i + d) - ops.A(0, d)) > 1e-10 * ascale) {
          ok = false;
          break;
        }
    ok = ok && Eigen::LLT<Matrix>(symmetrize(ops.A)).info() == Eigen::Success;
    checks.emplace_back("stiffness_structure", ok);
  }
  {  // oracle equivalence on a coarsened mesh of the same domain and order
    Mesh1D small(mesh.a, mesh.b, std::min(mesh.n, 16), mesh.s);
    Matrix As = assemble_stiffness(small);
    if (cfg.get_int("verify.inject_sign_flip", 0) != 0 && small.n >= 2) {
      As(0, 1) = -As(0, 1);
      As(1, 0) = -As(1, 0);
    }
    Matrix O = oracle_stiffness(small);
    checks.emplace_back("oracle_equivalence",
                        (As - O).cwiseAbs().maxCoeff() <=
                            kOracleRelTol * O.cwiseAbs().maxCoeff());
  }
  EigenSet sp = solve_eigen(ops, k_max);
  {  // weight scaling law
    OperatorPair ops2 = ops;
    ops2.M_eta *= 2.0;
    EigenSet sp2 = solve_eigen(ops2, k_max);
    bool ok = true;
    for (int k = 0; k < k_max; ++k)
      ok = ok && std::abs(sp2.lambdas[k] - 0.5 * sp.lambdas[k]) <=
                     1e-10 * std::max(1.0, sp.lambdas[k]);
    checks.emplace_back("scaling", ok);
  }
  {
    Matrix G = sp.vectors.transpose() * ops.M_eta * sp.vectors;
    checks.emplace_back("orthogonality",
                        (G - Matrix::Identity(k_max, k_max)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  {
    bool ok = sign_class(sp.vectors.col(0)) == "one-signed";
    if (k_max >= 2) ok = ok && sign_class(sp.vectors.col(1)) == "nodal";
    checks.emplace_back("sign_structure", ok);
  }
  {
    CourantFischerReport cf = courant_fischer_check(ops, std::min(2, k_max), 100, seed);
    checks.emplace_back("courant_fischer", cf.violations == 0);
  }
  {
    WeightField eta1 = WeightField::constant(mesh.n, 1.0);
    WeightField eta2 = eta1;
    for (int i = 1; i <= mesh.n; ++i) {
      const double x = (mesh.node(i) - mesh.a) / (mesh.b - mesh.a);
      eta2.values[i - 1] += 1.5 * std::exp(-40.0 * (x - 0.3) * (x - 0.3));
    }
    SpectrumReport mono = monotonicity_check(mesh, eta1, eta2, k_max);
    checks.emplace_back("monotonicity", mono.strict_count == k_max);
  }
  {  // finite-difference consistency on the quadratic-growth example
    EnergyModel model{ops, example_reaction(0.5 * sp.lambdas[0],
                                            std::min(2, sp.count()), sp.lambdas),
                      mesh};
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    bool gok = true, hok = true;
    const double eps = 1e-5;
    for (int rep = 0; rep < 5; ++rep) {
      Vector u(mesh.n), v(mesh.n);
      for (int i = 0; i < mesh.n; ++i) {
        u[i] = dist(rng);
        v[i] = dist(rng);
      }
      const double fd = (energy(model, u + eps * v) - energy(model, u - eps * v)) / (2 * eps);
      const double gv = gradient(model, u).dot(v);
      gok = gok && std::abs(fd - gv) <= 1e-6 * std::max(1.0, std::abs(gv));
      const Vector hfd =
          (gradient(model, u + eps * v) - gradient(model, u - eps * v)) / (2 * eps);
      const Vector hv = hessian(model, u) * v;
      hok = hok && (hfd - hv).norm() <= 1e-5 * std::max(1.0, hv.norm());
    }
    checks.emplace_back("gradient_fd", gok);
    checks.emplace_back("hessian_fd", hok);
  }

  OutputWriter out(resolve_out_dir(cfg, args.out));
  ordered_json rep;
  ordered_json matrix = ordered_json::array();
  bool all = true;
  for (const auto& [name, pass] : checks) {
    matrix.push_back({{"name", name}, {"pass", pass}});
    all = all && pass;
  }
  rep["checks"] = matrix;
  rep["all_pass"] = all;
  out.write("verify.json", rep.dump(2) + "\n");
  out.finalize("verify", cfg, ordered_json{{"n", mesh.n}, {"s", mesh.s}}.dump());
  if (!all) {
    std::cerr << "failing checks:";
    for (const auto& [name, pass] : checks)
      if (!pass) std::cerr << " " << name;
    std::cerr << "\n";
    return kExitVerify;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1D fractional-Laplacian FEM: spectra and critical points"};
  app.require_subcommand(1);

  CommonArgs args;
  long seed_flag = 0;
  bool seed_given = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "key = value configuration file")
        ->required();
    sub->add_option("--seed", seed_flag, "override solver.seed")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_flag("--force", args.force, "run even if the hypothesis check fails");
    sub->add_option("--out", args.out, "output directory (overrides FRACMORSE_OUT)");
  };
  CLI::App* c_spectrum = app.add_subcommand("spectrum", "eigenpairs and spectral reports");
  CLI::App* c_solve = app.add_subcommand("solve", "critical points of the energy");
  CLI::App* c_verify = app.add_subcommand("verify", "run the invariant suite");
  CLI::App* c_assemble = app.add_subcommand("assemble", "export assembled matrices");
  for (CLI::App* sub : {c_spectrum, c_solve, c_verify, c_assemble}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
  if (seed_given) args.seed = seed_flag;

  try {
    RunConfig cfg = RunConfig::from_file(args.config_path);
    if (c_assemble->parsed()) return cmd_assemble(cfg, args);
    if (c_spectrum->parsed()) return cmd_spectrum(cfg, args);
    if (c_solve->parsed()) return cmd_solve(cfg, args);
    return cmd_verify(cfg, args);
  } catch (const PreconditionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
