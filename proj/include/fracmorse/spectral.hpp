#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fracmorse/assembly.hpp"

namespace fracmorse {

/// First k eigenpairs of A e = lambda M_eta e, ascending. Columns are
/// eta-normalized (e' M_eta e = 1) with the largest-magnitude entry positive.
struct EigenSet {
  Vector lambdas;
  Matrix vectors;

  int count() const { return static_cast<int>(lambdas.size()); }
};

struct MonotonicityRecord {
  int k;
  double lambda_eta1;
  double lambda_eta2;
};

struct SpectrumReport {
  double gap_1_2 = 0.0;
  std::vector<std::string> sign_class;  // "one-signed" or "nodal" per mode
  std::vector<MonotonicityRecord> records;
  int strict_count = 0;  // modes where lambda_k(eta1) - lambda_k(eta2) exceeds the margin
};

struct CourantFischerReport {
  double bound = 0.0;        // 1/lambda_k
  double max_sampled = 0.0;  // largest inf over the sampled subspaces
  double attained = 0.0;     // value on span{e_1..e_k}
  int trials = 0;
  int violations = 0;  // samples exceeding bound + tolerance
};

inline constexpr double kEigenResidualTol = 1e-9;
inline constexpr double kCrossCheckRelTol = 1e-6;

Matrix symmetrize(const Matrix& X);

EigenSet solve_eigen(const OperatorPair& ops, int k_max);

double rayleigh_quotient(const OperatorPair& ops, const Vector& u);

/// Constrained Rayleigh minimization over the M_eta-orthogonal complement of
/// the first k-1 modes, by preconditioned projected gradient descent with
/// random restarts. Independent cross-check of solve_eigen; the deflating
/// modes are themselves found by the same minimization.
std::pair<double, Vector> deflated_minimize(const OperatorPair& ops, int k,
                                            int restarts, unsigned seed);

CourantFischerReport courant_fischer_check(const OperatorPair& ops, int k,
                                           int trials, unsigned seed);

SpectrumReport monotonicity_check(const Mesh1D& mesh, const WeightField& eta1,
                                  const WeightField& eta2, int k_max);

/// "one-signed" if all entries share a sign, else "nodal".
std::string sign_class(const Vector& e);

}  // namespace fracmorse
