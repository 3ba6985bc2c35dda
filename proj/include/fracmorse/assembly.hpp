#pragma once

#include "fracmorse/mesh.hpp"

namespace fracmorse {

// Per-entry absolute assembly tolerance and the oracle comparison tolerance.
inline constexpr double kAssemblyTol = 1e-10;
inline constexpr double kOracleRelTol = 1e-8;
inline constexpr int kOracleMaxN = 64;

/// Discrete Gagliardo form of the interior hat functions:
///   A[i][j] = iint_{R x R} (phi_i(x)-phi_i(y))(phi_j(x)-phi_j(y)) / |x-y|^{1+2s} dx dy,
/// split into the Omega x Omega part plus the complement correction
/// 2 * int_Omega phi_i phi_j k_c(x) dx with the closed-form 1D tail kernel
///   k_c(x) = ((x-a)^{-2s} + (b-x)^{-2s}) / (2s).
Matrix assemble_stiffness(const Mesh1D& mesh);

/// Weighted mass M_eta[i][j] = int_Omega eta(x) phi_i phi_j dx, eta interpolated
/// piecewise-linearly between nodal values (constant on the boundary cells).
/// Exact quadrature of the piecewise-cubic integrand; tridiagonal.
Matrix assemble_mass(const Mesh1D& mesh, const WeightField& eta);
Matrix assemble_mass(const Mesh1D& mesh);  // eta == 1

/// Same entries as assemble_stiffness via a structurally different route:
/// brute-force composite quadrature on dyadically graded subcells toward the
/// kernel singularity. Expensive; n <= 64. For cross-validation only.
Matrix oracle_stiffness(const Mesh1D& mesh);

OperatorPair assemble_operators(const Mesh1D& mesh, const WeightField& eta);
OperatorPair assemble_operators(const Mesh1D& mesh);

}  // namespace fracmorse
