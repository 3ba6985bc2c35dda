#pragma once

#include <vector>

#include "fracmorse/reaction.hpp"

namespace fracmorse {

/// Discrete energy phi(u) = u'Au/2 - sum_cells Q(F(x, u_h)) with a fixed
/// 4-point Gauss rule per cell. ops.M is the plain mass (eta == 1).
struct EnergyModel {
  OperatorPair ops;
  Reaction r;
  Mesh1D mesh;
};

enum class SignClass { zero, positive, negative, mixed };
enum class Provenance { minimizer, mountain_pass, newton };

struct SolverConfig {
  double tol = 1e-8;         // dual-norm residual target sqrt(g' A^{-1} g)
  int max_iter = 400;        // inner iteration budget
  double kernel_tol = 1e-6;  // nullity threshold relative to the spectral scale
  int span_modes = 3;        // multistart spans e_1..e_span
  int path_nodes = 41;       // mountain-pass discretization
  int max_outer = 3000;      // mountain-pass outer budget
  double switch_tol = 1e-3;  // relative residual triggering the Newton polish
};

struct MorseData {
  int index = 0;
  int nullity = 0;
  bool warning = false;  // eigenvalue cluster straddles the kernel threshold
};

struct CriticalPoint {
  Vector u;
  double energy = 0.0;
  double residual_euclid = 0.0;
  double residual_dual = 0.0;
  int morse_index = 0;
  int nullity = 0;
  bool degenerate_warning = false;
  SignClass sign = SignClass::zero;
  Provenance provenance = Provenance::newton;
};

double energy(const EnergyModel& model, const Vector& u);
Vector gradient(const EnergyModel& model, const Vector& u);
Matrix hessian(const EnergyModel& model, const Vector& u);

/// Inertia of the Hessian at u: eigenvalues below -tau, within [-tau, tau]
/// (tau = kernel_tol * |A|_inf), via tridiagonal Sturm counts with a dense
/// fallback when counts are threshold-sensitive.
MorseData morse_data(const EnergyModel& model, const Vector& u,
                     double kernel_tol = 1e-6);

SignClass classify_sign(const Vector& u, double tol = 1e-10);

/// Descent (Newton-accelerated where the Hessian is positive definite) to a
/// critical point near u0.
CriticalPoint minimize(const EnergyModel& model, const Vector& u0,
                       const SolverConfig& cfg);

/// Discrete path-deformation minimax between 0 and a negative-energy
/// endpoint. Requires the strict-local-minimum ring at 0.
CriticalPoint mountain_pass(const EnergyModel& model, const Vector& endpoint,
                            const SolverConfig& cfg);

/// Damped Newton on grad phi = 0 from random starts spanned by the low modes,
/// deduplicated by relative A-distance 1e-4. Non-converged starts are dropped.
std::vector<CriticalPoint> newton_multistart(const EnergyModel& model, int n_starts,
                                             unsigned seed, const SolverConfig& cfg);

}  // namespace fracmorse
