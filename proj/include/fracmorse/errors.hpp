#pragma once

#include <stdexcept>
#include <string>

namespace fracmorse {

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Singular quadrature failed to meet the entry tolerance; carries the worst entry.
struct AssemblyError : std::runtime_error {
  int row = -1, col = -1;
  AssemblyError(const std::string& msg, int r, int c)
      : std::runtime_error(msg), row(r), col(c) {}
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Eigensolver or nonlinear solver failed; carries iteration diagnostics.
struct SolverError : std::runtime_error {
  int iterations = 0;
  double last_residual = 0.0;
  SolverError(const std::string& msg, int iters = 0, double res = 0.0)
      : std::runtime_error(msg), iterations(iters), last_residual(res) {}
};

struct NonConvergenceError : SolverError {
  using SolverError::SolverError;
};

// Mountain-pass path maximum drifted into an endpoint.
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fracmorse
