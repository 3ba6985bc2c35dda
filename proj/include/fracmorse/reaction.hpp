#pragma once

#include <functional>

#include "fracmorse/spectral.hpp"

namespace fracmorse {

/// Declared slope data used by the hypothesis checker: band (lo, hi) of
/// f(x,t)/t near zero, slope bounds at infinity, growth exponent, and the
/// radius delta0 on which the near-zero clause is sampled.
struct ReactionMeta {
  double slope_zero_lo = 0.0;
  double slope_zero_hi = 0.0;
  double slope_inf_lo = 0.0;
  double slope_inf_hi = 0.0;
  double growth_p = 2.0;
  double delta0 = 1.0;
};

/// Pointwise reaction with closed-form t-derivative and primitive
/// (F(x,0) = 0). All maps take (x, t).
struct Reaction {
  std::function<double(double, double)> f;
  std::function<double(double, double)> fprime;
  std::function<double(double, double)> F;
  ReactionMeta meta;
};

enum class TruncSign { plus, minus };

/// Piecewise reaction with slope mu on [-1,1] and asymptotic slope lambda_k
/// outside, glued C^1 at |t| = 1 by the (1/2) ln|t| + sqrt|t| correction.
/// lambdas supplies the discrete eigenvalues; lambda_k = lambdas[k-1].
Reaction example_reaction(double mu, int k, const Vector& lambdas);

/// f(x,t) = lambda t; for linear-regime reductions and negative tests.
Reaction linear_reaction(double lambda);

/// Sign truncation: f_pm(x,t) = f(x, +-t^pm); F from the base primitive by
/// the sign rule, not re-integrated.
Reaction truncate(const Reaction& base, TruncSign sign);

enum class HypothesisMode { H1, H2 };

struct HypothesisParams {
  int k = 1;           // resonance index at infinity
  int h = 0;           // band position for H1 (band inside (lambda_h, lambda_{h+1}))
  double delta0 = 1.0; // near-zero sampling radius
  int t_samples = 41;  // near-zero grid size
};

struct ClauseResult {
  bool pass = false;
  double worst_value = 0.0;
  double worst_t = 0.0;
};

struct HypothesisReport {
  ClauseResult divergence;      // (ii): f t - 2F diverges monotonically
  ClauseResult slope_infinity;  // (iii): f/t at |t| = 1e6 inside [lambda_k, lambda_{k+1}]
  ClauseResult near_zero;       // (iv): slope band (H1) or 2F/t^2 <= eta0 < lambda_1 (H2)
  bool strict_margin = false;   // band strictly inside the bracketing eigenvalues

  bool all_pass() const {
    return divergence.pass && slope_infinity.pass && near_zero.pass;
  }
};

HypothesisReport check_hypotheses(const Reaction& r, const EigenSet& spectrum,
                                  HypothesisMode mode, const HypothesisParams& params);

}  // namespace fracmorse
