#include "fracmorse/reaction.hpp"

#include <cmath>

namespace fracmorse {

Reaction example_reaction(double mu, int k, const Vector& lambdas) {
  if (!(mu > 0.0)) throw PreconditionError("example_reaction: mu must be positive");
  if (k < 1 || k > lambdas.size())
    throw PreconditionError("example_reaction: k out of range of supplied eigenvalues");
  const double lk = lambdas[k - 1];
  const double c = mu - lk;

  Reaction r;
  r.f = [mu, lk, c](double, double t) {
    const double at = std::abs(t);
    if (at <= 1.0) return mu * t;
    const double sgn = t > 0.0 ? 1.0 : -1.0;
    return lk * t + sgn * c * (0.5 * std::log(at) + std::sqrt(at));
  };
  r.fprime = [mu, lk, c](double, double t) {
    const double at = std::abs(t);
    if (at <= 1.0) return mu;  // one-sided from inside at the kink; C^1 anyway
    return lk + c * (0.5 / at + 0.5 / std::sqrt(at));
  };
  r.F = [mu, lk, c](double, double t) {
    const double at = std::abs(t);
    if (at <= 1.0) return 0.5 * mu * t * t;
    // even primitive, glued at |t| = 1
    return 0.5 * mu + 0.5 * lk * (at * at - 1.0) +
           c * (0.5 * (at * std::log(at) - at + 1.0) +
                (2.0 / 3.0) * (std::pow(at, 1.5) - 1.0));
  };
  r.meta.slope_zero_lo = mu;
  r.meta.slope_zero_hi = mu;
  r.meta.slope_inf_lo = lk;
  r.meta.slope_inf_hi = lk;
  r.meta.growth_p = 2.0;
  r.meta.delta0 = 1.0;
  return r;
}

Reaction linear_reaction(double lambda) {
  Reaction r;
  r.f = [lambda](double, double t) { return lambda * t; };
  r.fprime = [lambda](double, double) { return lambda; };
  r.F = [lambda](double, double t) { return 0.5 * lambda * t * t; };
  r.meta.slope_zero_lo = lambda;
  r.meta.slope_zero_hi = lambda;
  r.meta.slope_inf_lo = lambda;
  r.meta.slope_inf_hi = lambda;
  return r;
}

Reaction truncate(const Reaction& base, TruncSign sign) {
  Reaction r;
  const auto bf = base.f;
  const auto bfp = base.fprime;
  const auto bF = base.F;
  if (sign == TruncSign::plus) {
    r.f = [bf](double x, double t) { return t > 0.0 ? bf(x, t) : 0.0; };
    r.fprime = [bfp](double x, double t) { return t > 0.0 ? bfp(x, t) : 0.0; };
    r.F = [bF](double x, double t) { return t > 0.0 ? bF(x, t) : 0.0; };
  } else {
    r.f = [bf](double x, double t) { return t < 0.0 ? bf(x, t) : 0.0; };
    r.fprime = [bfp](double x, double t) { return t < 0.0 ? bfp(x, t) : 0.0; };
    r.F = [bF](double x, double t) { return t < 0.0 ? bF(x, t) : 0.0; };
  }
  r.meta = base.meta;
  return r;
}

HypothesisReport check_hypotheses(const Reaction& r, const EigenSet& spectrum,
                                  HypothesisMode mode, const HypothesisParams& params) {
  const int k = params.k;
  if (spectrum.count() < k + 1)
    throw PreconditionError("check_hypotheses: spectrum must supply at least k+1 modes");
  const double lk = spectrum.lambdas[k - 1];
  const double lk1 = spectrum.lambdas[k];
  const double x0 = 0.0;  // shipped reactions are x-independent

  HypothesisReport rep;

  // (ii) monotone divergence of f t - 2F along |t| = 10^m, both signs
  {
    rep.divergence.pass = true;
    for (double sgn : {1.0, -1.0}) {
      double prev = -std::numeric_limits<double>::infinity();
      for (int m = 2; m <= 6; ++m) {
        const double t = sgn * std::pow(10.0, m);
        const double g = r.f(x0, t) * t - 2.0 * r.F(x0, t);
        if (!(g > prev)) {
          rep.divergence.pass = false;
          rep.divergence.worst_value = g;
          rep.divergence.worst_t = t;
        }
        prev = g;
      }
    }
  }

  // (iii) slope at |t| = 1e6 between the bracketing eigenvalues
  {
    const double tol = 1e-2 * std::max(1.0, lk);
    rep.slope_infinity.pass = true;
    for (double sgn : {1.0, -1.0}) {
      const double t = sgn * 1e6;
      const double slope = r.f(x0, t) / t;
      if (slope < lk - tol || slope > lk1 + tol) {
        rep.slope_infinity.pass = false;
        rep.slope_infinity.worst_value = slope;
        rep.slope_infinity.worst_t = t;
      }
    }
  }

  // (iv) behavior near zero
  {
    const double tol = 1e-9;
    rep.near_zero.pass = true;
    const int ns = std::max(3, params.t_samples);
    for (int i = 0; i < ns; ++i) {
      const double t = params.delta0 * (-1.0 + 2.0 * i / (ns - 1.0));
      if (t == 0.0) continue;
      if (mode == HypothesisMode::H1) {
        const double slope = r.f(x0, t) / t;
        if (slope < r.meta.slope_zero_lo - tol || slope > r.meta.slope_zero_hi + tol) {
          rep.near_zero.pass = false;
          rep.near_zero.worst_value = slope;
          rep.near_zero.worst_t = t;
        }
      } else {
        const double quot = 2.0 * r.F(x0, t) / (t * t);
        if (quot > r.meta.slope_zero_hi + tol) {
          rep.near_zero.pass = false;
          rep.near_zero.worst_value = quot;
          rep.near_zero.worst_t = t;
        }
      }
    }
    if (mode == HypothesisMode::H1) {
      // band strictly inside (lambda_h, lambda_{h+1})
      const double lh = params.h >= 1 ? spectrum.lambdas[params.h - 1] : 0.0;
      if (params.h >= spectrum.count())
        throw PreconditionError("check_hypotheses: h exceeds available modes");
      const double lh1 = spectrum.lambdas[params.h];
      rep.strict_margin =
          r.meta.slope_zero_lo > lh && r.meta.slope_zero_hi < lh1;
      rep.near_zero.pass = rep.near_zero.pass && rep.strict_margin;
    } else {
      // eta0 strictly below the first eigenvalue
      rep.strict_margin = r.meta.slope_zero_hi < spectrum.lambdas[0];
      rep.near_zero.pass = rep.near_zero.pass && rep.strict_margin;
    }
  }

  return rep;
}

}  // namespace fracmorse
