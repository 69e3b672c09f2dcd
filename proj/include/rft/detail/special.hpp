#pragma once

// Standard-normal distribution functions and a double-exponential quadrature
// rule for half-infinite integrals.

#include <cmath>
#include <limits>
#include <numbers>

#include "rft/error.hpp"

namespace rft {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - Phi(x), accurate far into the upper tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation (relative error ~1e-9), refined below.
inline double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Phi^{-1}(p) for p in (0, 1). Two Halley steps against erfc bring the
/// rational seed to full double precision.
inline double normal_quantile(double p) {
  detail::require_param(p > 0.0 && p < 1.0, "normal quantile needs p in (0,1)");
  double x = detail::acklam_quantile(p);
  for (int it = 0; it < 2; ++it) {
    // Work in whichever tail keeps the residual relative, not absolute.
    const double e = x <= 0.0 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    if (e == 0.0) break;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

/// h with 1 - Phi(h) = q; stays exact for tiny q where 1 - q rounds to 1.
inline double normal_upper_quantile(double q) {
  detail::require_param(q > 0.0 && q < 1.0, "upper-tail probability must be in (0,1)");
  return -normal_quantile(q);
}

/// Result of an adaptive quadrature: value and the last level-to-level change.
struct Quadrature {
  double value = 0.0;
  double error = 0.0;
};

/// Integral of f over [a, inf) with the exp-sinh substitution
/// x = a + exp(pi/2 sinh t). Handles integrable endpoint singularities at `a`
/// and algebraic decay at infinity. Step halving stops once successive
/// trapezoid sums agree to rel_tol.
template <class F>
Quadrature integrate_exp_sinh(F&& f, double a, double rel_tol = 1e-12) {
  constexpr double t_max = 5.0;
  constexpr double half_pi = std::numbers::pi / 2.0;
  auto term = [&](double t) {
    const double e = std::exp(half_pi * std::sinh(t));
    const double w = half_pi * std::cosh(t) * e;
    const double fx = f(a + e);
    return std::isfinite(fx) ? fx * w : 0.0;
  };

  double step = 1.0;
  double sum = term(0.0);
  for (double t = step; t <= t_max; t += step) sum += term(t) + term(-t);
  double estimate = sum * step;
  Quadrature result{estimate, std::numeric_limits<double>::infinity()};

  for (int level = 1; level <= 12; ++level) {
    step *= 0.5;
    // New nodes are the odd multiples of the halved step.
    for (double t = step; t <= t_max; t += 2.0 * step) sum += term(t) + term(-t);
    const double next = sum * step;
    result = {next, std::abs(next - estimate)};
    if (level >= 3 && result.error <= rel_tol * std::abs(next)) break;
    estimate = next;
  }
  return result;
}

}  // namespace rft
