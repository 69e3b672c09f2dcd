#pragma once

// Familywise-error inference on smooth fields: Euler characteristic
// densities, the expected-EC approximation to P(sup Y > h), its inversion to
// a threshold, Bonferroni thresholds, the Rice upcrossing rate and the
// Poisson clumping approximation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "rft/detail/special.hpp"
#include "rft/error.hpp"
#include "rft/grid_field.hpp"
#include "rft/topology.hpp"

namespace rft {

enum class ThresholdMethod { ExpectedEC, Bonferroni, PoissonClump };

inline const char* to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::ExpectedEC: return "ec";
    case ThresholdMethod::Bonferroni: return "bonferroni";
    case ThresholdMethod::PoissonClump: return "clump";
  }
  return "unknown";
}

struct ThresholdResult {
  double h = 0.0;
  double alpha_achieved = 0.0;
  ThresholdMethod method = ThresholdMethod::ExpectedEC;
};

/// Covariance-derived inputs of the Rice formula: R(0) and -R''(0).
struct RiceInputs {
  double r0 = 1.0;
  double r2 = 0.0;
};

namespace detail {

inline double log_beta_norm(double a, double b) {
  return std::lgamma(0.5 * (a + b)) - std::lgamma(0.5 * a) - std::lgamma(0.5 * b);
}

// Density of the F(alpha, beta) statistic.
inline double f_density(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  const double u = a * x / b;
  return std::exp(log_beta_norm(a, b) + std::log(a / b) + 0.5 * (a - 2.0) * std::log(u) - 0.5 * (a + b) * std::log1p(u));
}

inline double f_rho0(double h, double a, double b) {
  if (h == 0.0) return 1.0;
  return integrate_exp_sinh([&](double x) { return f_density(x, a, b); }, h, 1e-12).value;
}

inline double gaussian_ec_density(std::size_t d, double h, double lambda) {
  using std::numbers::pi;
  const double e = std::exp(-0.5 * h * h);
  switch (d) {
    case 0: return normal_sf(h);
    case 1: return std::sqrt(lambda) * e / (2.0 * pi);
    case 2: return lambda * h * e / std::pow(2.0 * pi, 1.5);
    case 3: return std::pow(lambda, 1.5) * (h * h - 1.0) * e / ((2.0 * pi) * (2.0 * pi));
    default: break;
  }
  throw Error(ErrorCode::UnsupportedCombination, "Gaussian EC density defined for d = 0..3");
}

inline double f_ec_density(std::size_t d, double h, double a, double b, double lambda) {
  using std::numbers::pi;
  detail::require_param(h >= 0.0, "F-field EC density needs h >= 0");
  detail::require_param(a + b > static_cast<double>(d), "F-field EC density needs alpha + beta > d");
  const double u = a * h / b;
  switch (d) {
    case 0: return f_rho0(h, a, b);
    case 1:
      return std::sqrt(lambda) * std::exp(std::lgamma(0.5 * (a + b - 1.0)) - std::lgamma(0.5 * a) - std::lgamma(0.5 * b)) *
             std::numbers::sqrt2 * std::pow(u, 0.5 * (a - 1.0)) * std::pow(1.0 + u, -0.5 * (a + b - 2.0));
    case 2:
      detail::require_param(h > 0.0 || a >= 2.0, "F-field rho_2 diverges at h = 0 for alpha < 2");
      return lambda / (2.0 * pi) *
             std::exp(std::lgamma(0.5 * (a + b - 2.0)) - std::lgamma(0.5 * a) - std::lgamma(0.5 * b)) *
             std::pow(u, 0.5 * (a - 2.0)) * std::pow(1.0 + u, -0.5 * (a + b - 2.0)) * ((b - 1.0) * u - (a - 1.0));
    default: break;
  }
  throw Error(ErrorCode::UnsupportedCombination, "F-field EC density defined for d = 0..2");
}

}  // namespace detail

/// d-th Euler characteristic density of a zero-mean unit-variance field.
inline double ec_density(const FieldSpec& spec, std::size_t d, double h) {
  detail::require_param(std::isfinite(spec.lambda) && spec.lambda > 0.0, "lambda must be positive");
  if (spec.family == Family::Gaussian) return detail::gaussian_ec_density(d, h, spec.lambda);
  detail::require_param(spec.df_num >= 1 && spec.df_den >= 1, "F degrees of freedom must be >= 1");
  return detail::f_ec_density(d, h, spec.df_num, spec.df_den, spec.lambda);
}

/// E chi(A_h) = sum_d mu_d rho_d(h); approximates P(sup Y > h) at high h.
inline double expected_ec(const IntrinsicVolumes& iv, const FieldSpec& spec, double h) {
  detail::require_param(!iv.mu.empty() && iv.mu.size() <= 4, "intrinsic volumes must have 1..4 entries");
  double sum = 0.0;
  for (std::size_t d = 0; d < iv.mu.size(); ++d) {
    if (iv.mu[d] == 0.0) continue;
    sum += iv.mu[d] * ec_density(spec, d, h);
  }
  return sum;
}

/// Corrected p-value of an observed maximum: expected EC clamped to [0, 1].
inline double corrected_pvalue(const IntrinsicVolumes& iv, const FieldSpec& spec, double h_observed) {
  const double p = expected_ec(iv, spec, h_observed);
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

/// Solves expected_ec(h) = alpha by bisection on the high-threshold branch.
///
/// The bracket starts at max(1, mode of the statistic) and is moved up in
/// half-unit steps while the expansion is still rising there (e.g. the
/// (h^2 - 1) factor of rho_3 below sqrt(3)); the upper end doubles until the
/// expansion drops below alpha. If the expansion is already below alpha at the
/// lower end, the requested alpha is outside the regime where the
/// approximation holds and RegimeViolation is raised.
inline ThresholdResult rft_threshold(const IntrinsicVolumes& iv, const FieldSpec& spec, double alpha) {
  detail::require_param(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
  auto ec = [&](double h) { return expected_ec(iv, spec, h); };
  constexpr double probe = 1e-6;
  auto decreasing_at = [&](double h) { return ec(h + probe) < ec(h); };

  double mode = 0.0;
  if (spec.family == Family::F && spec.df_num > 2)
    mode = (spec.df_num - 2.0) / spec.df_num * spec.df_den / (spec.df_den + 2.0);
  double lo = std::max(1.0, mode);
  for (int i = 0; i < 40 && !decreasing_at(lo); ++i) lo += 0.5;
  if (!decreasing_at(lo))
    throw Error(ErrorCode::RegimeViolation, "expected EC is not decreasing on the high-threshold range");
  if (ec(lo) < alpha)
    throw Error(ErrorCode::RegimeViolation,
                "expected EC falls below alpha already at h = " + std::to_string(lo) +
                    "; the EC approximation is only valid for sufficiently high thresholds");

  double hi = lo + 1.0;
  for (int i = 0; i < 64 && ec(hi) >= alpha; ++i) hi = lo + 2.0 * (hi - lo);
  if (ec(hi) >= alpha) throw Error(ErrorCode::RegimeViolation, "could not bracket the threshold");
  if (!decreasing_at(hi - probe))
    throw Error(ErrorCode::RegimeViolation, "expected EC is not decreasing at the upper bracket end");

  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ec(mid) >= alpha ? lo : hi) = mid;
  }
  const double h = 0.5 * (lo + hi);
  return {h, ec(h), ThresholdMethod::ExpectedEC};
}

/// Per-test level alpha / n_tests on the standard normal scale.
inline ThresholdResult bonferroni_threshold(double alpha, std::size_t n_tests) {
  detail::require_param(alpha > 0.0 && alpha <= 1.0, "alpha must be in (0,1]");
  detail::require_param(n_tests >= 1, "n_tests must be >= 1");
  const double p = alpha / static_cast<double>(n_tests);
  detail::require_param(p > 0.0 && std::isnormal(p), "alpha / n_tests underflows");
  const double h = p >= 1.0 ? -std::numeric_limits<double>::infinity() : normal_upper_quantile(p);
  const double achieved = std::min(1.0, static_cast<double>(n_tests) * normal_sf(h));
  return {h, achieved, ThresholdMethod::Bonferroni};
}

/// Expected number of upcrossings of level h per unit length by a stationary
/// Gaussian process with variance r0 and second spectral moment r2:
///   (1 / 2 pi) sqrt(r2 / r0) exp(-h^2 / (2 r0)).
inline double rice_expected_upcrossings(const RiceInputs& in, double h) {
  detail::require_param(std::isfinite(in.r0) && in.r0 > 0.0, "R(0) must be positive");
  detail::require_param(std::isfinite(in.r2) && in.r2 >= 0.0, "-R''(0) must be nonnegative");
  return std::sqrt(in.r2 / in.r0) * std::exp(-h * h / (2.0 * in.r0)) / (2.0 * std::numbers::pi);
}

/// P(sup Y < h) ~= exp(-(|M| / E|A_h|) P(Y >= h)).
inline double poisson_clump_sup_prob(double vol_m, double mean_clump, double marginal_tail) {
  detail::require_param(std::isfinite(vol_m) && vol_m > 0.0, "search volume must be positive");
  detail::require_param(std::isfinite(mean_clump) && mean_clump > 0.0, "mean clump size must be positive");
  detail::require_param(marginal_tail >= 0.0 && marginal_tail <= 1.0, "marginal tail must be in [0,1]");
  return std::exp(-(vol_m / mean_clump) * marginal_tail);
}

/// Threshold at which the clumping approximation gives FWER alpha, for a
/// fixed mean clump size: solves P(Y >= h) = -log(1 - alpha) E|A_h| / |M|.
inline ThresholdResult poisson_clump_threshold(double vol_m, double mean_clump, const FieldSpec& spec, double alpha) {
  detail::require_param(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
  detail::require_param(std::isfinite(vol_m) && vol_m > 0.0, "search volume must be positive");
  detail::require_param(std::isfinite(mean_clump) && mean_clump > 0.0, "mean clump size must be positive");
  const double tail = -std::log1p(-alpha) * mean_clump / vol_m;
  if (tail >= (spec.family == Family::Gaussian ? 1.0 : 1.0 - 1e-15))
    throw Error(ErrorCode::RegimeViolation, "mean clump size is too large for this search volume and alpha");

  double h = 0.0;
  if (spec.family == Family::Gaussian) {
    h = normal_upper_quantile(tail);
  } else {
    auto sf = [&](double x) { return ec_density(spec, 0, x); };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && sf(hi) > tail; ++i) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (sf(mid) > tail ? lo : hi) = mid;
    }
    h = 0.5 * (lo + hi);
  }
  const double p = spec.family == Family::Gaussian ? normal_sf(h) : ec_density(spec, 0, h);
  return {h, 1.0 - poisson_clump_sup_prob(vol_m, mean_clump, p), ThresholdMethod::PoissonClump};
}

}  // namespace rft
