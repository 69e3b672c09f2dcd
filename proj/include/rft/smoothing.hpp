#pragma once

// Isotropic Gaussian kernel smoothing on grids: bandwidth conversions,
// truncated/renormalized 1D taps, separable "same"-size convolution with zero
// padding, and the exact covariance of smoothed discrete white noise.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "rft/error.hpp"
#include "rft/grid_field.hpp"

namespace rft {

/// Consistent (sigma, FWHM, lambda) triple of a Gaussian kernel:
/// fwhm = sigma * sqrt(8 ln 2), lambda = 1 / (2 sigma^2) = 4 ln 2 / fwhm^2.
struct SmoothnessParams {
  double sigma = 1.0;
  double fwhm = 0.0;
  double lambda = 0.0;

  static double fwhm_per_sigma() { return std::sqrt(8.0 * std::numbers::ln2); }

  static SmoothnessParams from_sigma(double sigma) {
    detail::require_param(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    return {sigma, sigma * fwhm_per_sigma(), 1.0 / (2.0 * sigma * sigma)};
  }

  static SmoothnessParams from_fwhm(double fwhm) {
    detail::require_param(std::isfinite(fwhm) && fwhm > 0.0, "FWHM must be positive");
    return {fwhm / fwhm_per_sigma(), fwhm, 4.0 * std::numbers::ln2 / (fwhm * fwhm)};
  }

  static SmoothnessParams from_lambda(double lambda) {
    detail::require_param(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
    const double sigma = 1.0 / std::sqrt(2.0 * lambda);
    return {sigma, sigma * fwhm_per_sigma(), lambda};
  }
};

/// Odd-length symmetric taps summing to one; tap k sits at offset k - radius.
struct Kernel1D {
  std::vector<double> taps{1.0};
  double scale_sigma = 0.0;  // in grid units
  std::size_t radius = 0;

  /// Single unit tap: smoothing with it is the identity.
  static Kernel1D identity() { return {}; }

  /// Weight at integer lattice offset d (zero outside the support).
  double at(long long d) const {
    const long long r = static_cast<long long>(radius);
    return (d < -r || d > r) ? 0.0 : taps[static_cast<std::size_t>(d + r)];
  }

  /// Sum of squared taps; the variance of unit white noise after one 1D pass.
  double energy() const {
    double s = 0.0;
    for (double t : taps) s += t * t;
    return s;
  }
};

/// taps[k] proportional to exp(-(k delta)^2 / (2 sigma^2)) for |k| <= ceil(4 sigma / delta).
inline Kernel1D gaussian_kernel_1d(const SmoothnessParams& params, double delta) {
  detail::require_param(std::isfinite(params.sigma) && params.sigma > 0.0, "kernel sigma must be positive");
  detail::require_param(std::isfinite(delta) && delta > 0.0, "lattice spacing must be positive");
  const double reach = std::ceil(4.0 * params.sigma / delta);
  detail::require_param(2.0 * reach + 1.0 <= static_cast<double>(Grid::kMaxCells), "kernel too wide for a grid");
  const auto radius = static_cast<std::size_t>(reach);

  Kernel1D k;
  k.radius = radius;
  k.scale_sigma = params.sigma / delta;
  k.taps.assign(2 * radius + 1, 0.0);
  const double inv = 1.0 / (2.0 * params.sigma * params.sigma);
  for (std::size_t i = 0; i <= radius; ++i) {
    const double x = static_cast<double>(i) * delta;
    const double w = std::exp(-x * x * inv);
    k.taps[radius + i] = w;
    k.taps[radius - i] = w;
  }
  double total = 0.0;
  for (double t : k.taps) total += t;
  for (double& t : k.taps) t /= total;
  return k;
}

namespace detail {

// out[o, i, j] = sum_k taps[k] * in[o, i + k - R, j], zero outside [0, n).
inline void convolve_axis(std::span<const double> in, std::span<double> out, std::size_t outer, std::size_t n,
                          std::size_t inner, const Kernel1D& kernel) {
  const auto r = static_cast<long long>(kernel.radius);
  const auto len = static_cast<long long>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * n * inner;
    for (long long i = 0; i < len; ++i) {
      double* dst = out.data() + base + static_cast<std::size_t>(i) * inner;
      for (std::size_t j = 0; j < inner; ++j) dst[j] = 0.0;
      for (long long k = 0; k < static_cast<long long>(kernel.taps.size()); ++k) {
        const long long src = i + k - r;
        if (src < 0 || src >= len) continue;
        const double w = kernel.taps[static_cast<std::size_t>(k)];
        const double* s = in.data() + base + static_cast<std::size_t>(src) * inner;
        for (std::size_t j = 0; j < inner; ++j) dst[j] += w * s[j];
      }
    }
  }
}

}  // namespace detail

/// Separable convolution along every axis, output the same size as the input,
/// zero padding outside the grid. Near the boundary values shrink toward 0.
inline ScalarField smooth(const ScalarField& field, const Kernel1D& kernel) {
  const Grid& g = field.grid();
  for (std::size_t a = 0; a < g.ndim(); ++a)
    detail::require_param(kernel.taps.size() <= 2 * g.dim(a) + 1, "kernel longer than 2*dim+1 along an axis");
  if (kernel.taps.size() == 1 && kernel.taps[0] == 1.0) return field;

  std::vector<double> a(field.values().begin(), field.values().end());
  std::vector<double> b(a.size());
  for (std::size_t axis = 0; axis < g.ndim(); ++axis) {
    const std::size_t inner = g.stride(axis);
    const std::size_t n = g.dim(axis);
    detail::convolve_axis(a, b, g.size() / (n * inner), n, inner, kernel);
    a.swap(b);
  }
  return ScalarField(g, std::move(a));
}

/// Covariance of K * w at lattice points x and y, where w is iid
/// N(0, sigma_w^2) on the sites of `grid`:
///   sigma_w^2 * sum_i K(x - x_i) K(y - x_i).
/// The site sum factorizes over axes because both the kernel and the site set
/// are products.
inline double smoothed_noise_covariance(const Kernel1D& kernel, double sigma_w, std::span<const std::size_t> x,
                                        std::span<const std::size_t> y, const Grid& grid) {
  detail::require_param(x.size() == grid.ndim() && y.size() == grid.ndim(), "point rank does not match grid");
  double cov = sigma_w * sigma_w;
  for (std::size_t a = 0; a < grid.ndim(); ++a) {
    detail::require_param(x[a] < grid.dim(a) && y[a] < grid.dim(a), "point outside grid");
    const auto xa = static_cast<long long>(x[a]);
    const auto ya = static_cast<long long>(y[a]);
    double s = 0.0;
    for (long long i = 0; i < static_cast<long long>(grid.dim(a)); ++i) s += kernel.at(xa - i) * kernel.at(ya - i);
    cov *= s;
  }
  return cov;
}

/// Variance and second spectral moment of K * w along one axis, where w is
/// iid N(0, sigma_w^2) on the lattice: R(0) = sigma_w^2 sum K^2 and
/// -R''(0) taken as the variance of the forward difference quotient,
/// sigma_w^2 sum (K[k+1] - K[k])^2 / delta^2.
inline std::pair<double, double> smoothed_noise_moments(const Kernel1D& kernel, double sigma_w, double delta) {
  detail::require_param(std::isfinite(sigma_w) && sigma_w > 0.0, "sigma_w must be positive");
  detail::require_param(std::isfinite(delta) && delta > 0.0, "delta must be positive");
  const auto r = static_cast<long long>(kernel.radius);
  double diff = 0.0;
  for (long long k = -r - 1; k <= r; ++k) {
    const double d = kernel.at(k + 1) - kernel.at(k);
    diff += d * d;
  }
  const double s2 = sigma_w * sigma_w;
  return {s2 * kernel.energy(), s2 * diff / (delta * delta)};
}

}  // namespace rft
