#pragma once

// Replicated simulation of smoothed Gaussian fields and the empirical
// estimators used to validate the closed-form quantities in inference.hpp.
//
// Replicate r always draws its noise from RngSeed{base_seed.seed, r}, so any
// replicate can be regenerated on its own and summaries do not depend on how
// replicates are distributed over threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "rft/error.hpp"
#include "rft/grid_field.hpp"
#include "rft/smoothing.hpp"
#include "rft/topology.hpp"

namespace rft {

/// Post-smoothing variance normalization.
enum class Standardization {
  None,
  /// Divide each replicate by its own sample standard deviation.
  SampleVariance,
  /// Divide by the stationary standard deviation sigma_w (sum K^2)^(N/2).
  Theoretical,
};

inline const char* to_string(Standardization s) {
  switch (s) {
    case Standardization::None: return "none";
    case Standardization::SampleVariance: return "sample";
    case Standardization::Theoretical: return "theoretical";
  }
  return "unknown";
}

struct SimConfig {
  Grid grid{{1}};
  double fwhm = 0.0;  // 0 disables smoothing
  double sigma_w = 1.0;
  std::size_t n_replicates = 1;
  std::vector<double> thresholds;
  RngSeed base_seed{};
  std::optional<ScalarField> signal;  // added to the noise before smoothing
  Standardization standardization = Standardization::None;
  /// Draw noise on a grid enlarged by the kernel radius on every side and
  /// keep the central window, so the result is stationary up to the edges.
  bool interior_crop = false;
  unsigned threads = 1;

  Kernel1D kernel() const {
    return fwhm > 0.0 ? gaussian_kernel_1d(SmoothnessParams::from_fwhm(fwhm), grid.delta()) : Kernel1D::identity();
  }
};

struct StandardizationRecord {
  Standardization mode = Standardization::None;
  std::vector<double> scale;  // multiplier applied to replicate r
};

struct ReplicateSummary {
  std::vector<double> sup_values;
  std::vector<std::vector<long long>> ec_curves;  // [replicate][threshold]
  std::vector<double> mean_ec;
  std::vector<double> stderr_ec;
  std::vector<double> empirical_fwer;
  StandardizationRecord standardization;
};

struct SimulatedField {
  ScalarField field;
  double scale = 1.0;
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; the first exception (by index) is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Unbiased (n - 1) sample variance.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Replicate r of the configured simulation.
inline SimulatedField simulate_field(const SimConfig& config, std::size_t replicate) {
  const Grid& grid = config.grid;
  const Kernel1D kernel = config.kernel();
  const std::size_t pad = config.interior_crop ? kernel.radius : 0;
  std::vector<std::size_t> noise_dims = grid.dims();
  for (auto& d : noise_dims) d += 2 * pad;

  ScalarField noise = white_noise(Grid(noise_dims, grid.delta()), config.sigma_w, {config.base_seed.seed, replicate});
  if (config.signal) {
    detail::require_param(config.signal->grid() == grid, "signal grid does not match the simulation grid");
    const ScalarField s = pad ? zero_pad(*config.signal, pad) : *config.signal;
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] += s[i];
  }
  ScalarField field = smooth(noise, kernel);
  if (pad) {
    const std::vector<std::size_t> offset(grid.ndim(), pad);
    field = crop(field, offset, grid.dims());
  }

  double scale = 1.0;
  switch (config.standardization) {
    case Standardization::None: break;
    case Standardization::SampleVariance: {
      const double var = sample_variance(field.values());
      detail::require_param(var > 0.0, "cannot standardize a constant field");
      scale = 1.0 / std::sqrt(var);
      break;
    }
    case Standardization::Theoretical:
      scale = 1.0 / (config.sigma_w * std::pow(kernel.energy(), 0.5 * static_cast<double>(grid.ndim())));
      break;
  }
  if (scale != 1.0)
    for (double& v : field.values()) v *= scale;
  return {std::move(field), scale};
}

/// Number of i with v[i] <= h < v[i + 1] along a 1D field.
inline std::size_t count_upcrossings(const ScalarField& field, double h) {
  detail::require(field.grid().ndim() == 1, ErrorCode::UnsupportedDimension, "upcrossings need a 1D field");
  std::size_t n = 0;
  const auto v = field.values();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) n += (v[i] <= h && v[i + 1] > h);
  return n;
}

inline long long excursion_ec(const ScalarField& field, double h) {
  const BinaryMask mask = excursion_set(field, h);
  return field.grid().ndim() == 1 ? euler_characteristic_1d(mask) : euler_characteristic(mask);
}

/// Fraction of sup values strictly above h.
inline double empirical_fwer(std::span<const double> sup_values, double h) {
  detail::require_param(!sup_values.empty(), "empirical FWER needs at least one replicate");
  std::size_t n = 0;
  for (double s : sup_values) n += s > h;
  return static_cast<double>(n) / static_cast<double>(sup_values.size());
}

inline ReplicateSummary run_replicates(const SimConfig& config) {
  detail::require_param(config.n_replicates >= 1, "n_replicates must be >= 1");
  for (std::size_t t = 1; t < config.thresholds.size(); ++t)
    detail::require_param(config.thresholds[t] > config.thresholds[t - 1], "thresholds must be strictly increasing");
  const std::size_t n = config.n_replicates;
  const std::size_t nt = config.thresholds.size();

  ReplicateSummary out;
  out.sup_values.resize(n);
  out.ec_curves.assign(n, std::vector<long long>(nt, 0));
  out.standardization.mode = config.standardization;
  out.standardization.scale.resize(n);

  parallel_for(n, config.threads, [&](std::size_t r) {
    const SimulatedField sim = simulate_field(config, r);
    out.sup_values[r] = sim.field.max();
    out.standardization.scale[r] = sim.scale;
    for (std::size_t t = 0; t < nt; ++t) out.ec_curves[r][t] = excursion_ec(sim.field, config.thresholds[t]);
  });

  out.mean_ec.assign(nt, 0.0);
  out.stderr_ec.assign(nt, 0.0);
  out.empirical_fwer.assign(nt, 0.0);
  std::vector<double> column(n);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t r = 0; r < n; ++r) column[r] = static_cast<double>(out.ec_curves[r][t]);
    out.mean_ec[t] = sample_mean(column);
    out.stderr_ec[t] = std::sqrt(sample_variance(column) / static_cast<double>(n));
    out.empirical_fwer[t] = empirical_fwer(out.sup_values, config.thresholds[t]);
  }
  return out;
}

/// Smoothness estimate: each field is scaled to unit sample variance, then
/// lambda-hat is the sample variance of the forward-difference quotients,
/// averaged over every (field, axis) pair.
inline double estimate_lambda(std::span<const ScalarField> fields, double delta) {
  detail::require_param(!fields.empty(), "estimate_lambda needs at least one field");
  detail::require_param(std::isfinite(delta) && delta > 0.0, "delta must be positive");
  double total = 0.0;
  std::size_t terms = 0;
  for (const auto& f : fields) {
    const Grid& g = f.grid();
    for (std::size_t a = 0; a < g.ndim(); ++a)
      detail::require_param(g.dim(a) >= 2, "estimate_lambda needs at least 2 cells along every axis");
    const double var = sample_variance(f.values());
    detail::require_param(var > 0.0, "cannot estimate smoothness of a constant field");
    const double scale = 1.0 / (std::sqrt(var) * delta);
    for (std::size_t a = 0; a < g.ndim(); ++a) {
      // finite_difference divides by the grid spacing; use the caller's delta instead.
      ScalarField diff = finite_difference(f, a);
      for (double& v : diff.values()) v *= g.delta() * scale;
      total += sample_variance(diff.values());
      ++terms;
    }
  }
  return total / static_cast<double>(terms);
}

/// Mean measure (cells * delta^N) of the connected components of the
/// excursion sets at h, pooled over all fields.
inline double estimate_mean_clump_size(std::span<const ScalarField> fields, double h, double delta) {
  detail::require_param(!fields.empty(), "estimate_mean_clump_size needs at least one field");
  detail::require_param(std::isfinite(delta) && delta > 0.0, "delta must be positive");
  std::size_t cells = 0, components = 0;
  for (const auto& f : fields) {
    const auto cc = connected_components(excursion_set(f, h));
    for (std::size_t s : cc.sizes) cells += s;
    components += cc.sizes.size();
  }
  if (components == 0) throw Error(ErrorCode::NoExcursions, "no excursions above h in any replicate");
  const double cell = std::pow(delta, static_cast<double>(fields.front().grid().ndim()));
  return static_cast<double>(cells) * cell / static_cast<double>(components);
}

struct IntegralVariance {
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// Variance of field_integral over replicates against
///   delta^(2N) sum_x sum_y R(x, y)
/// with R the covariance of the smoothed noise (times the square of any
/// fixed standardization factor). The double sum factorizes over axes:
/// sum_x sum_y R = sigma_w^2 prod_a sum_i (sum_p K(p - i))^2, i over noise sites.
inline IntegralVariance integral_variance_check(const SimConfig& config) {
  detail::require_param(!config.signal, "integral variance check needs a null configuration");
  detail::require_param(config.standardization != Standardization::SampleVariance,
                        "per-replicate sample standardization has no closed-form integral variance");
  detail::require_param(config.n_replicates >= 2, "integral variance check needs at least 2 replicates");

  std::vector<double> integrals(config.n_replicates);
  parallel_for(config.n_replicates, config.threads,
               [&](std::size_t r) { integrals[r] = field_integral(simulate_field(config, r).field); });

  const Grid& g = config.grid;
  const Kernel1D kernel = config.kernel();
  const auto pad = static_cast<long long>(config.interior_crop ? kernel.radius : 0);
  double sum = config.sigma_w * config.sigma_w;
  for (std::size_t a = 0; a < g.ndim(); ++a) {
    const auto n = static_cast<long long>(g.dim(a));
    double axis = 0.0;
    for (long long i = -pad; i < n + pad; ++i) {
      double mass = 0.0;
      for (long long p = 0; p < n; ++p) mass += kernel.at(p - i);
      axis += mass * mass;
    }
    sum *= axis;
  }
  double scale = 1.0;
  if (config.standardization == Standardization::Theoretical)
    scale = 1.0 / (config.sigma_w * std::pow(kernel.energy(), 0.5 * static_cast<double>(g.ndim())));
  const double cell = g.cell_measure();
  return {sample_variance(integrals), sum * cell * cell * scale * scale};
}

}  // namespace rft
