#pragma once

// Lattice geometry, sampled scalar fields and the generators/operators that
// act on them directly (noise, synthetic signals, derived statistic fields,
// Riemann-sum integration and forward differences).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rft/error.hpp"

namespace rft {

/// Rectangular lattice with a single spacing shared by every axis.
class Grid {
 public:
  static constexpr std::size_t kMaxCells = std::size_t{1} << 31;

  Grid(std::vector<std::size_t> dims, double delta = 1.0) : dims_(std::move(dims)), delta_(delta) {
    detail::require(!dims_.empty() && dims_.size() <= 3, ErrorCode::UnsupportedDimension,
                    "grid must have 1, 2 or 3 axes");
    detail::require_param(std::isfinite(delta_) && delta_ > 0.0, "grid spacing must be positive");
    size_ = 1;
    for (std::size_t d : dims_) {
      detail::require_param(d >= 1, "every grid dimension must be >= 1");
      detail::require_param(size_ <= kMaxCells / d, "grid exceeds 2^31 cells");
      size_ *= d;
    }
    detail::require_param(size_ <= kMaxCells, "grid exceeds 2^31 cells");
  }

  std::size_t ndim() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  double delta() const noexcept { return delta_; }
  std::size_t size() const noexcept { return size_; }

  /// Measure of one lattice cell, delta^N.
  double cell_measure() const { return std::pow(delta_, static_cast<double>(ndim())); }

  /// Row-major stride of an axis (last axis is contiguous).
  std::size_t stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t a = dims_.size(); a-- > axis + 1;) s *= dims_[a];
    return s;
  }

  std::size_t index(std::span<const std::size_t> coords) const {
    detail::require_param(coords.size() == ndim(), "coordinate rank does not match grid");
    std::size_t idx = 0;
    for (std::size_t a = 0; a < ndim(); ++a) {
      detail::require_param(coords[a] < dims_[a], "coordinate outside grid");
      idx = idx * dims_[a] + coords[a];
    }
    return idx;
  }

  std::vector<std::size_t> coords(std::size_t idx) const {
    std::vector<std::size_t> c(ndim());
    for (std::size_t a = ndim(); a-- > 0;) {
      c[a] = idx % dims_[a];
      idx /= dims_[a];
    }
    return c;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dims_ == b.dims_ && a.delta_ == b.delta_;
  }

 private:
  std::vector<std::size_t> dims_;
  double delta_;
  std::size_t size_ = 0;
};

/// Real-valued sample of a field on a grid, stored row-major.
class ScalarField {
 public:
  explicit ScalarField(Grid grid, double fill = 0.0) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

  ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    detail::require_param(values_.size() == grid_.size(), "value count does not match grid cell count");
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double at(std::span<const std::size_t> coords) const { return values_[grid_.index(coords)]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values_) m = v > m ? v : m;
    return m;
  }

  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values_) m = v < m ? v : m;
    return m;
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// (seed, stream) pair; stream is the replicate index in Monte Carlo runs.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline std::mt19937_64 make_engine(RngSeed rng) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng.seed), static_cast<std::uint32_t>(rng.seed >> 32),
                    static_cast<std::uint32_t>(rng.stream), static_cast<std::uint32_t>(rng.stream >> 32),
                    0x52465431u};
  return std::mt19937_64(seq);
}

enum class Family { Gaussian, F };

/// Statistical identity of a field as needed by the EC densities.
struct FieldSpec {
  Family family = Family::Gaussian;
  int df_num = 0;  // alpha, F only
  int df_den = 0;  // beta, F only
  double lambda = 1.0;

  static FieldSpec gaussian(double lambda) {
    detail::require_param(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
    return {Family::Gaussian, 0, 0, lambda};
  }

  static FieldSpec f(int alpha, int beta, double lambda) {
    detail::require_param(alpha >= 1 && beta >= 1, "F degrees of freedom must be >= 1");
    detail::require_param(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
    return {Family::F, alpha, beta, lambda};
  }
};

/// Iid N(0, sigma_w^2) draw at every lattice point.
inline ScalarField white_noise(const Grid& grid, double sigma_w, RngSeed rng) {
  detail::require_param(std::isfinite(sigma_w) && sigma_w > 0.0, "sigma_w must be positive");
  auto engine = make_engine(rng);
  std::normal_distribution<double> normal(0.0, sigma_w);
  ScalarField out(grid);
  for (double& v : out.values()) v = normal(engine);
  return out;
}

/// cos(10x) + sin(8y) on the unit square; axis 0 is x, axis 1 is y.
inline ScalarField synthetic_signal(const Grid& grid) {
  detail::require(grid.ndim() == 2, ErrorCode::UnsupportedDimension, "synthetic signal needs a 2D grid");
  const std::size_t nx = grid.dim(0), ny = grid.dim(1);
  ScalarField out(grid);
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = nx > 1 ? static_cast<double>(i) / static_cast<double>(nx - 1) : 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      const double y = ny > 1 ? static_cast<double>(j) / static_cast<double>(ny - 1) : 0.0;
      out[i * ny + j] = std::cos(10.0 * x) + std::sin(8.0 * y);
    }
  }
  return out;
}

/// Procedural genus-1 "key": a square head with a rectangular hole and a
/// stem below it. Values are 1 on the object and 0 elsewhere. Proportions
/// scale with the grid; a 60x37 grid gives a ring 8 cells thick, which keeps
/// the hole open under FWHM-10 smoothing.
inline ScalarField key_signal(const Grid& grid) {
  detail::require(grid.ndim() == 2, ErrorCode::UnsupportedDimension, "key signal needs a 2D grid");
  const std::size_t n0 = grid.dim(0), n1 = grid.dim(1);
  detail::require_param(n0 >= 10 && n1 >= 10, "key signal needs at least a 10x10 grid");
  auto at = [](std::size_t n, double frac) { return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))); };
  struct Box {
    std::size_t r0, r1, c0, c1;
    bool contains(std::size_t r, std::size_t c) const { return r >= r0 && r < r1 && c >= c0 && c < c1; }
  };
  const Box head{at(n0, 0.05), at(n0, 0.55), at(n1, 0.08), at(n1, 0.92)};
  const Box hole{at(n0, 0.18), at(n0, 0.42), at(n1, 0.30), at(n1, 0.70)};
  const Box stem{at(n0, 0.55), at(n0, 0.95), at(n1, 0.38), at(n1, 0.62)};
  ScalarField out(grid);
  for (std::size_t r = 0; r < n0; ++r)
    for (std::size_t c = 0; c < n1; ++c)
      out[r * n1 + c] = ((head.contains(r, c) && !hole.contains(r, c)) || stem.contains(r, c)) ? 1.0 : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Derived statistic fields

enum class Statistic { ChiSquare, T, F };

struct DerivedKind {
  Statistic statistic = Statistic::ChiSquare;
  int m = 1;
  int alpha = 0;
  int beta = 0;

  static DerivedKind chi2(int m) { return {Statistic::ChiSquare, m, 0, 0}; }
  /// X0 / sqrt(sum_{i=1..m} Xi^2 / m), numerator component first.
  static DerivedKind t(int m) { return {Statistic::T, m, 0, 0}; }
  static DerivedKind f(int alpha, int beta) { return {Statistic::F, 0, alpha, beta}; }

  std::size_t component_count() const {
    switch (statistic) {
      case Statistic::ChiSquare: return static_cast<std::size_t>(m);
      case Statistic::T: return static_cast<std::size_t>(m) + 1;
      case Statistic::F: return static_cast<std::size_t>(alpha) + static_cast<std::size_t>(beta);
    }
    return 0;
  }
};

/// A derived field plus the number of cells whose denominator was exactly
/// zero. Those cells hold +/-Inf; excursion sets treat +Inf as above every
/// finite threshold.
struct DerivedField {
  ScalarField field;
  std::size_t degenerate_cells = 0;
};

inline DerivedField derived_field(const DerivedKind& kind, std::span<const ScalarField> components) {
  switch (kind.statistic) {
    case Statistic::ChiSquare:
    case Statistic::T: detail::require_param(kind.m >= 1, "degrees of freedom must be >= 1"); break;
    case Statistic::F: detail::require_param(kind.alpha >= 1 && kind.beta >= 1, "F degrees of freedom must be >= 1"); break;
  }
  detail::require_param(components.size() == kind.component_count(), "component count does not match statistic");
  const Grid& grid = components.front().grid();
  for (const auto& c : components) detail::require_param(c.grid() == grid, "components live on different grids");

  auto sum_sq = [&](std::size_t begin, std::size_t end, std::size_t i) {
    double s = 0.0;
    for (std::size_t k = begin; k < end; ++k) s += components[k][i] * components[k][i];
    return s;
  };

  DerivedField out{ScalarField(grid), 0};
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = 0.0;
    switch (kind.statistic) {
      case Statistic::ChiSquare: v = sum_sq(0, components.size(), i); break;
      case Statistic::T: {
        const double den = sum_sq(1, components.size(), i);
        if (den == 0.0) {
          v = std::signbit(components[0][i]) ? -inf : inf;
          ++out.degenerate_cells;
        } else {
          v = components[0][i] / std::sqrt(den / kind.m);
        }
        break;
      }
      case Statistic::F: {
        const auto a = static_cast<std::size_t>(kind.alpha);
        const double den = sum_sq(a, components.size(), i);
        if (den == 0.0) {
          v = inf;
          ++out.degenerate_cells;
        } else {
          v = (sum_sq(0, a, i) / kind.alpha) / (den / kind.beta);
        }
        break;
      }
    }
    out.field[i] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integration and differentiation

/// Riemann sum with cell measure delta^N.
inline double field_integral(const ScalarField& field) {
  double s = 0.0;
  for (double v : field.values()) s += v;
  return s * field.grid().cell_measure();
}

/// Forward difference along `axis`; the output is one cell shorter there.
inline ScalarField finite_difference(const ScalarField& field, std::size_t axis) {
  const Grid& g = field.grid();
  detail::require_param(axis < g.ndim(), "axis out of range");
  detail::require_param(g.dim(axis) >= 2, "finite difference needs at least 2 cells along the axis");
  std::vector<std::size_t> dims = g.dims();
  dims[axis] -= 1;
  ScalarField out(Grid(dims, g.delta()));

  const std::size_t inner = g.stride(axis);
  const std::size_t n = g.dim(axis);
  const std::size_t outer = g.size() / (n * inner);
  const double inv = 1.0 / g.delta();
  std::size_t k = 0;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = 0; j < inner; ++j, ++k) {
        const std::size_t src = (o * n + i) * inner + j;
        out[k] = (field[src + inner] - field[src]) * inv;
      }
  return out;
}

/// Sub-block starting at `offset` with extents `dims`.
inline ScalarField crop(const ScalarField& field, std::span<const std::size_t> offset,
                        const std::vector<std::size_t>& dims) {
  const Grid& g = field.grid();
  detail::require_param(offset.size() == g.ndim() && dims.size() == g.ndim(), "crop rank mismatch");
  for (std::size_t a = 0; a < g.ndim(); ++a)
    detail::require_param(offset[a] + dims[a] <= g.dim(a), "crop window exceeds grid");
  Grid sub(dims, g.delta());
  ScalarField out(sub);
  std::vector<std::size_t> src(g.ndim());
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const auto c = sub.coords(i);
    for (std::size_t a = 0; a < g.ndim(); ++a) src[a] = c[a] + offset[a];
    out[i] = field[g.index(src)];
  }
  return out;
}

/// Embeds `field` in a larger zero field, `pad` cells on every side.
inline ScalarField zero_pad(const ScalarField& field, std::size_t pad) {
  const Grid& g = field.grid();
  std::vector<std::size_t> dims = g.dims();
  for (auto& d : dims) d += 2 * pad;
  Grid big(dims, g.delta());
  ScalarField out(big);
  std::vector<std::size_t> dst(g.ndim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    for (std::size_t a = 0; a < g.ndim(); ++a) dst[a] = c[a] + pad;
    out[big.index(dst)] = field[i];
  }
  return out;
}

}  // namespace rft
