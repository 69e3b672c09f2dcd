#pragma once

// Excursion sets and their topology on the closed cubical complex: each true
// cell is a closed unit square/cube, so cells sharing only a corner are
// connected (8-adjacency in 2D, 26-adjacency in 3D).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "rft/error.hpp"
#include "rft/grid_field.hpp"

namespace rft {

struct BinaryMask {
  Grid grid;
  std::vector<std::uint8_t> bits;

  explicit BinaryMask(Grid g, bool fill = false) : grid(std::move(g)), bits(grid.size(), fill ? 1 : 0) {}

  BinaryMask(Grid g, std::vector<std::uint8_t> b) : grid(std::move(g)), bits(std::move(b)) {
    detail::require_param(bits.size() == grid.size(), "mask length does not match grid cell count");
  }

  bool operator[](std::size_t i) const { return bits[i] != 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
};

/// Intrinsic volumes mu_0..mu_N of a search region.
struct IntrinsicVolumes {
  std::vector<double> mu;
};

/// Cells with value strictly above h (+Inf counts as above, NaN does not).
inline BinaryMask excursion_set(const ScalarField& field, double h) {
  BinaryMask mask(field.grid());
  const auto v = field.values();
  for (std::size_t i = 0; i < v.size(); ++i) mask.bits[i] = v[i] > h ? 1 : 0;
  return mask;
}

namespace detail {

/// Number of k-cells (k = 0..N) in the union of closed true voxels. A k-cell
/// spans a subset S of axes; it is present when any voxel incident to it is
/// true. This is the direct definition and is used as the reference count.
inline std::vector<long long> cubical_cell_counts(const BinaryMask& mask) {
  const Grid& g = mask.grid;
  const std::size_t n = g.ndim();
  std::vector<long long> counts(n + 1, 0);

  for (unsigned span = 0; span < (1u << n); ++span) {
    // Cell positions: 0..dim along a spanned axis, 0..dim inclusive otherwise.
    std::vector<std::size_t> extent(n);
    std::size_t total = 1;
    int k = 0;
    for (std::size_t a = 0; a < n; ++a) {
      const bool spanned = (span >> a) & 1u;
      k += spanned;
      extent[a] = spanned ? g.dim(a) : g.dim(a) + 1;
      total *= extent[a];
    }
    std::vector<std::size_t> pos(n, 0);
    for (std::size_t cell = 0; cell < total; ++cell) {
      std::size_t rem = cell;
      for (std::size_t a = n; a-- > 0;) {
        pos[a] = rem % extent[a];
        rem /= extent[a];
      }
      // Incident voxels: v_a = pos_a if spanned, else v_a in {pos_a - 1, pos_a}.
      bool present = false;
      const unsigned free_axes = ~span & ((1u << n) - 1u);
      for (unsigned pick = 0; pick < (1u << n) && !present; ++pick) {
        if (pick & ~free_axes) continue;
        std::size_t idx = 0;
        bool inside = true;
        for (std::size_t a = 0; a < n && inside; ++a) {
          const long long v = static_cast<long long>(pos[a]) - static_cast<long long>((pick >> a) & 1u);
          if (v < 0 || v >= static_cast<long long>(g.dim(a))) inside = false;
          else idx = idx * g.dim(a) + static_cast<std::size_t>(v);
        }
        if (inside && mask.bits[idx]) present = true;
      }
      if (present) ++counts[static_cast<std::size_t>(k)];
    }
  }
  return counts;
}

/// Per-vertex contribution table for the closed complex. A vertex sees the
/// 2^N voxels around it; every incident k-cell is shared by 2^k vertices, so
/// weighting each present incident cell by (-1)^k 2^(N-k) and summing over all
/// vertices gives 2^N * chi.
template <std::size_t N>
constexpr std::array<int, (1u << (1u << N))> vertex_ec_table() {
  constexpr unsigned voxels = 1u << N;
  std::array<int, (1u << voxels)> table{};
  for (unsigned pattern = 0; pattern < (1u << voxels); ++pattern) {
    int acc = 0;
    // A k-cell at the vertex is fixed by its spanned axes S and, for each
    // spanned axis, which side of the vertex it lies on.
    for (unsigned span = 0; span < voxels; ++span) {
      int k = 0;
      for (std::size_t a = 0; a < N; ++a) k += (span >> a) & 1u;
      for (unsigned side = 0; side < voxels; ++side) {
        if (side & ~span) continue;
        bool present = false;
        for (unsigned v = 0; v < voxels; ++v)
          if ((v & span) == side && ((pattern >> v) & 1u)) present = true;
        if (present) acc += ((k % 2) ? -1 : 1) * static_cast<int>(1u << (N - static_cast<std::size_t>(k)));
      }
    }
    table[pattern] = acc;
  }
  return table;
}

}  // namespace detail

/// Euler characteristic V - E + F (2D) or V - E + F - C (3D) of the union of
/// closed true cells, accumulated from local vertex configurations.
inline long long euler_characteristic(const BinaryMask& mask) {
  const Grid& g = mask.grid;
  detail::require(g.ndim() == 2 || g.ndim() == 3, ErrorCode::UnsupportedDimension,
                  "Euler characteristic needs a 2D or 3D mask (use euler_characteristic_1d)");
  auto bit = [&](long long i, long long j, long long k) -> unsigned {
    if (i < 0 || j < 0 || k < 0) return 0;
    if (i >= static_cast<long long>(g.dim(0)) || j >= static_cast<long long>(g.dim(1))) return 0;
    if (g.ndim() == 3 && k >= static_cast<long long>(g.dim(2))) return 0;
    const std::size_t idx = g.ndim() == 3 ? (static_cast<std::size_t>(i) * g.dim(1) + static_cast<std::size_t>(j)) * g.dim(2) + static_cast<std::size_t>(k)
                                          : static_cast<std::size_t>(i) * g.dim(1) + static_cast<std::size_t>(j);
    return mask.bits[idx] ? 1u : 0u;
  };

  long long acc = 0;
  if (g.ndim() == 2) {
    static constexpr auto table = detail::vertex_ec_table<2>();
    const auto n0 = static_cast<long long>(g.dim(0)), n1 = static_cast<long long>(g.dim(1));
    for (long long i = 0; i <= n0; ++i)
      for (long long j = 0; j <= n1; ++j) {
        // Voxel v has bit a set when it lies on the low side along axis a.
        unsigned p = 0;
        for (unsigned v = 0; v < 4; ++v) p |= bit(i - ((v >> 0) & 1u), j - ((v >> 1) & 1u), 0) << v;
        acc += table[p];
      }
    return acc / 4;
  }
  static constexpr auto table = detail::vertex_ec_table<3>();
  const auto n0 = static_cast<long long>(g.dim(0)), n1 = static_cast<long long>(g.dim(1)),
             n2 = static_cast<long long>(g.dim(2));
  for (long long i = 0; i <= n0; ++i)
    for (long long j = 0; j <= n1; ++j)
      for (long long k = 0; k <= n2; ++k) {
        unsigned p = 0;
        for (unsigned v = 0; v < 8; ++v)
          p |= bit(i - ((v >> 0) & 1u), j - ((v >> 1) & 1u), k - ((v >> 2) & 1u)) << v;
        acc += table[p];
      }
  return acc / 8;
}

/// Number of maximal runs of true cells.
inline long long euler_characteristic_1d(const BinaryMask& mask) {
  detail::require(mask.grid.ndim() == 1, ErrorCode::UnsupportedDimension, "expected a 1D mask");
  long long runs = 0;
  bool prev = false;
  for (auto b : mask.bits) {
    if (b && !prev) ++runs;
    prev = b != 0;
  }
  return runs;
}

/// (V - E + F, (E - 2F) delta, F delta^2) of the closed-pixel complex.
inline IntrinsicVolumes lattice_intrinsic_volumes(const BinaryMask& mask, double delta) {
  detail::require(mask.grid.ndim() == 2, ErrorCode::UnsupportedDimension,
                  "lattice intrinsic volumes are implemented for 2D masks only");
  detail::require_param(std::isfinite(delta) && delta > 0.0, "delta must be positive");
  const auto c = detail::cubical_cell_counts(mask);
  const auto v = static_cast<double>(c[0]), e = static_cast<double>(c[1]), f = static_cast<double>(c[2]);
  return {{v - e + f, (e - 2.0 * f) * delta, f * delta * delta}};
}

struct Ball {
  double r;
};

/// Box with two (rectangle) or three side lengths.
struct Box {
  std::vector<double> sides;
};

using Shape = std::variant<Ball, Box>;

inline IntrinsicVolumes closed_form_intrinsic_volumes(const Shape& shape) {
  using std::numbers::pi;
  if (const auto* ball = std::get_if<Ball>(&shape)) {
    const double r = ball->r;
    detail::require_param(std::isfinite(r) && r > 0.0, "ball radius must be positive");
    return {{1.0, 4.0 * r, 2.0 * pi * r * r, 4.0 / 3.0 * pi * r * r * r}};
  }
  const auto& s = std::get<Box>(shape).sides;
  detail::require_param(s.size() == 2 || s.size() == 3, "box needs 2 or 3 side lengths");
  for (double x : s) detail::require_param(std::isfinite(x) && x > 0.0, "box sides must be positive");
  if (s.size() == 2) return {{1.0, s[0] + s[1], s[0] * s[1]}};
  const double a = s[0], b = s[1], c = s[2];
  return {{1.0, a + b + c, a * b + b * c + a * c, a * b * c}};
}

/// Intrinsic volumes of the whole grid taken as the search region: the
/// lattice count for 2D, the box closed form for 3D, (1, n delta) in 1D.
inline IntrinsicVolumes grid_intrinsic_volumes(const Grid& grid) {
  const double d = grid.delta();
  switch (grid.ndim()) {
    case 1: return {{1.0, static_cast<double>(grid.dim(0)) * d}};
    case 2: return lattice_intrinsic_volumes(BinaryMask(grid, true), d);
    default:
      return closed_form_intrinsic_volumes(Box{{static_cast<double>(grid.dim(0)) * d, static_cast<double>(grid.dim(1)) * d,
                                                static_cast<double>(grid.dim(2)) * d}});
  }
}

struct Components {
  std::vector<std::int32_t> labels;  // 0 = background, components numbered from 1
  std::vector<std::size_t> sizes;    // sizes[l - 1] = cell count of label l
};

/// Labels in order of each component's smallest linear index.
inline Components connected_components(const BinaryMask& mask) {
  const Grid& g = mask.grid;
  detail::require(g.ndim() == 2 || g.ndim() == 3, ErrorCode::UnsupportedDimension,
                  "connected components need a 2D or 3D mask");
  Components out{std::vector<std::int32_t>(g.size(), 0), {}};

  std::vector<std::array<long long, 3>> offsets;
  const long long dz = g.ndim() == 3 ? 1 : 0;
  for (long long a = -1; a <= 1; ++a)
    for (long long b = -1; b <= 1; ++b)
      for (long long c = -dz; c <= dz; ++c)
        if (a != 0 || b != 0 || c != 0) offsets.push_back({a, b, c});

  const long long n0 = static_cast<long long>(g.dim(0)), n1 = static_cast<long long>(g.dim(1)),
                  n2 = g.ndim() == 3 ? static_cast<long long>(g.dim(2)) : 1;
  std::vector<std::size_t> stack;
  std::int32_t next = 0;
  for (std::size_t start = 0; start < g.size(); ++start) {
    if (!mask.bits[start] || out.labels[start] != 0) continue;
    ++next;
    std::size_t size = 0;
    out.labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const auto i = static_cast<long long>(cur / static_cast<std::size_t>(n1 * n2));
      const auto j = static_cast<long long>((cur / static_cast<std::size_t>(n2)) % static_cast<std::size_t>(n1));
      const auto k = static_cast<long long>(cur % static_cast<std::size_t>(n2));
      for (const auto& o : offsets) {
        const long long ii = i + o[0], jj = j + o[1], kk = k + o[2];
        if (ii < 0 || jj < 0 || kk < 0 || ii >= n0 || jj >= n1 || kk >= n2) continue;
        const auto nb = static_cast<std::size_t>((ii * n1 + jj) * n2 + kk);
        if (mask.bits[nb] && out.labels[nb] == 0) {
          out.labels[nb] = next;
          stack.push_back(nb);
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

}  // namespace rft
