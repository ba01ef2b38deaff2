#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gaussperc {

using Index = std::array<std::int64_t, 3>;
using Point = std::array<double, 3>;

/// Regular lattice of `dim` axes (2 or 3). Unused trailing axes have extent 1.
///
/// Cell k sits at the physical point origin + spacing * (k - extent / 2), so
/// `origin` is the position of the center cell (integer division for even
/// extents). Linear order is row-major with axis 0 slowest.
class Grid {
 public:
  Grid(int dim, Index extent, double spacing, Point origin = {0.0, 0.0, 0.0});

  /// Odd-sized cube of 2 * half_cells + 1 cells per axis centered at `origin`.
  static Grid centered_cube(int dim, std::int64_t half_cells, double spacing,
                            Point origin = {0.0, 0.0, 0.0});

  /// Smallest grid with cell centers on spacing * Z^d containing [lo, hi].
  static Grid covering(int dim, Point lo, Point hi, double spacing);

  int dim() const noexcept { return dim_; }
  const Index& extent() const noexcept { return extent_; }
  std::int64_t extent(int axis) const noexcept { return extent_[axis]; }
  double spacing() const noexcept { return spacing_; }
  const Point& origin() const noexcept { return origin_; }
  std::size_t size() const noexcept { return size_; }
  const std::array<std::size_t, 3>& strides() const noexcept { return strides_; }

  Index center_index() const noexcept;
  bool contains(const Index& k) const noexcept;

  std::size_t linear(const Index& k) const noexcept {
    return static_cast<std::size_t>(k[0]) * strides_[0] + static_cast<std::size_t>(k[1]) * strides_[1] +
           static_cast<std::size_t>(k[2]);
  }
  Index unravel(std::size_t linear) const noexcept;

  Point position(const Index& k) const noexcept;
  Point position(std::size_t linear) const noexcept { return position(unravel(linear)); }
  double coordinate(int axis, std::int64_t k) const noexcept;

  /// Index of the cell whose center is nearest to `p` (may lie outside).
  Index nearest(const Point& p) const noexcept;

  /// Cells [lo, hi) as a grid with identical physical placement.
  Grid sub_grid(const Index& lo, const Index& hi) const;

  bool same_geometry(const Grid& other) const noexcept;

 private:
  int dim_;
  Index extent_;
  double spacing_;
  Point origin_;
  std::size_t size_ = 0;
  std::array<std::size_t, 3> strides_{};
};

/// Closed axis-aligned cube [center - half, center + half]^d.
struct Box {
  Point center{0.0, 0.0, 0.0};
  double half = 1.0;
};

/// Half-open index range [lo, hi) of cells whose centers lie in `box`.
/// Empty ranges have lo[a] >= hi[a] on some axis.
struct CellRange {
  Index lo{0, 0, 0};
  Index hi{1, 1, 1};

  bool empty(int dim) const noexcept;
  std::size_t count(int dim) const noexcept;
};

CellRange cells_in_box(const Grid& grid, const Box& box) noexcept;
bool range_inside(const Grid& grid, const CellRange& range) noexcept;

enum class FieldKind { white_noise, smooth, block_constant };

std::string_view to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view name);

/// Scalar values on a Grid. Immutable after construction.
///
/// White-noise fields hold plain iid N(0,1) draws; the h^{d/2} white-noise
/// scaling is applied by convolve_field.
class GridField {
 public:
  GridField(Grid grid, std::vector<double> values, FieldKind kind, std::int64_t block_cells = 1);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  FieldKind kind() const noexcept { return kind_; }
  std::int64_t block_cells() const noexcept { return block_cells_; }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double at(const Index& k) const noexcept { return values_[grid_.linear(k)]; }

  GridField negated() const;
  GridField crop(const CellRange& range) const;

 private:
  Grid grid_;
  std::vector<double> values_;
  FieldKind kind_;
  std::int64_t block_cells_;
};

}  // namespace gaussperc
