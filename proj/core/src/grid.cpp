#include "gaussperc/grid.hpp"

#include <cmath>
#include <string>

#include "gaussperc/error.hpp"

namespace gaussperc {
namespace {

constexpr double kAlignTol = 1e-9;

}  // namespace

Grid::Grid(int dim, Index extent, double spacing, Point origin)
    : dim_(dim), extent_(extent), spacing_(spacing), origin_(origin) {
  if (dim != 2 && dim != 3) throw ValidationError("dim", "must be 2 or 3, got " + std::to_string(dim));
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ValidationError("spacing", "must be finite and positive");
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      if (extent_[a] < 2) throw ValidationError("extent", "every axis needs at least 2 cells");
      if (!std::isfinite(origin_[a])) throw ValidationError("origin", "must be finite");
    } else {
      extent_[a] = 1;
      origin_[a] = 0.0;
    }
  }
  strides_ = {static_cast<std::size_t>(extent_[1] * extent_[2]), static_cast<std::size_t>(extent_[2]), 1};
  size_ = static_cast<std::size_t>(extent_[0]) * strides_[0];
}

Grid Grid::centered_cube(int dim, std::int64_t half_cells, double spacing, Point origin) {
  const std::int64_t n = 2 * half_cells + 1;
  return Grid(dim, {n, n, n}, spacing, origin);
}

Grid Grid::covering(int dim, Point lo, Point hi, double spacing) {
  Index extent{1, 1, 1};
  Point origin{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    const auto kmin = static_cast<std::int64_t>(std::floor(lo[a] / spacing + kAlignTol));
    const auto kmax = static_cast<std::int64_t>(std::ceil(hi[a] / spacing - kAlignTol));
    extent[a] = std::max<std::int64_t>(2, kmax - kmin + 1);
    origin[a] = spacing * static_cast<double>(kmin + extent[a] / 2);
  }
  return Grid(dim, extent, spacing, origin);
}

Index Grid::center_index() const noexcept { return {extent_[0] / 2, extent_[1] / 2, extent_[2] / 2}; }

bool Grid::contains(const Index& k) const noexcept {
  for (int a = 0; a < 3; ++a)
    if (k[a] < 0 || k[a] >= extent_[a]) return false;
  return true;
}

Index Grid::unravel(std::size_t linear) const noexcept {
  Index k{0, 0, 0};
  k[0] = static_cast<std::int64_t>(linear / strides_[0]);
  linear %= strides_[0];
  k[1] = static_cast<std::int64_t>(linear / strides_[1]);
  k[2] = static_cast<std::int64_t>(linear % strides_[1]);
  return k;
}

double Grid::coordinate(int axis, std::int64_t k) const noexcept {
  return origin_[axis] + spacing_ * static_cast<double>(k - extent_[axis] / 2);
}

Point Grid::position(const Index& k) const noexcept {
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = coordinate(a, k[a]);
  return p;
}

Index Grid::nearest(const Point& p) const noexcept {
  Index k{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    k[a] = static_cast<std::int64_t>(std::llround((p[a] - origin_[a]) / spacing_)) + extent_[a] / 2;
  return k;
}

Grid Grid::sub_grid(const Index& lo, const Index& hi) const {
  Index extent{1, 1, 1};
  Point origin{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    extent[a] = hi[a] - lo[a];
    origin[a] = coordinate(a, lo[a] + extent[a] / 2);
  }
  return Grid(dim_, extent, spacing_, origin);
}

bool Grid::same_geometry(const Grid& other) const noexcept {
  if (dim_ != other.dim_ || extent_ != other.extent_) return false;
  if (std::abs(spacing_ - other.spacing_) > kAlignTol * spacing_) return false;
  for (int a = 0; a < dim_; ++a)
    if (std::abs(origin_[a] - other.origin_[a]) > kAlignTol * spacing_) return false;
  return true;
}

bool CellRange::empty(int dim) const noexcept {
  for (int a = 0; a < dim; ++a)
    if (lo[a] >= hi[a]) return true;
  return false;
}

std::size_t CellRange::count(int dim) const noexcept {
  if (empty(dim)) return 0;
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(hi[a] - lo[a]);
  return n;
}

CellRange cells_in_box(const Grid& grid, const Box& box) noexcept {
  CellRange r;
  const double h = grid.spacing();
  for (int a = 0; a < grid.dim(); ++a) {
    const double shift = static_cast<double>(grid.extent(a) / 2);
    const double first = (box.center[a] - box.half - grid.origin()[a]) / h + shift;
    const double last = (box.center[a] + box.half - grid.origin()[a]) / h + shift;
    r.lo[a] = static_cast<std::int64_t>(std::ceil(first - kAlignTol));
    r.hi[a] = static_cast<std::int64_t>(std::floor(last + kAlignTol)) + 1;
  }
  return r;
}

bool range_inside(const Grid& grid, const CellRange& range) noexcept {
  for (int a = 0; a < grid.dim(); ++a)
    if (range.lo[a] < 0 || range.hi[a] > grid.extent(a) || range.lo[a] >= range.hi[a]) return false;
  return true;
}

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::white_noise: return "white-noise";
    case FieldKind::smooth: return "smooth";
    case FieldKind::block_constant: return "block-constant";
  }
  return "smooth";
}

FieldKind field_kind_from_string(std::string_view name) {
  if (name == "white-noise") return FieldKind::white_noise;
  if (name == "smooth") return FieldKind::smooth;
  if (name == "block-constant") return FieldKind::block_constant;
  throw ValidationError("kind", "unknown field kind '" + std::string(name) + "'");
}

GridField::GridField(Grid grid, std::vector<double> values, FieldKind kind, std::int64_t block_cells)
    : grid_(std::move(grid)), values_(std::move(values)), kind_(kind), block_cells_(block_cells) {
  if (values_.size() != grid_.size())
    throw ValidationError("values", "length " + std::to_string(values_.size()) + " does not match grid size " +
                                        std::to_string(grid_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("values", "field values must be finite");
  if (block_cells_ < 1) throw ValidationError("block_cells", "must be at least 1");
}

GridField GridField::negated() const {
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -values_[i];
  return GridField(grid_, std::move(out), kind_, block_cells_);
}

GridField GridField::crop(const CellRange& range) const {
  if (!range_inside(grid_, range)) throw ValidationError("range", "crop range outside grid");
  const Grid sub = grid_.sub_grid(range.lo, range.hi);
  std::vector<double> out;
  out.reserve(sub.size());
  for (std::int64_t i = range.lo[0]; i < range.hi[0]; ++i)
    for (std::int64_t j = range.lo[1]; j < range.hi[1]; ++j)
      for (std::int64_t k = range.lo[2]; k < range.hi[2]; ++k) out.push_back(values_[grid_.linear({i, j, k})]);
  return GridField(sub, std::move(out), kind_, block_cells_);
}

}  // namespace gaussperc
