#include "gaussperc/diameter.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gaussperc {
namespace {

using P = std::array<std::int64_t, 3>;

std::int64_t dist2(const P& a, const P& b) {
  std::int64_t s = 0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::int64_t cross(const P& o, const P& a, const P& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Any convex-hull vertex is extreme on the axis-(d-1) line through it, so the
// first and last cell of every such line is a superset of the hull vertices.
std::vector<P> line_extremes(const Grid& grid, std::span<const std::size_t> cells) {
  std::vector<P> out;
  const std::size_t line_stride = grid.dim() == 2 ? grid.strides()[0] : grid.strides()[1];
  std::size_t i = 0;
  while (i < cells.size()) {
    const std::size_t key = cells[i] / line_stride;
    std::size_t j = i;
    while (j + 1 < cells.size() && cells[j + 1] / line_stride == key) ++j;
    out.push_back(grid.unravel(cells[i]));
    if (j != i) out.push_back(grid.unravel(cells[j]));
    i = j + 1;
  }
  return out;
}

std::int64_t max_pairwise(std::span<const P> pts) {
  std::int64_t best = 0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) best = std::max(best, dist2(pts[a], pts[b]));
  return best;
}

std::int64_t hull_diameter2(std::vector<P> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return max_pairwise(pts);
  std::vector<P> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return max_pairwise(hull);
}

}  // namespace

Diameter euclidean_diameter(const Grid& grid, std::span<const std::size_t> cells) {
  if (cells.size() <= 1) return {0.0, 0.0};
  const double h = grid.spacing();
  std::vector<P> cand = line_extremes(grid, cells);
  if (grid.dim() == 2) {
    const double d = h * std::sqrt(static_cast<double>(hull_diameter2(std::move(cand))));
    return {d, d};
  }
  if (cand.size() <= kExactDiameterCandidates) {
    const double d = h * std::sqrt(static_cast<double>(max_pairwise(cand)));
    return {d, d};
  }
  // Bracket: strided subsample below, bounding-box diagonal above.
  std::vector<P> sample;
  const std::size_t stride = (cand.size() + kExactDiameterCandidates - 1) / kExactDiameterCandidates;
  for (std::size_t i = 0; i < cand.size(); i += stride) sample.push_back(cand[i]);
  sample.push_back(cand.back());
  P lo = cand.front(), hi = cand.front();
  for (const P& p : cand)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  const double lower = h * std::sqrt(static_cast<double>(max_pairwise(sample)));
  const double upper = h * std::sqrt(static_cast<double>(dist2(lo, hi)));
  return {lower, std::max(lower, upper)};
}

double exact_euclidean_diameter(const Grid& grid, std::span<const std::size_t> cells) {
  if (cells.size() <= 1) return 0.0;
  std::vector<P> cand = line_extremes(grid, cells);
  const std::int64_t d2 = grid.dim() == 2 ? hull_diameter2(std::move(cand)) : max_pairwise(cand);
  return grid.spacing() * std::sqrt(static_cast<double>(d2));
}

}  // namespace gaussperc
