#pragma once

#include <cstddef>
#include <span>

#include "gaussperc/grid.hpp"

namespace gaussperc {

/// Euclidean diameter bracket of a cell set (cell centers, physical units).
/// lower == upper when the value is exact.
struct Diameter {
  double lower = 0.0;
  double upper = 0.0;

  bool exact() const noexcept { return lower == upper; }
};

/// Candidate-point limit above which 3-d diameters are bracketed instead of
/// computed exactly.
inline constexpr std::size_t kExactDiameterCandidates = 4000;

/// Diameter of the cells listed in `cells` (linear indices in increasing
/// order). Exact in 2-d via the convex hull; in 3-d exact up to
/// kExactDiameterCandidates line-extreme points, bracketed beyond.
Diameter euclidean_diameter(const Grid& grid, std::span<const std::size_t> cells);

/// Always-exact diameter (quadratic in the line-extreme points).
double exact_euclidean_diameter(const Grid& grid, std::span<const std::size_t> cells);

}  // namespace gaussperc
