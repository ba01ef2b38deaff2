#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "gaussperc/diameter.hpp"
#include "gaussperc/field.hpp"
#include "gaussperc/grid.hpp"

namespace gaussperc {

/// face: 2d neighbours (||.||_1 = 1); star: 3^d - 1 neighbours (||.||_inf = 1).
enum class Adjacency { face, star };

std::string_view to_string(Adjacency adjacency);

/// Offsets of all neighbours under `adjacency` in dimension `dim`.
std::vector<Index> neighbour_offsets(int dim, Adjacency adjacency);

struct Component {
  std::size_t cells = 0;
  Index lo{0, 0, 0};  // inclusive bounding box, cell indices
  Index hi{0, 0, 0};
  Diameter diameter;
};

/// Binary occupancy on a grid plus its connected components.
///
/// Labels are 0..n-1 in order of each component's first cell in linear
/// order; unoccupied cells carry label -1.
class ExcursionSet {
 public:
  static constexpr std::int32_t kEmpty = -1;

  static ExcursionSet from_mask(const Grid& grid, std::vector<std::uint8_t> occupied, double level,
                                Adjacency adjacency);

  const Grid& grid() const noexcept { return grid_; }
  double level() const noexcept { return level_; }
  Adjacency adjacency() const noexcept { return adjacency_; }

  bool occupied(std::size_t cell) const noexcept { return occupied_[cell] != 0; }
  std::span<const std::uint8_t> occupancy() const noexcept { return occupied_; }
  std::int32_t label(std::size_t cell) const noexcept { return labels_[cell]; }
  std::span<const std::int32_t> labels() const noexcept { return labels_; }

  std::size_t component_count() const noexcept { return components_.size(); }
  const std::vector<Component>& components() const noexcept { return components_; }
  /// Linear indices of the cells of component `id`, increasing.
  std::span<const std::size_t> cells_of(std::int32_t id) const noexcept;

  /// Decides diameter >= threshold, resolving an undecided bracket exactly.
  bool diameter_at_least(std::int32_t id, double threshold) const;
  /// Largest diameter upper bound over all components (0 when empty).
  double max_diameter() const noexcept;

  /// Occupancy restricted to `range`, relabeled on the sub-grid.
  ExcursionSet crop(const CellRange& range) const;

 private:
  ExcursionSet(const Grid& grid) : grid_(grid) {}

  Grid grid_;
  double level_ = 0.0;
  Adjacency adjacency_ = Adjacency::face;
  std::vector<std::uint8_t> occupied_;
  std::vector<std::int32_t> labels_;
  std::vector<Component> components_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
};

/// {f >= -level} labeled under `adjacency`.
ExcursionSet excursion_set(const GridField& field, double level, Adjacency adjacency = Adjacency::face);

/// {f <= -level}, i.e. the excursion set of -f at level -level.
ExcursionSet lower_excursion_set(const GridField& field, double level, Adjacency adjacency = Adjacency::star);

/// B_R centered at `center` and its enlargement B_{R(1+kappa)}.
struct BoxSpec {
  Point center{0.0, 0.0, 0.0};
  double R = 2.0;
  double kappa = 0.25;

  Box inner() const noexcept { return {center, R}; }
  Box enlarged() const noexcept { return {center, R * (1.0 + kappa)}; }
  void validate() const;
};

/// Cell range of `box` on `grid`; throws ValidationError("box") if it
/// leaves the grid.
CellRange checked_range(const Grid& grid, const Box& box);

/// For every axis some single component of set ∩ B_R touches both faces.
bool exist_event(const ExcursionSet& set, const BoxSpec& box);
/// All components of set ∩ B_R with diameter >= kappa R lie in one
/// component of set ∩ B_{R(1+kappa)}.
bool unique_event(const ExcursionSet& set, const BoxSpec& box);
bool local_uniqueness(const ExcursionSet& set, const BoxSpec& box);
/// Every component of set ∩ B_{R(1+kappa)} has diameter < kappa R.
bool small_clusters_property(const ExcursionSet& set, const BoxSpec& box);

/// Some component of set ∩ B_R (box centered at `center`) meets both B_1
/// and the outer cell layer of B_R.
bool crosses_to_boundary(const ExcursionSet& set, const Point& center, double R);

enum class SignSet { above, below };  // {f >= -l} and {f <= -l}

std::string_view to_string(SignSet sign);

struct CrossingOptions {
  SignSet sign = SignSet::below;
  Adjacency adjacency = Adjacency::star;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Frequency of {B_1 <-> dB_R} per radius; one field per trial is shared by
/// all radii. The sampler's grid must contain B_R for every radius.
std::vector<double> crossing_probe(const FieldSampler& sampler, double level, std::span<const double> radii,
                                   std::size_t trials, const CrossingOptions& options);

struct DualityReport {
  bool antecedent = false;  // {f <= -l} (star) has the small clusters property
  bool consequent = false;  // {f >= -l} (face) has Exist and Unique
  bool violated = false;
};

DualityReport duality_check(const GridField& field, const BoxSpec& box, double level);

struct RegularityProbe {
  double lambda = 0.0;
  double k = 0.0;
  double certified_eps = 0.0;
  std::size_t near_level_cells = 0;
  bool degenerate = false;          // a near-level cell has zero gradient estimate
  bool k_not_above_lambda = false;  // formula inapplicable
};

/// lambda^2 / (4 k^2 d^{3/2}) when k > lambda > 0, else 0.
double certified_box_size(double lambda, double k, int dim);

RegularityProbe regularity_probe(const GridField& field, const Box& box, double level);

}  // namespace gaussperc
