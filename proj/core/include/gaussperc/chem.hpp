#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "gaussperc/excursion.hpp"
#include "gaussperc/field.hpp"

namespace gaussperc::chem {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class PathStatus { connected, disconnected, endpoint_outside };

std::string_view to_string(PathStatus status);

/// Chemical-distance answer. `length` is in physical units and is +inf
/// unless connected; `path` lists linear cell indices from a to b.
struct PathResult {
  PathStatus status = PathStatus::disconnected;
  double length = kInfinity;
  std::vector<std::size_t> path;
};

/// Shortest face-adjacent path inside the occupied cells, edge weight h.
/// This is the grid geodesic: an upper bound on the continuum chemical
/// distance, within a factor sqrt(d).
PathResult chemical_distance(const ExcursionSet& set, const Index& a, const Index& b);

struct ChemDiameter {
  double value = 0.0;
  bool exact = true;  // false: double-sweep lower bound
};

/// Components up to this many cells get exact all-pairs sweeps.
inline constexpr std::size_t kExactChemDiameterCells = 2000;

/// sup of chemical distances between cells of component `id`.
ChemDiameter chemical_diameter(const ExcursionSet& set, std::int32_t id);

/// max over components C of set ∩ B_s(center) of the chemical diameter of C
/// measured inside the whole set (paths may leave B_s). 0 when empty.
ChemDiameter chemical_S(const ExcursionSet& set, double s, const Point& center);

struct TailProbe {
  std::vector<double> thresholds;
  std::vector<double> frequencies;
  std::vector<double> samples;  // S per trial
  bool all_exact = true;
  /// -slope of log(frequency) vs log(threshold) over positive entries; NaN
  /// when fewer than two usable points.
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  double fit_r_squared = std::numeric_limits<double>::quiet_NaN();
};

struct TailOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Empirical P(S(s, E_l(f)) >= t) for each threshold t, B_s centered on the
/// sampler grid's origin.
TailProbe S_tail_probe(const FieldSampler& sampler, double level, double s, std::span<const double> thresholds,
                       std::size_t trials, const TailOptions& options);

/// (1 + delta)(d - 1)(1/2 + 1/(2 beta - d)); beta = +inf gives the Gaussian limit.
double kappa_exponent(int dim, double beta, double delta);

/// log(x)^kappa, the stretch threshold of the scaling experiment.
double stretch_threshold(double x_norm, double kappa);

/// Renormalization scale log(x)^{(1+delta)/(2 beta - d)} clamped below at 4h.
struct ScheduleScale {
  double value = 0.0;
  double formula = 0.0;
  bool clamped = false;
};

ScheduleScale schedule_scale(double x_norm, double delta, double beta, int dim, double spacing);

struct StretchConfig {
  Kernel kernel = make_kernel(KernelKind::bargmann_fock, 2);
  double spacing = 0.25;
  std::vector<double> levels{0.5};
  std::vector<double> distances{25.0, 50.0, 100.0};
  std::size_t connected_target = 200;
  std::size_t max_trials = 2000;
  double delta = 0.5;
  double beta = kInfinity;  // exponent used for kappa; kernel.beta() by default
  double margin_fraction = 0.25;
  double min_margin = 5.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  ResourceBudget budget{};
};

struct StretchRecord {
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  double level = 0.0;
  double x_norm = 0.0;
  bool connected = false;
  double d_chem = kInfinity;
  double stretch = kInfinity;
  double kappa_target = 0.0;  // log(x)^kappa
};

struct StretchSummary {
  double level = 0.0;
  double x_norm = 0.0;
  std::size_t trials = 0;
  std::size_t connected = 0;
  std::size_t exceed = 0;  // connected and stretch > kappa_target
  double kappa = 0.0;
  double kappa_target = 0.0;
  double median_stretch = kInfinity;
  double q10_stretch = kInfinity;
  double q90_stretch = kInfinity;
  double max_stretch = kInfinity;
  ScheduleScale schedule;

  double exceed_given_connected() const noexcept {
    return connected ? static_cast<double>(exceed) / static_cast<double>(connected) : 0.0;
  }
  double exceed_unconditional() const noexcept {
    return trials ? static_cast<double>(exceed) / static_cast<double>(trials) : 0.0;
  }
};

struct StretchResult {
  std::vector<StretchRecord> records;  // ordered by (distance, trial, level)
  std::vector<StretchSummary> summaries;
};

/// Samples fields on a domain containing 0 and x = (|x|, 0, ...) with
/// margin, and records d_chem(0, x) per level. Trials continue until every
/// level has `connected_target` connected trials or `max_trials` is reached.
StretchResult stretch_experiment(const StretchConfig& config);

}  // namespace gaussperc::chem
