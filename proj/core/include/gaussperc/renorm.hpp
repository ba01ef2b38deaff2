#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaussperc/excursion.hpp"
#include "gaussperc/field.hpp"
#include "gaussperc/grid.hpp"
#include "gaussperc/stats.hpp"

namespace gaussperc::renorm {

enum class Provenance { field_derived, bernoulli };

std::string_view to_string(Provenance provenance);

/// Parameters of the block event behind a field-derived configuration.
/// `r` and `eps` are absent when the field was not truncated or discretized.
struct EventParams {
  double level = 0.0;
  double kappa = 0.25;
  std::optional<double> r;
  std::optional<double> eps;
};

/// {0,1} configuration on a site lattice. Site k has box B_k of half-side R
/// centered at sites().position(k); the site spacing is R/10.
class SiteConfiguration {
 public:
  /// Bernoulli(p) sites; site j is open iff uniform_at(rng, site_counter(k)) < p,
  /// so configurations at different p built from one rng are coupled.
  static SiteConfiguration bernoulli(const Grid& sites, double R, double p, RngState rng);
  static SiteConfiguration field_derived(const Grid& sites, double R, std::vector<std::uint8_t> omega,
                                         const EventParams& params);
  /// Explicit configuration, recorded as bernoulli with p unset.
  static SiteConfiguration from_omega(const Grid& sites, double R, std::vector<std::uint8_t> omega);

  const Grid& sites() const noexcept { return sites_; }
  int dim() const noexcept { return sites_.dim(); }
  double R() const noexcept { return R_; }
  double site_spacing() const noexcept { return sites_.spacing(); }
  Provenance provenance() const noexcept { return provenance_; }
  const std::optional<double>& p() const noexcept { return p_; }
  const std::optional<EventParams>& params() const noexcept { return params_; }

  std::span<const std::uint8_t> omega() const noexcept { return omega_; }
  bool open(std::size_t site) const noexcept { return omega_[site] != 0; }
  bool open(const Index& k) const noexcept { return omega_[sites_.linear(k)] != 0; }
  std::size_t open_count() const noexcept;

  BoxSpec box(const Index& k) const;

  /// Same geometry with site `site` set to `value`.
  SiteConfiguration with_site(std::size_t site, bool value) const;

  nlohmann::ordered_json to_json() const;
  static SiteConfiguration from_json(const nlohmann::json& j);

 private:
  SiteConfiguration(Grid sites, double R) : sites_(std::move(sites)), R_(R) {}

  Grid sites_;
  double R_;
  std::vector<std::uint8_t> omega_;
  Provenance provenance_ = Provenance::bernoulli;
  std::optional<double> p_;
  std::optional<EventParams> params_;
};

/// Counter for site k of the infinite lattice: 32 bits per axis in d = 2,
/// 21 bits per axis in d = 3 (coordinates in [-2^20, 2^20)).
std::uint64_t site_counter(const Index& k);

/// Site lattice with spacing R/10, `extent` sites per axis, centered at `origin`.
Grid site_lattice(int dim, const Index& extent, double R, Point origin = {0.0, 0.0, 0.0});

/// Smallest field grid, spacing h, containing every enlarged box B~_k.
Grid site_domain(const Grid& sites, double R, double kappa, double spacing);

struct CoarseGrainSpec {
  double R = 5.0;
  double level = 0.5;
  double kappa = 0.25;
  Index extent{8, 8, 1};
  Point origin{0.0, 0.0, 0.0};
};

/// omega_k = 1 iff the sampled field satisfies local uniqueness A(R, level,
/// kappa) in box B_k. Truncation and eps are taken from the sampler.
SiteConfiguration coarse_grain(const FieldSampler& sampler, const CoarseGrainSpec& spec, RngState rng);
SiteConfiguration coarse_grain(const GridField& field, const CoarseGrainSpec& spec);

/// ceil((2 R (1 + kappa) + r) / (R / 10)).
std::int64_t dependence_range_sites(double r, double R, double kappa);

/// min(1, 4 (1 - p)^{1 / (2M + 1)^d}).
double lss_alpha(double p, std::int64_t M, int dim);
/// The same bound taking 1 - p directly, for p too close to 1 for a double.
double lss_alpha_closed(double one_minus_p, std::int64_t M, int dim);

using SiteEvent = std::function<bool(const SiteConfiguration&)>;

/// Some face-connected open path joins the two faces normal to `axis`.
SiteEvent crossing_event(int axis = 0);
/// Site `k` is open.
SiteEvent site_open_event(const Index& k);
SiteEvent constant_event(bool value);

struct DominationOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t monotonicity_checks = 200;
  double z = 3.0;  // slack in pooled standard errors
};

struct DominationReport {
  double p_hat = 0.0;
  std::int64_t M = 0;
  double alpha = 0.0;
  double q = 0.0;
  std::size_t trials = 0;
  std::size_t mu_successes = 0;
  std::size_t pi_successes = 0;
  double p_mu = 0.0;
  double p_pi = 0.0;
  stats::Interval wilson_mu;
  stats::Interval wilson_pi;
  double pooled_se = 0.0;
  bool holds = false;  // p_mu >= p_pi - z * pooled_se
};

/// Compares P(event) under field-derived configurations from `mu(trial)`
/// with Bernoulli(1 - alpha) configurations of the same geometry. When
/// `p_hat` is absent it is the mean site occupancy of the mu samples.
/// Throws ValidationError("event") if a random single-site 0 -> 1 flip ever
/// turns the event from true to false.
DominationReport domination_probe(const std::function<SiteConfiguration(std::size_t)>& mu, const SiteEvent& event,
                                  std::optional<double> p_hat, std::int64_t M, std::size_t trials,
                                  const DominationOptions& options = {});

/// |star-connected closed cluster at `site`|, 0 when the site is open.
std::size_t closed_cluster_size(const SiteConfiguration& config, const Index& site);

struct TailResult {
  std::vector<std::int64_t> n;
  std::vector<double> frequency;  // P(|C_0| > n)
  std::vector<std::size_t> counts;
  std::size_t trials = 0;
  /// -slope of log frequency against n over the entries with n >= 0 and
  /// nonzero frequency; NaN below two usable points.
  double rate = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
};

struct TailOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Closed-cluster tail at the origin of Bernoulli(p) on Z^d, explored lazily
/// and capped at max(n) + 1 sites.
TailResult closed_cluster_tail(double p, int dim, std::span<const std::int64_t> n, std::size_t trials,
                               const TailOptions& options = {});
/// Same statistic from sampled configurations at site `site`.
TailResult closed_cluster_tail(const std::function<SiteConfiguration(std::size_t)>& sampler, const Index& site,
                               std::span<const std::int64_t> n, std::size_t trials, unsigned threads = 1);

struct GlobalStructure {
  std::vector<std::size_t> sites;  // linear site indices, increasing
  std::size_t size = 0;
  std::int64_t dist0 = 0;  // l1 lattice distance
  std::int64_t distx = 0;
  bool connected = false;
};

struct StructureParams {
  double C0 = 9.0;
  double delta = 0.5;
};

struct StructureOutcome {
  std::optional<GlobalStructure> structure;
  std::string violated;  // first failed condition when absent
};

/// log^{1+delta}(N) with N the l1 norm; 0 for N <= 1.
double structure_distance_bound(std::int64_t N, double delta);

/// Sites on the axis-by-axis lattice path from a to b (axis 0 first).
std::vector<Index> lattice_path(const Index& a, const Index& b, int dim);

/// Constructive search for a global structure around sites a and b. Sites
/// outside the configuration count as open.
StructureOutcome global_structure(const SiteConfiguration& config, const Index& a, const Index& b,
                                  const StructureParams& params = {});

/// Re-checks the five conditions on a site set: "open", "size",
/// "connected", "dist0", "distx". Returns the first one violated.
std::optional<std::string> check_structure(const SiteConfiguration& config, const Index& a, const Index& b,
                                           std::span<const std::size_t> sites, const StructureParams& params = {});

/// Window margin for the scan: ceil(log^{1+delta} N) + 2 sites.
std::int64_t structure_margin(std::int64_t N, double delta);

struct ScanRow {
  double p = 0.0;
  std::int64_t x_norm = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double wilson_low = 0.0;
  double wilson_high = 1.0;
};

struct ScanOptions {
  int dim = 2;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Success frequency of global_structure for 0 and x = (N, 0, ...), per
/// (p, N). Trial t uses the same uniforms for every p and N.
std::vector<ScanRow> structure_probability_scan(std::span<const double> ps, std::span<const std::int64_t> x_norms,
                                                const StructureParams& params, std::size_t trials,
                                                const ScanOptions& options = {});

}  // namespace gaussperc::renorm
