#include "gaussperc/renorm.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "gaussperc/error.hpp"
#include "gaussperc/parallel.hpp"

namespace gaussperc::renorm {
namespace {

std::string encode_bits(std::span<const std::uint8_t> omega) {
  std::vector<unsigned char> packed((omega.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < omega.size(); ++i)
    if (omega[i]) packed[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  std::string out(4 * ((packed.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), packed.data(),
                                static_cast<int>(packed.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> decode_bits(const std::string& text, std::size_t count) {
  const std::size_t bytes = (count + 7) / 8;
  if (text.size() != 4 * ((bytes + 2) / 3)) throw ValidationError("omega", "bitmask length does not match extent");
  std::vector<unsigned char> packed(text.size() / 4 * 3 + 3, 0);
  if (EVP_DecodeBlock(packed.data(), reinterpret_cast<const unsigned char*>(text.data()),
                      static_cast<int>(text.size())) < 0)
    throw ValidationError("omega", "invalid base64");
  std::vector<std::uint8_t> omega(count);
  for (std::size_t i = 0; i < count; ++i) omega[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return omega;
}

Index offset(const Index& k, const Index& d) { return {k[0] + d[0], k[1] + d[1], k[2] + d[2]}; }
Index minus(const Index& k, const Index& d) { return {k[0] - d[0], k[1] - d[1], k[2] - d[2]}; }

std::int64_t l1(const Index& a, const Index& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

std::vector<std::uint8_t> bernoulli_mask(const Grid& sites, double p, RngState rng, const Index& anchor) {
  std::vector<std::uint8_t> omega(sites.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    omega[i] = uniform_at(rng, site_counter(minus(sites.unravel(i), anchor))) < p ? 1 : 0;
  return omega;
}

void fit_tail(TailResult& t) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.n.size(); ++i)
    if (t.n[i] >= 0 && t.frequency[i] > 0.0) {
      xs.push_back(static_cast<double>(t.n[i]));
      ys.push_back(std::log(t.frequency[i]));
    }
  if (xs.size() < 2) return;
  const auto fit = stats::linear_fit(xs, ys);
  t.rate = -fit.slope;
  t.r_squared = fit.r_squared;
}

void finish_tail(TailResult& t, std::span<const std::int64_t> n, const std::vector<std::size_t>& sizes) {
  t.n.assign(n.begin(), n.end());
  t.trials = sizes.size();
  for (std::int64_t m : n) {
    std::size_t c = 0;
    for (std::size_t s : sizes)
      if (static_cast<std::int64_t>(s) > m) ++c;
    t.counts.push_back(c);
    t.frequency.push_back(static_cast<double>(c) / static_cast<double>(sizes.size()));
  }
  fit_tail(t);
}

void validate_p(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(field, "must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::field_derived ? "field-derived" : "bernoulli";
}

std::uint64_t site_counter(const Index& k) {
  if (k[2] == 0 && k[0] >= INT32_MIN && k[0] <= INT32_MAX && k[1] >= INT32_MIN && k[1] <= INT32_MAX)
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k[0])) << 32) |
           static_cast<std::uint32_t>(k[1]);
  constexpr std::int64_t half = std::int64_t{1} << 20;
  std::uint64_t out = std::uint64_t{1} << 63;  // keeps 3D counters disjoint from 2D ones
  for (int a = 0; a < 3; ++a) {
    if (k[a] < -half || k[a] >= half) throw ValidationError("site", "site coordinate out of counter range");
    out |= static_cast<std::uint64_t>(k[a] + half) << (21 * (2 - a));
  }
  return out;
}

Grid site_lattice(int dim, const Index& extent, double R, Point origin) {
  if (!(R > 0.0) || !std::isfinite(R)) throw ValidationError("R", "must be finite and positive");
  return Grid(dim, extent, R / 10.0, origin);
}

Grid site_domain(const Grid& sites, double R, double kappa, double spacing) {
  const double reach = R * (1.0 + kappa);
  const Index last{sites.extent(0) - 1, sites.extent(1) - 1, sites.extent(2) - 1};
  Point lo = sites.position(Index{0, 0, 0});
  Point hi = sites.position(last);
  for (int a = 0; a < sites.dim(); ++a) {
    lo[a] -= reach;
    hi[a] += reach;
  }
  return Grid::covering(sites.dim(), lo, hi, spacing);
}

SiteConfiguration SiteConfiguration::bernoulli(const Grid& sites, double R, double p, RngState rng) {
  validate_p(p, "p");
  SiteConfiguration c(sites, R);
  c.omega_ = bernoulli_mask(sites, p, rng, {0, 0, 0});
  c.provenance_ = Provenance::bernoulli;
  c.p_ = p;
  return c;
}

SiteConfiguration SiteConfiguration::field_derived(const Grid& sites, double R, std::vector<std::uint8_t> omega,
                                                   const EventParams& params) {
  SiteConfiguration c = from_omega(sites, R, std::move(omega));
  c.provenance_ = Provenance::field_derived;
  c.params_ = params;
  return c;
}

SiteConfiguration SiteConfiguration::from_omega(const Grid& sites, double R, std::vector<std::uint8_t> omega) {
  if (omega.size() != sites.size()) throw ValidationError("omega", "length does not match the site lattice");
  if (!(R > 0.0)) throw ValidationError("R", "must be positive");
  SiteConfiguration c(sites, R);
  for (auto& w : omega) w = w ? 1 : 0;
  c.omega_ = std::move(omega);
  return c;
}

std::size_t SiteConfiguration::open_count() const noexcept {
  return static_cast<std::size_t>(std::count(omega_.begin(), omega_.end(), std::uint8_t{1}));
}

BoxSpec SiteConfiguration::box(const Index& k) const {
  const double kappa = params_ ? params_->kappa : 0.25;
  return BoxSpec{sites_.position(k), R_, kappa};
}

SiteConfiguration SiteConfiguration::with_site(std::size_t site, bool value) const {
  SiteConfiguration c = *this;
  c.omega_.at(site) = value ? 1 : 0;
  return c;
}

nlohmann::ordered_json SiteConfiguration::to_json() const {
  nlohmann::ordered_json j;
  j["dim"] = dim();
  j["extent"] = std::vector<std::int64_t>(sites_.extent().begin(), sites_.extent().begin() + dim());
  j["R"] = R_;
  j["site_spacing"] = site_spacing();
  j["origin"] = std::vector<double>(sites_.origin().begin(), sites_.origin().begin() + dim());
  j["provenance"] = std::string(to_string(provenance_));
  if (p_) j["p"] = *p_;
  if (params_) {
    nlohmann::ordered_json e;
    e["level"] = params_->level;
    e["kappa"] = params_->kappa;
    e["r"] = params_->r ? nlohmann::ordered_json(*params_->r) : nlohmann::ordered_json(nullptr);
    e["eps"] = params_->eps ? nlohmann::ordered_json(*params_->eps) : nlohmann::ordered_json(nullptr);
    j["event"] = e;
  }
  j["omega"] = encode_bits(omega_);
  return j;
}

SiteConfiguration SiteConfiguration::from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto ext = j.at("extent").get<std::vector<std::int64_t>>();
    const auto org = j.at("origin").get<std::vector<double>>();
    if (static_cast<int>(ext.size()) != dim || static_cast<int>(org.size()) != dim)
      throw ValidationError("extent", "extent and origin need one entry per axis");
    Index extent{1, 1, 1};
    Point origin{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      extent[a] = ext[static_cast<std::size_t>(a)];
      origin[a] = org[static_cast<std::size_t>(a)];
    }
    const double R = j.at("R").get<double>();
    const Grid sites = site_lattice(dim, extent, R, origin);
    SiteConfiguration c = from_omega(sites, R, decode_bits(j.at("omega").get<std::string>(), sites.size()));
    const auto prov = j.at("provenance").get<std::string>();
    if (prov == "field-derived") {
      c.provenance_ = Provenance::field_derived;
    } else if (prov != "bernoulli") {
      throw ValidationError("provenance", "unknown provenance '" + prov + "'");
    }
    if (j.contains("p")) c.p_ = j.at("p").get<double>();
    if (j.contains("event")) {
      const auto& e = j.at("event");
      EventParams params;
      params.level = e.at("level").get<double>();
      params.kappa = e.at("kappa").get<double>();
      if (!e.at("r").is_null()) params.r = e.at("r").get<double>();
      if (!e.at("eps").is_null()) params.eps = e.at("eps").get<double>();
      c.params_ = params;
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("site_configuration", e.what());
  }
}

namespace {

SiteConfiguration coarse_grain_impl(const GridField& field, const CoarseGrainSpec& spec, EventParams params) {
  const int dim = field.grid().dim();
  BoxSpec{Point{}, spec.R, spec.kappa}.validate();
  const Grid sites = site_lattice(dim, spec.extent, spec.R, spec.origin);
  const Index last{sites.extent(0) - 1, sites.extent(1) - 1, sites.extent(2) - 1};
  for (const Index& corner : {Index{0, 0, 0}, last}) {
    const Box big{sites.position(corner), spec.R * (1.0 + spec.kappa)};
    if (!range_inside(field.grid(), cells_in_box(field.grid(), big)))
      throw ValidationError("geometry", "enlarged site boxes exceed the sampled domain");
  }
  const ExcursionSet set = excursion_set(field, spec.level, Adjacency::face);
  std::vector<std::uint8_t> omega(sites.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    omega[i] = local_uniqueness(set, BoxSpec{sites.position(i), spec.R, spec.kappa}) ? 1 : 0;
  params.level = spec.level;
  params.kappa = spec.kappa;
  return SiteConfiguration::field_derived(sites, spec.R, std::move(omega), params);
}

}  // namespace

SiteConfiguration coarse_grain(const FieldSampler& sampler, const CoarseGrainSpec& spec, RngState rng) {
  EventParams params;
  params.r = sampler.kernel().truncation();
  params.eps = sampler.eps();
  return coarse_grain_impl(sampler.sample(rng), spec, params);
}

SiteConfiguration coarse_grain(const GridField& field, const CoarseGrainSpec& spec) {
  EventParams params;
  if (field.kind() == FieldKind::block_constant)
    params.eps = static_cast<double>(field.block_cells()) * field.grid().spacing();
  return coarse_grain_impl(field, spec, params);
}

std::int64_t dependence_range_sites(double r, double R, double kappa) {
  if (!(R > 0.0)) throw ValidationError("R", "must be positive");
  if (!(r >= 0.0)) throw ValidationError("r", "must be nonnegative");
  if (!(kappa >= 0.0)) throw ValidationError("kappa", "must be nonnegative");
  // Multiplying through by 10/R keeps exact cases such as r = R exact.
  const double v = 10.0 * (2.0 * R * (1.0 + kappa) + r) / R;
  return static_cast<std::int64_t>(std::ceil(v - 1e-9 * v));
}

double lss_alpha_closed(double one_minus_p, std::int64_t M, int dim) {
  validate_p(one_minus_p, "p");
  if (M < 0) throw ValidationError("M", "must be nonnegative");
  if (dim < 1) throw ValidationError("dim", "must be at least 1");
  if (one_minus_p == 0.0) return 0.0;
  const double block = std::pow(2.0 * static_cast<double>(M) + 1.0, dim);
  return std::min(1.0, 4.0 * std::pow(one_minus_p, 1.0 / block));
}

double lss_alpha(double p, std::int64_t M, int dim) {
  validate_p(p, "p");
  return lss_alpha_closed(1.0 - p, M, dim);
}

SiteEvent crossing_event(int axis) {
  return [axis](const SiteConfiguration& c) {
    const Grid& g = c.sites();
    if (axis < 0 || axis >= g.dim()) throw ValidationError("axis", "crossing axis out of range");
    const auto omega = c.omega();
    const ExcursionSet set =
        ExcursionSet::from_mask(g, std::vector<std::uint8_t>(omega.begin(), omega.end()), 0.0, Adjacency::face);
    std::vector<std::uint8_t> touch(set.component_count(), 0);
    const std::int64_t last = g.extent(axis) - 1;
    for (std::size_t s = 0; s < g.size(); ++s) {
      const std::int32_t lab = set.label(s);
      if (lab == ExcursionSet::kEmpty) continue;
      const std::int64_t pos = g.unravel(s)[axis];
      auto& t = touch[static_cast<std::size_t>(lab)];
      if (pos == 0) t |= 1;
      if (pos == last) t |= 2;
      if (t == 3) return true;
    }
    return false;
  };
}

SiteEvent site_open_event(const Index& k) {
  return [k](const SiteConfiguration& c) {
    if (!c.sites().contains(k)) throw ValidationError("site", "event site outside the configuration");
    return c.open(k);
  };
}

SiteEvent constant_event(bool value) {
  return [value](const SiteConfiguration&) { return value; };
}

DominationReport domination_probe(const std::function<SiteConfiguration(std::size_t)>& mu, const SiteEvent& event,
                                  std::optional<double> p_hat, std::int64_t M, std::size_t trials,
                                  const DominationOptions& options) {
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  std::vector<std::optional<SiteConfiguration>> samples(trials);
  parallel_for(trials, options.threads, [&](std::size_t t) { samples[t] = mu(t); });
  const SiteConfiguration& first = *samples.front();
  for (const auto& s : samples)
    if (!s->sites().same_geometry(first.sites())) throw ValidationError("mu", "samples differ in geometry");

  // Spot-check that the event is increasing on random configurations.
  for (std::size_t c = 0; c < options.monotonicity_checks; ++c) {
    Philox4x32 rng({options.seed, stream_id(StreamTag::property, c)});
    const double p = rng.uniform();
    const SiteConfiguration base = SiteConfiguration::bernoulli(
        first.sites(), first.R(), p, {options.seed, stream_id(StreamTag::property, (std::uint64_t{1} << 40) + c)});
    std::vector<std::size_t> closed;
    for (std::size_t s = 0; s < base.sites().size(); ++s)
      if (!base.open(s)) closed.push_back(s);
    if (closed.empty()) continue;
    const std::size_t flip = closed[static_cast<std::size_t>(rng.uniform() * static_cast<double>(closed.size()))];
    if (event(base) && !event(base.with_site(flip, true)))
      throw ValidationError("event", "event is not increasing: opening a site made it false");
  }

  DominationReport r;
  r.trials = trials;
  r.M = M;
  if (p_hat) {
    validate_p(*p_hat, "p_hat");
    r.p_hat = *p_hat;
  } else {
    std::size_t open = 0, total = 0;
    for (const auto& s : samples) {
      open += s->open_count();
      total += s->sites().size();
    }
    r.p_hat = static_cast<double>(open) / static_cast<double>(total);
  }
  r.alpha = lss_alpha(r.p_hat, M, first.dim());
  r.q = 1.0 - r.alpha;

  std::vector<std::uint8_t> mu_hit(trials), pi_hit(trials);
  parallel_for(trials, options.threads, [&](std::size_t t) {
    mu_hit[t] = event(*samples[t]) ? 1 : 0;
    const auto pi = SiteConfiguration::bernoulli(first.sites(), first.R(), r.q,
                                                 {options.seed, stream_id(StreamTag::bernoulli, t)});
    pi_hit[t] = event(pi) ? 1 : 0;
  });
  r.mu_successes = static_cast<std::size_t>(std::count(mu_hit.begin(), mu_hit.end(), 1));
  r.pi_successes = static_cast<std::size_t>(std::count(pi_hit.begin(), pi_hit.end(), 1));
  const auto n = static_cast<double>(trials);
  r.p_mu = static_cast<double>(r.mu_successes) / n;
  r.p_pi = static_cast<double>(r.pi_successes) / n;
  r.wilson_mu = stats::wilson(r.mu_successes, trials);
  r.wilson_pi = stats::wilson(r.pi_successes, trials);
  const double pooled = (r.p_mu + r.p_pi) / 2.0;
  r.pooled_se = std::sqrt(pooled * (1.0 - pooled) * 2.0 / n);
  r.holds = r.p_mu >= r.p_pi - options.z * r.pooled_se;
  return r;
}

std::size_t closed_cluster_size(const SiteConfiguration& config, const Index& site) {
  const Grid& g = config.sites();
  if (!g.contains(site)) throw ValidationError("site", "site outside the configuration");
  if (config.open(site)) return 0;
  const auto offsets = neighbour_offsets(g.dim(), Adjacency::star);
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::vector<Index> stack{site};
  seen[g.linear(site)] = 1;
  std::size_t size = 0;
  while (!stack.empty()) {
    const Index k = stack.back();
    stack.pop_back();
    ++size;
    for (const Index& d : offsets) {
      const Index nb = offset(k, d);
      if (!g.contains(nb)) continue;
      const std::size_t l = g.linear(nb);
      if (seen[l] || config.open(l)) continue;
      seen[l] = 1;
      stack.push_back(nb);
    }
  }
  return size;
}

TailResult closed_cluster_tail(double p, int dim, std::span<const std::int64_t> n, std::size_t trials,
                               const TailOptions& options) {
  validate_p(p, "p");
  if (dim != 2 && dim != 3) throw ValidationError("dim", "must be 2 or 3");
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  if (!(p > 1.0 - std::pow(3.0, -dim)))
    spdlog::warn("closed_cluster_tail: p = {} is outside the Peierls regime p > 1 - 3^-d", p);
  std::int64_t nmax = -1;
  for (std::int64_t m : n) nmax = std::max(nmax, m);
  const std::size_t cap = static_cast<std::size_t>(std::max<std::int64_t>(nmax + 1, 0));
  const auto offsets = neighbour_offsets(dim, Adjacency::star);

  std::vector<std::size_t> sizes(trials, 0);
  parallel_for(trials, options.threads, [&](std::size_t t) {
    const RngState rng{options.seed, stream_id(StreamTag::bernoulli, t)};
    auto closed = [&](const Index& k) { return uniform_at(rng, site_counter(k)) >= p; };
    const Index origin{0, 0, 0};
    if (cap == 0 || !closed(origin)) return;
    std::unordered_set<std::uint64_t> seen{site_counter(origin)};
    std::vector<Index> stack{origin};
    std::size_t size = 0;
    while (!stack.empty() && size < cap) {
      const Index k = stack.back();
      stack.pop_back();
      ++size;
      for (const Index& d : offsets) {
        const Index nb = offset(k, d);
        if (!seen.insert(site_counter(nb)).second) continue;
        if (closed(nb)) stack.push_back(nb);
      }
    }
    sizes[t] = size;
  });
  TailResult out;
  finish_tail(out, n, sizes);
  return out;
}

TailResult closed_cluster_tail(const std::function<SiteConfiguration(std::size_t)>& sampler, const Index& site,
                               std::span<const std::int64_t> n, std::size_t trials, unsigned threads) {
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  std::vector<std::size_t> sizes(trials, 0);
  parallel_for(trials, threads, [&](std::size_t t) { sizes[t] = closed_cluster_size(sampler(t), site); });
  TailResult out;
  finish_tail(out, n, sizes);
  return out;
}

double structure_distance_bound(std::int64_t N, double delta) {
  if (N <= 1) return 0.0;
  return std::pow(std::log(static_cast<double>(N)), 1.0 + delta);
}

std::int64_t structure_margin(std::int64_t N, double delta) {
  return static_cast<std::int64_t>(std::ceil(structure_distance_bound(N, delta))) + 2;
}

std::vector<Index> lattice_path(const Index& a, const Index& b, int dim) {
  std::vector<Index> path{a};
  Index k = a;
  for (int axis = 0; axis < dim; ++axis) {
    const std::int64_t step = b[axis] > k[axis] ? 1 : -1;
    while (k[axis] != b[axis]) {
      k[axis] += step;
      path.push_back(k);
    }
  }
  return path;
}

std::optional<std::string> check_structure(const SiteConfiguration& config, const Index& a, const Index& b,
                                           std::span<const std::size_t> sites, const StructureParams& params) {
  const Grid& g = config.sites();
  if (sites.empty()) return "open";
  for (std::size_t s : sites)
    if (s >= g.size() || !config.open(s)) return "open";
  const std::int64_t N = l1(a, b);
  if (static_cast<double>(sites.size()) > params.C0 * static_cast<double>(N)) return "size";

  std::vector<std::size_t> sorted(sites.begin(), sites.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto member = [&](const Index& k) {
    return g.contains(k) && std::binary_search(sorted.begin(), sorted.end(), g.linear(k));
  };
  std::vector<std::uint8_t> reached(sorted.size(), 0);
  std::vector<std::size_t> stack{0};
  reached[0] = 1;
  std::size_t count = 0;
  while (!stack.empty()) {
    const Index k = g.unravel(sorted[stack.back()]);
    stack.pop_back();
    ++count;
    for (const Index& d : neighbour_offsets(g.dim(), Adjacency::face)) {
      const Index nb = offset(k, d);
      if (!member(nb)) continue;
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(sorted.begin(), sorted.end(), g.linear(nb)) - sorted.begin());
      if (reached[pos]) continue;
      reached[pos] = 1;
      stack.push_back(pos);
    }
  }
  if (count != sorted.size()) return "connected";

  const double bound = structure_distance_bound(N, params.delta);
  auto dist = [&](const Index& x) {
    std::int64_t best = INT64_MAX;
    for (std::size_t s : sorted) best = std::min(best, l1(x, g.unravel(s)));
    return best;
  };
  if (static_cast<double>(dist(a)) > bound) return "dist0";
  if (static_cast<double>(dist(b)) > bound) return "distx";
  return std::nullopt;
}

StructureOutcome global_structure(const SiteConfiguration& config, const Index& a, const Index& b,
                                  const StructureParams& params) {
  const Grid& g = config.sites();
  if (!g.contains(a) || !g.contains(b)) throw ValidationError("x", "both sites must lie in the configuration");
  if (a == b) throw ValidationError("x", "x must differ from 0");
  if (!(params.C0 > 0.0)) throw ValidationError("C0", "must be positive");
  if (!(params.delta >= 0.0)) throw ValidationError("delta", "must be nonnegative");

  const int dim = g.dim();
  const auto star = neighbour_offsets(dim, Adjacency::star);
  const auto face = neighbour_offsets(dim, Adjacency::face);

  std::vector<std::uint8_t> closed(g.size());
  for (std::size_t s = 0; s < g.size(); ++s) closed[s] = config.open(s) ? 0 : 1;
  const ExcursionSet clusters = ExcursionSet::from_mask(g, closed, 0.0, Adjacency::star);

  // A = union of closed clusters met by the path with their star boundary,
  // plus the open path sites themselves.
  std::vector<std::uint8_t> in_a(g.size(), 0);
  std::vector<std::uint8_t> used(clusters.component_count(), 0);
  for (const Index& k : lattice_path(a, b, dim)) {
    const std::size_t s = g.linear(k);
    if (config.open(s)) {
      in_a[s] = 1;
      continue;
    }
    const auto id = static_cast<std::size_t>(clusters.label(s));
    if (used[id]) continue;
    used[id] = 1;
    for (std::size_t c : clusters.cells_of(static_cast<std::int32_t>(id))) {
      in_a[c] = 1;
      const Index kc = g.unravel(c);
      for (const Index& d : star) {
        const Index nb = offset(kc, d);
        if (g.contains(nb)) in_a[g.linear(nb)] = 1;
      }
    }
  }

  // Exterior: complement of A reachable from outside the window.
  std::vector<std::uint8_t> exterior(g.size(), 0);
  std::vector<std::size_t> stack;
  auto on_border = [&](const Index& k) {
    for (int ax = 0; ax < dim; ++ax)
      if (k[ax] == 0 || k[ax] == g.extent(ax) - 1) return true;
    return false;
  };
  for (std::size_t s = 0; s < g.size(); ++s)
    if (!in_a[s] && on_border(g.unravel(s))) {
      exterior[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    const Index k = g.unravel(stack.back());
    stack.pop_back();
    for (const Index& d : face) {
      const Index nb = offset(k, d);
      if (!g.contains(nb)) continue;
      const std::size_t l = g.linear(nb);
      if (in_a[l] || exterior[l]) continue;
      exterior[l] = 1;
      stack.push_back(l);
    }
  }

  std::vector<std::uint8_t> open_a(g.size());
  for (std::size_t s = 0; s < g.size(); ++s) open_a[s] = in_a[s] && config.open(s) ? 1 : 0;
  const ExcursionSet parts = ExcursionSet::from_mask(g, open_a, 0.0, Adjacency::face);

  auto touches_exterior = [&](std::size_t s) {
    const Index k = g.unravel(s);
    if (on_border(k)) return true;
    for (const Index& d : star)
      if (exterior[g.linear(offset(k, d))]) return true;
    return false;
  };
  std::int32_t best = ExcursionSet::kEmpty;
  std::size_t best_size = 0;
  for (std::size_t id = 0; id < parts.component_count(); ++id) {
    const auto cells = parts.cells_of(static_cast<std::int32_t>(id));
    if (cells.size() <= best_size) continue;
    if (std::any_of(cells.begin(), cells.end(), touches_exterior)) {
      best = static_cast<std::int32_t>(id);
      best_size = cells.size();
    }
  }

  StructureOutcome out;
  if (best == ExcursionSet::kEmpty) {
    out.violated = "open";
    return out;
  }
  const auto cells = parts.cells_of(best);
  if (auto bad = check_structure(config, a, b, cells, params)) {
    out.violated = *bad;
    return out;
  }
  GlobalStructure gs;
  gs.sites.assign(cells.begin(), cells.end());
  gs.size = gs.sites.size();
  gs.connected = true;
  gs.dist0 = gs.distx = INT64_MAX;
  for (std::size_t s : gs.sites) {
    gs.dist0 = std::min(gs.dist0, l1(a, g.unravel(s)));
    gs.distx = std::min(gs.distx, l1(b, g.unravel(s)));
  }
  out.structure = std::move(gs);
  return out;
}

std::vector<ScanRow> structure_probability_scan(std::span<const double> ps, std::span<const std::int64_t> x_norms,
                                                const StructureParams& params, std::size_t trials,
                                                const ScanOptions& options) {
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  if (ps.empty()) throw ValidationError("p", "at least one p is required");
  if (x_norms.empty()) throw ValidationError("x_norms", "at least one |x| is required");
  for (double p : ps)
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("p", "values must lie in (0, 1]");
  for (std::int64_t N : x_norms)
    if (N < 1) throw ValidationError("x_norms", "values must be at least 1");

  const std::size_t np = ps.size(), nx = x_norms.size();
  std::vector<std::uint8_t> hit(np * nx * trials, 0);
  std::vector<Grid> windows;
  std::vector<Index> anchors;
  for (std::int64_t N : x_norms) {
    const std::int64_t m = structure_margin(N, params.delta);
    windows.push_back(Grid(options.dim, {N + 1 + 2 * m, 2 * m + 1, 2 * m + 1}, 1.0));
    anchors.push_back({m, m, options.dim == 3 ? m : 0});
  }
  parallel_for(trials, options.threads, [&](std::size_t t) {
    const RngState rng{options.seed, stream_id(StreamTag::sites, t)};
    for (std::size_t xi = 0; xi < nx; ++xi) {
      const Grid& w = windows[xi];
      const Index& a = anchors[xi];
      std::vector<double> u(w.size());
      for (std::size_t s = 0; s < w.size(); ++s) u[s] = uniform_at(rng, site_counter(minus(w.unravel(s), a)));
      const Index b{a[0] + x_norms[xi], a[1], a[2]};
      for (std::size_t pi = 0; pi < np; ++pi) {
        std::vector<std::uint8_t> omega(w.size());
        for (std::size_t s = 0; s < w.size(); ++s) omega[s] = u[s] < ps[pi] ? 1 : 0;
        const auto config = SiteConfiguration::from_omega(w, 10.0, std::move(omega));
        hit[(pi * nx + xi) * trials + t] = global_structure(config, a, b, params).structure ? 1 : 0;
      }
    }
  });

  std::vector<ScanRow> rows;
  for (std::size_t pi = 0; pi < np; ++pi)
    for (std::size_t xi = 0; xi < nx; ++xi) {
      ScanRow r;
      r.p = ps[pi];
      r.x_norm = x_norms[xi];
      r.trials = trials;
      const auto* begin = hit.data() + (pi * nx + xi) * trials;
      r.successes = static_cast<std::size_t>(std::count(begin, begin + trials, 1));
      const auto w = stats::wilson(r.successes, trials);
      r.wilson_low = w.low;
      r.wilson_high = w.high;
      rows.push_back(r);
    }
  return rows;
}

}  // namespace gaussperc::renorm
