// Randomized property suites. Every property runs kCases independent cases;
// case i draws from the Philox stream (kSeed, property tag ^ i) so a failure
// names the case that reproduces it.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "gaussperc/chem.hpp"
#include "gaussperc/config.hpp"
#include "gaussperc/csv.hpp"
#include "gaussperc/excursion.hpp"
#include "gaussperc/renorm.hpp"

using namespace gaussperc;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kCases = 1000;
constexpr std::uint64_t kSeed = 20240611;

struct Gen {
  explicit Gen(std::size_t i) : rng({kSeed, stream_id(StreamTag::property, i)}) {}
  double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * rng.uniform(); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return rng.uniform() < p; }
  Philox4x32 rng;
};

template <class Body>
void for_cases(Body&& body) {
  for (std::size_t i = 0; i < kCases; ++i) {
    Gen g(i);
    SCOPED_TRACE("case " + std::to_string(i));
    body(g, i);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

Grid random_grid(Gen& g, int dim, std::int64_t max_side) {
  const Index e{g.integer(2, max_side), g.integer(2, max_side), dim == 3 ? g.integer(2, max_side) : 1};
  return Grid(dim, e, 1.0);
}

std::vector<std::uint8_t> random_mask(Gen& g, const Grid& grid, double p) {
  std::vector<std::uint8_t> m(grid.size());
  for (auto& v : m) v = g.coin(p) ? 1 : 0;
  return m;
}

std::vector<int> flood_labels(const Grid& grid, const std::vector<std::uint8_t>& occ, Adjacency adj) {
  const auto offsets = neighbour_offsets(grid.dim(), adj);
  std::vector<int> lab(grid.size(), -1);
  int next = 0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    if (!occ[s] || lab[s] >= 0) continue;
    std::deque<std::size_t> q{s};
    lab[s] = next;
    while (!q.empty()) {
      const Index k = grid.unravel(q.front());
      q.pop_front();
      for (const Index& o : offsets) {
        const Index n{k[0] + o[0], k[1] + o[1], k[2] + o[2]};
        if (!grid.contains(n)) continue;
        const std::size_t j = grid.linear(n);
        if (occ[j] && lab[j] < 0) {
          lab[j] = next;
          q.push_back(j);
        }
      }
    }
    ++next;
  }
  return lab;
}

GridField random_field(Gen& g, const Grid& grid) {
  std::vector<double> v(grid.size());
  for (auto& x : v) x = g.uniform(-1.0, 1.0);
  return GridField(grid, std::move(v), FieldKind::smooth);
}

}  // namespace

// ---- determinism ----------------------------------------------------------------

TEST(Property, PhiloxDeterminism) {
  for_cases([](Gen& g, std::size_t) {
    const RngState st{g.rng.next_u64(), g.rng.next_u64()};
    const std::uint64_t pos = g.rng.next_u64() >> 2;
    Philox4x32 a(st, pos), b(st, pos);
    for (int k = 0; k < 16; ++k) ASSERT_EQ(a(), b());
    const std::uint64_t c = g.rng.next_u64();
    ASSERT_EQ(uniform_at(st, c), uniform_at(st, c));
  });
}

TEST(Property, FieldSampleDeterminism) {
  const FieldSampler bf(make_kernel(KernelKind::bargmann_fock, 2), Grid::centered_cube(2, 4, 0.5));
  const FieldSampler trunc(make_kernel(KernelKind::polynomial_decay, 2, 3.5, 3.0), Grid::centered_cube(2, 4, 0.5),
                           1.0);
  for_cases([&](Gen& g, std::size_t i) {
    const FieldSampler& s = i % 2 ? trunc : bf;
    const RngState st{g.rng.next_u64(), g.rng.next_u64()};
    const GridField a = s.sample(st), b = s.sample(st);
    for (std::size_t k = 0; k < a.values().size(); ++k) ASSERT_EQ(a[k], b[k]);
  });
}

// ---- labeling -----------------------------------------------------------------

TEST(Property, UnionFindMatchesFloodFill) {
  for_cases([](Gen& g, std::size_t i) {
    const int dim = i % 3 == 2 ? 3 : 2;
    const Grid grid = random_grid(g, dim, 12);
    const auto m = random_mask(g, grid, g.uniform(0.2, 0.8));
    for (Adjacency adj : {Adjacency::face, Adjacency::star}) {
      const auto set = ExcursionSet::from_mask(grid, m, 0.0, adj);
      const auto ref = flood_labels(grid, m, adj);
      for (std::size_t c = 0; c < grid.size(); ++c) ASSERT_EQ(set.label(c), ref[c]);
      std::size_t total = 0;
      for (const auto& comp : set.components()) total += comp.cells;
      ASSERT_EQ(total, static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)));
    }
  });
}

TEST(Property, SiteClustersMatchFloodFill) {
  // Star-connected closed clusters on small site patterns.
  for_cases([](Gen& g, std::size_t) {
    const Grid sites = renorm::site_lattice(2, {g.integer(2, 4), g.integer(2, 4), 1}, 5.0);
    auto omega = random_mask(g, sites, 0.5);
    const auto cfg = renorm::SiteConfiguration::from_omega(sites, 5.0, omega);
    std::vector<std::uint8_t> closed(omega.size());
    for (std::size_t s = 0; s < omega.size(); ++s) closed[s] = omega[s] ? 0 : 1;
    const auto ref = flood_labels(sites, closed, Adjacency::star);
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const std::size_t expect =
          ref[s] < 0 ? 0 : static_cast<std::size_t>(std::count(ref.begin(), ref.end(), ref[s]));
      ASSERT_EQ(renorm::closed_cluster_size(cfg, sites.unravel(s)), expect);
    }
  });
}

// ---- monotonicity in level ------------------------------------------------------

TEST(Property, OccupancyAndExistMonotoneInLevel) {
  const Grid grid = Grid::centered_cube(2, 8, 1.0);
  const BoxSpec box{{0, 0, 0}, 5.0, 0.25};
  for_cases([&](Gen& g, std::size_t) {
    const GridField f = random_field(g, grid);
    double l1 = g.uniform(-1.0, 1.0), l2 = g.uniform(-1.0, 1.0);
    if (l1 > l2) std::swap(l1, l2);
    const auto a = excursion_set(f, l1), b = excursion_set(f, l2);
    for (std::size_t c = 0; c < grid.size(); ++c) ASSERT_LE(a.occupied(c), b.occupied(c));
    if (exist_event(a, box)) ASSERT_TRUE(exist_event(b, box));
  });
}

TEST(Property, ChemicalDistanceMonotoneInLevel) {
  const Grid grid(2, {10, 10, 1}, 1.0);
  for_cases([&](Gen& g, std::size_t) {
    const GridField f = random_field(g, grid);
    double l1 = g.uniform(-0.2, 1.0), l2 = g.uniform(-0.2, 1.0);
    if (l1 > l2) std::swap(l1, l2);
    const Index a{g.integer(0, 9), g.integer(0, 9), 0}, b{g.integer(0, 9), g.integer(0, 9), 0};
    const auto r1 = chem::chemical_distance(excursion_set(f, l1), a, b);
    const auto r2 = chem::chemical_distance(excursion_set(f, l2), a, b);
    if (r1.status == chem::PathStatus::connected) {
      ASSERT_EQ(r2.status, chem::PathStatus::connected);
      ASSERT_LE(r2.length, r1.length);
    }
  });
}

// ---- chemical distance: metric properties ---------------------------------------

TEST(Property, ChemicalDistanceTriangleInequality) {
  const Grid grid(2, {10, 10, 1}, 0.5);
  for_cases([&](Gen& g, std::size_t) {
    const auto set = ExcursionSet::from_mask(grid, random_mask(g, grid, 0.7), 0.0, Adjacency::face);
    if (set.component_count() == 0) return;
    // Largest component, three random cells of it.
    std::int32_t best = 0;
    for (std::size_t c = 1; c < set.component_count(); ++c)
      if (set.components()[c].cells > set.components()[static_cast<std::size_t>(best)].cells)
        best = static_cast<std::int32_t>(c);
    const auto cells = set.cells_of(best);
    auto pick = [&] { return grid.unravel(cells[static_cast<std::size_t>(g.integer(0, cells.size() - 1))]); };
    const Index a = pick(), b = pick(), c = pick();
    const double ab = chem::chemical_distance(set, a, b).length;
    const double bc = chem::chemical_distance(set, b, c).length;
    const double ac = chem::chemical_distance(set, a, c).length;
    ASSERT_LE(ac, ab + bc + 1e-12);
  });
}

TEST(Property, ChemicalDistanceSymmetricAndAboveEuclidean) {
  const Grid grid(2, {9, 11, 1}, 0.25);
  for_cases([&](Gen& g, std::size_t) {
    const auto set = ExcursionSet::from_mask(grid, random_mask(g, grid, 0.65), 0.0, Adjacency::face);
    const Index a{g.integer(0, 8), g.integer(0, 10), 0}, b{g.integer(0, 8), g.integer(0, 10), 0};
    const auto ab = chem::chemical_distance(set, a, b), ba = chem::chemical_distance(set, b, a);
    ASSERT_EQ(ab.status, ba.status);
    ASSERT_EQ(ab.length, ba.length);
    if (ab.status == chem::PathStatus::connected) {
      const Point pa = grid.position(a), pb = grid.position(b);
      ASSERT_GE(ab.length + 1e-12, std::hypot(pa[0] - pb[0], pa[1] - pb[1]));
      ASSERT_EQ(ab.path.size(), static_cast<std::size_t>(std::llround(ab.length / 0.25)) + 1);
    }
  });
}

TEST(Property, ChemicalSMonotoneInRadius) {
  const Grid grid = Grid::centered_cube(2, 8, 0.5);
  for_cases([&](Gen& g, std::size_t) {
    const auto set = ExcursionSet::from_mask(grid, random_mask(g, grid, g.uniform(0.3, 0.8)), 0.0, Adjacency::face);
    double s1 = g.uniform(0.5, 4.0), s2 = g.uniform(0.5, 4.0);
    if (s1 > s2) std::swap(s1, s2);
    ASSERT_LE(chem::chemical_S(set, s1, {0, 0, 0}).value, chem::chemical_S(set, s2, {0, 0, 0}).value + 1e-12);
  });
}

// ---- reflection symmetry ------------------------------------------------------

TEST(Property, ReflectionSymmetry) {
  const Grid grid = Grid::centered_cube(2, 6, 1.0);
  const BoxSpec box{{0, 0, 0}, 3.0, 0.5};
  for_cases([&](Gen& g, std::size_t i) {
    const GridField f = random_field(g, grid);
    const int axis = static_cast<int>(i % 2);
    std::vector<double> r(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
      Index k = grid.unravel(c);
      k[axis] = grid.extent(axis) - 1 - k[axis];
      r[grid.linear(k)] = f[c];
    }
    const GridField fr(grid, r, FieldKind::smooth);
    const double level = g.uniform(-0.5, 0.5);
    for (Adjacency adj : {Adjacency::face, Adjacency::star}) {
      const auto a = excursion_set(f, level, adj), b = excursion_set(fr, level, adj);
      ASSERT_EQ(a.component_count(), b.component_count());
      std::vector<std::pair<std::size_t, double>> ca, cb;
      for (const auto& c : a.components()) ca.push_back({c.cells, c.diameter.upper});
      for (const auto& c : b.components()) cb.push_back({c.cells, c.diameter.upper});
      std::sort(ca.begin(), ca.end());
      std::sort(cb.begin(), cb.end());
      for (std::size_t k = 0; k < ca.size(); ++k) {
        ASSERT_EQ(ca[k].first, cb[k].first);
        ASSERT_NEAR(ca[k].second, cb[k].second, 1e-12);
      }
      ASSERT_EQ(exist_event(a, box), exist_event(b, box));
      ASSERT_EQ(unique_event(a, box), unique_event(b, box));
      ASSERT_EQ(small_clusters_property(a, box), small_clusters_property(b, box));
    }
  });
}

// ---- renorm -----------------------------------------------------------------------

TEST(Property, GlobalStructureMonotoneCoupling) {
  const std::int64_t N = 12, m = renorm::structure_margin(12, 0.5);
  const Grid sites = renorm::site_lattice(2, {N + 1 + 2 * m, 2 * m + 1, 1}, 5.0);
  const Index a{m, m, 0}, b{m + N, m, 0};
  std::size_t found = 0;
  for_cases([&](Gen& g, std::size_t i) {
    const double p = g.uniform(0.8, 1.0);
    const auto cfg = renorm::SiteConfiguration::bernoulli(sites, 5.0, p, {kSeed, stream_id(StreamTag::bernoulli, i)});
    const auto out = renorm::global_structure(cfg, a, b);
    if (!out.structure) return;
    ++found;
    ASSERT_FALSE(renorm::check_structure(cfg, a, b, out.structure->sites).has_value());
    std::vector<std::size_t> closed;
    for (std::size_t s = 0; s < sites.size(); ++s)
      if (!cfg.open(s)) closed.push_back(s);
    if (closed.empty()) return;
    const auto flipped = cfg.with_site(closed[static_cast<std::size_t>(g.integer(0, closed.size() - 1))], true);
    ASSERT_FALSE(renorm::check_structure(flipped, a, b, out.structure->sites).has_value());
  });
  EXPECT_GT(found, kCases / 2);
}

TEST(Property, BernoulliCouplingMonotoneInP) {
  const Grid sites = renorm::site_lattice(2, {9, 7, 1}, 5.0);
  for_cases([&](Gen& g, std::size_t i) {
    double p1 = g.uniform(), p2 = g.uniform();
    if (p1 > p2) std::swap(p1, p2);
    const RngState st{kSeed, stream_id(StreamTag::bernoulli, i)};
    const auto lo = renorm::SiteConfiguration::bernoulli(sites, 5.0, p1, st);
    const auto hi = renorm::SiteConfiguration::bernoulli(sites, 5.0, p2, st);
    for (std::size_t s = 0; s < sites.size(); ++s) ASSERT_LE(lo.open(s), hi.open(s));
  });
}

TEST(Property, LssAlphaMonotone) {
  for_cases([](Gen& g, std::size_t) {
    const double q1 = std::pow(10.0, g.uniform(-30.0, -0.1)), q2 = q1 * g.uniform(0.01, 0.99);
    const std::int64_t M = g.integer(0, 20);
    const int d = static_cast<int>(g.integer(1, 3));
    ASSERT_LE(renorm::lss_alpha_closed(q2, M, d), renorm::lss_alpha_closed(q1, M, d));  // decreasing in p
    ASSERT_LE(renorm::lss_alpha_closed(q1, M, d), renorm::lss_alpha_closed(q1, M + 1, d));
    ASSERT_LE(renorm::lss_alpha_closed(q1, M, d), renorm::lss_alpha_closed(q1, M, d + 1));
    const double a = renorm::lss_alpha_closed(q1, M, d);
    ASSERT_GE(a, 0.0);
    ASSERT_LE(a, 1.0);
  });
}

// ---- config round-trip ----------------------------------------------------------

TEST(Property, ConfigRoundTrip) {
  const std::vector<ExperimentKind> kinds{ExperimentKind::sample, ExperimentKind::stretch,
                                          ExperimentKind::renorm_scan};
  for_cases([&](Gen& g, std::size_t i) {
    ExperimentConfig c;
    c.experiment = kinds[i % kinds.size()];
    c.seed = g.rng.next_u64();
    c.trials = static_cast<std::size_t>(g.integer(1, 100000));
    c.threads = static_cast<unsigned>(g.integer(1, 64));
    c.output_dir = "out" + std::to_string(g.integer(0, 999));
    c.field.dim = static_cast<int>(g.integer(2, 3));
    c.field.h = g.uniform(0.01, 1.0);
    c.field.domain = c.field.h * static_cast<double>(g.integer(2, 400));
    if (g.coin()) {
      c.field.kernel = KernelKind::polynomial_decay;
      c.field.beta = c.field.dim + g.uniform(0.01, 10.0);
    }
    if (g.coin()) c.field.r = g.uniform(1.01, 50.0);
    if (g.coin()) c.field.eps = c.field.h * static_cast<double>(g.integer(1, 2));
    c.event.R = g.uniform(1.01, 40.0);
    c.event.kappa = g.uniform(0.01, 0.99);
    c.event.levels.clear();
    for (std::int64_t k = g.integer(1, 6); k > 0; --k) c.event.levels.push_back(g.uniform(-3.0, 3.0));
    c.event.sign = g.coin() ? "below" : "above";
    c.chem.s = g.uniform(1.0, 20.0);
    c.chem.thresholds = {g.uniform(0.0, 5.0), g.uniform(5.0, 50.0)};
    c.chem.distances = {g.uniform(1.5, 30.0)};
    c.chem.connected_target = static_cast<std::size_t>(g.integer(1, 500));
    c.chem.max_trials = static_cast<std::size_t>(g.integer(1, 5000));
    c.chem.delta = g.uniform(0.0, 2.0);
    c.renorm.p = {g.uniform(0.5, 1.0), 1.0};
    c.renorm.x_norms = {g.integer(1, 200)};
    c.renorm.C0 = g.uniform(1.0, 20.0);
    c.renorm.delta = g.uniform(0.0, 2.0);
    if (g.coin()) c.renorm.tail_p = g.uniform();
    c.renorm.sites = {g.integer(2, 20), g.integer(2, 20)};
    c.budget.max_cells = static_cast<std::size_t>(g.integer(1, 1'000'000'000));
    const std::string text = serialize(c);
    const ExperimentConfig back = parse_config(text);
    ASSERT_EQ(serialize(back), text);
    ASSERT_EQ(back.seed, c.seed);
    ASSERT_EQ(back.field.h, c.field.h);
    ASSERT_EQ(back.event.levels, c.event.levels);
  });
}

// ---- CSV byte reproducibility ------------------------------------------------------

TEST(Property, CsvByteReproducibleAndLossless) {
  const fs::path dir = fs::temp_directory_path() / "gaussperc_property_csv";
  fs::create_directories(dir);
  for_cases([&](Gen& g, std::size_t) {
    const std::size_t rows = static_cast<std::size_t>(g.integer(0, 8));
    std::vector<std::vector<csv::Cell>> data;
    const char* alphabet[] = {"a", ",", "\"", "\r\n", " ", "x y", "é"};
    for (std::size_t r = 0; r < rows; ++r) {
      std::string s;
      for (std::int64_t k = g.integer(0, 4); k > 0; --k) s += alphabet[g.integer(0, 6)];
      const double x = std::ldexp(g.uniform(-1.0, 1.0), static_cast<int>(g.integer(-60, 60)));
      data.push_back({static_cast<std::uint64_t>(r), x, g.coin(), s, static_cast<std::int64_t>(g.integer(-9, 9))});
    }
    std::string bytes[2];
    for (int pass = 0; pass < 2; ++pass) {
      const fs::path p = dir / ("t" + std::to_string(pass) + ".csv");
      {
        csv::Writer w(p, {"trial", "x", "flag", "text", "k"});
        for (const auto& row : data) w.row(row);
        w.flush();
      }
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      bytes[pass] = ss.str();
    }
    ASSERT_EQ(bytes[0], bytes[1]);
    const auto t = csv::parse(bytes[0]);
    ASSERT_EQ(t.rows.size(), rows);
    for (std::size_t r = 0; r < rows; ++r) {
      ASSERT_EQ(std::stod(t.rows[r][1]), std::get<double>(data[r][1]));
      ASSERT_EQ(t.rows[r][3], std::get<std::string>(data[r][3]));
    }
  });
  fs::remove_all(dir);
}
