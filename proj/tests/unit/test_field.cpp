#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gaussperc/error.hpp"
#include "gaussperc/field.hpp"
#include "gaussperc/field_io.hpp"
#include "gaussperc/kernel.hpp"
#include "gaussperc/stats.hpp"

using namespace gaussperc;

namespace {

// Trapezoid rule on a log-spaced radial mesh: integral of q(r)^2 over R^d.
double radial_l2(const Kernel& k, int dim) {
  const int n = 200000;
  const double lo = 1e-6, hi = 1e5;
  const double shell = dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
  double sum = 0.0, prev_r = 0.0, prev_v = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = lo * std::pow(hi / lo, static_cast<double>(i) / n);
    const double q = k.profile(r);
    const double v = shell * std::pow(r, dim - 1) * q * q;
    if (i > 0) sum += 0.5 * (v + prev_v) * (r - prev_r);
    prev_r = r;
    prev_v = v;
  }
  return sum;
}

}  // namespace

TEST(Kernel, BargmannFockPeak) {
  const Kernel k = make_kernel(KernelKind::bargmann_fock, 2);
  EXPECT_NEAR(k.profile(0.0), 0.79788, 1e-5);
  EXPECT_DOUBLE_EQ(k.profile(0.0), std::sqrt(2.0 / std::numbers::pi));
  EXPECT_DOUBLE_EQ(k.profile(1.5), std::sqrt(2.0 / std::numbers::pi) * std::exp(-2.25));
}

TEST(Kernel, TruncationKeepsInnerProfile) {
  const Kernel k = make_kernel(KernelKind::bargmann_fock, 2);
  const Kernel t = make_kernel(KernelKind::bargmann_fock, 2, std::nullopt, 8.0);
  EXPECT_EQ(t.profile(1.0), k.profile(1.0));
  EXPECT_EQ(t.profile(2.0), k.profile(2.0));
}

TEST(Kernel, TruncationVanishesOutside) {
  for (int d : {2, 3}) {
    const Kernel t = make_kernel(KernelKind::bargmann_fock, d, std::nullopt, 8.0);
    EXPECT_EQ(t.profile(4.1), 0.0);
    EXPECT_EQ(t.profile(4.0), 0.0);
    EXPECT_GT(t.profile(3.0), 0.0);
  }
}

TEST(Kernel, BumpIsSmoothPartition) {
  EXPECT_EQ(bump(0.0), 1.0);
  EXPECT_EQ(bump(0.25), 1.0);
  EXPECT_EQ(bump(0.5), 0.0);
  double prev = 1.0;
  for (double t = 0.25; t <= 0.5; t += 0.001) {
    const double b = bump(t);
    EXPECT_LE(b, prev + 1e-15);
    prev = b;
  }
  EXPECT_NEAR(bump(0.375), 0.5, 1e-12);
}

TEST(Kernel, RejectsBadParameters) {
  EXPECT_THROW(make_kernel(KernelKind::polynomial_decay, 2, 2.0), ValidationError);
  EXPECT_THROW(make_kernel(KernelKind::polynomial_decay, 2), ValidationError);
  EXPECT_THROW(make_kernel(KernelKind::bargmann_fock, 2, std::nullopt, 0.5), ValidationError);
  EXPECT_THROW(make_kernel(KernelKind::bargmann_fock, 2, std::nullopt, -1.0), ValidationError);
}

TEST(Kernel, PolynomialNormalizationMatchesQuadrature) {
  for (auto [d, beta] : {std::pair{2, 3.0}, std::pair{2, 5.5}, std::pair{3, 4.0}, std::pair{3, 7.0}}) {
    const Kernel k = make_kernel(KernelKind::polynomial_decay, d, beta);
    EXPECT_NEAR(radial_l2(k, d), 1.0, 1e-4) << "d=" << d << " beta=" << beta;
    EXPECT_NEAR(covariance_exact(k, {0, 0, 0}), 1.0, 1e-6);
  }
}

TEST(Kernel, PolynomialTail) {
  const Kernel k = make_kernel(KernelKind::polynomial_decay, 2, 3.0);
  const double ratio = k.profile(200.0) / k.profile(100.0);
  EXPECT_NEAR(ratio, std::pow(0.5, 3.0), 1e-4);
}

TEST(Covariance, BargmannFockClosedForm) {
  const Kernel k = make_kernel(KernelKind::bargmann_fock, 2);
  EXPECT_DOUBLE_EQ(covariance_exact(k, {0, 0, 0}), 1.0);
  EXPECT_NEAR(covariance_exact(k, {2, 0, 0}), 0.13534, 1e-5);
  EXPECT_NEAR(covariance_exact(k, {0.6, 0.8, 0}), std::exp(-0.5), 1e-14);
}

TEST(Covariance, TruncatedIsEven) {
  const Kernel k = make_kernel(KernelKind::bargmann_fock, 2, std::nullopt, 3.0);
  const Point v{0.7, -0.4, 0.0}, w{-0.7, 0.4, 0.0};
  EXPECT_NEAR(covariance_exact(k, v), covariance_exact(k, w), 1e-10);
  EXPECT_LT(covariance_exact(k, v), covariance_exact(make_kernel(KernelKind::bargmann_fock, 2), v));
  EXPECT_NEAR(covariance_exact(k, {3.1, 0, 0}), 0.0, 1e-12);
}

TEST(WhiteNoise, Deterministic) {
  const Grid g(2, {16, 16, 1}, 0.25);
  const GridField a = sample_white_noise(g, {1, 0});
  const GridField b = sample_white_noise(g, {1, 0});
  ASSERT_EQ(a.values().size(), 256u);
  for (std::size_t i = 0; i < a.values().size(); ++i) ASSERT_EQ(a[i], b[i]);
  EXPECT_EQ(a.kind(), FieldKind::white_noise);
}

TEST(WhiteNoise, Statistics) {
  const Grid g(2, {256, 256, 1}, 0.25);
  const GridField w = sample_white_noise(g, {3, 0});
  const auto m = stats::moments(w.values());
  EXPECT_LT(std::abs(m.mean), 4.0 / 256.0);
  EXPECT_NEAR(m.variance, 1.0, 0.05);
}

TEST(Convolve, ZeroNoiseGivesZero) {
  const Grid g(2, {16, 16, 1}, 0.25);
  const GridField zero(g, std::vector<double>(g.size(), 0.0), FieldKind::white_noise);
  const GridField f = convolve_field(zero, make_kernel(KernelKind::bargmann_fock, 2));
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
}

TEST(Convolve, PointStencilScales) {
  for (int d : {2, 3}) {
    const Grid g(d, {10, 12, d == 3 ? 6 : 1}, 0.5);
    const GridField w = sample_white_noise(g, {4, 1});
    const double a = 1.7;
    const GridField f = convolve_field(w, point_stencil(d, a));
    const double scale = a * std::pow(0.5, d / 2.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(f[i], scale * w[i], 1e-12);
  }
}

TEST(Convolve, MatchesDirectSum) {
  const Grid g(2, {12, 12, 1}, 0.5);
  const GridField w = sample_white_noise(g, {9, 2});
  const Kernel k = make_kernel(KernelKind::bargmann_fock, 2);
  const GridField f = convolve_field(w, k);
  for (std::size_t i = 0; i < g.size(); i += 7) {
    const Point x = g.position(i);
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Point y = g.position(j);
      s += k.profile(std::hypot(x[0] - y[0], x[1] - y[1])) * w[j];
    }
    EXPECT_NEAR(f[i], 0.5 * s, 1e-10);
  }
}

TEST(Sampler, Deterministic) {
  FieldSampler s(make_kernel(KernelKind::bargmann_fock, 2), Grid::centered_cube(2, 8, 0.25));
  const GridField a = s.sample({7, 0}), b = s.sample({7, 0}), c = s.sample({7, 1});
  bool differs = false;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    ASSERT_EQ(a[i], b[i]);
    differs |= a[i] != c[i];
  }
  EXPECT_TRUE(differs);
}

TEST(Sampler, GaussianMarginal) {
  FieldSampler s(make_kernel(KernelKind::bargmann_fock, 2), Grid::centered_cube(2, 2, 0.25));
  std::vector<double> xs;
  const std::size_t c = s.grid().linear(s.grid().center_index());
  for (std::uint64_t t = 0; t < 2000; ++t) xs.push_back(s.sample({21, t})[c]);
  const auto m = stats::moments(xs);
  EXPECT_NEAR(m.variance, covariance_exact(s.kernel(), {0, 0, 0}), 0.05);
  EXPECT_LT(std::abs(m.skewness), 0.15);
  EXPECT_LT(std::abs(m.excess_kurtosis), 0.15);
}

TEST(Sampler, StationaryCovariance) {
  const Grid g = Grid::centered_cube(2, 8, 0.25);
  FieldSampler s(make_kernel(KernelKind::bargmann_fock, 2), g);
  const std::size_t trials = 1500;
  const std::vector<Index> bases{{2, 2, 0}, {8, 8, 0}, {12, 3, 0}, {4, 10, 0}, {6, 6, 0}};
  std::vector<std::vector<double>> xs(bases.size()), ys(bases.size());
  for (std::uint64_t t = 0; t < trials; ++t) {
    const GridField f = s.sample({5, t});
    for (std::size_t b = 0; b < bases.size(); ++b) {
      xs[b].push_back(f.at(bases[b]));
      ys[b].push_back(f.at({bases[b][0] + 4, bases[b][1], 0}));  // |v| = 1
    }
  }
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const auto c = stats::covariance(xs[b], ys[b]);
    EXPECT_NEAR(c.value, std::exp(-0.5), 3 * c.standard_error) << "base " << b;
  }
}

TEST(Sampler, TruncatedFieldIsRangeDependent) {
  // q chi_2 vanishes beyond 1, so f_2 values 2.5 apart are independent.
  const Grid g = Grid::centered_cube(2, 8, 0.25);
  FieldSampler s(make_kernel(KernelKind::bargmann_fock, 2, std::nullopt, 2.0), g);
  std::vector<double> xs, ys;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    const GridField f = s.sample({8, t});
    xs.push_back(f.at({2, 8, 0}));
    ys.push_back(f.at({12, 8, 0}));
  }
  const auto c = stats::covariance(xs, ys);
  EXPECT_LT(std::abs(c.value), 3 * c.standard_error);
}

TEST(Discretize, RejectsNonMultiple) {
  const Grid g(2, {8, 8, 1}, 0.25);
  const GridField f(g, std::vector<double>(g.size(), 1.0), FieldKind::smooth);
  try {
    discretize(f, 0.3);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "eps");
  }
  EXPECT_THROW(discretize(f, 4.0), ValidationError);
}

TEST(Discretize, ConstantAndIdentity) {
  const Grid g(2, {8, 8, 1}, 0.25);
  const GridField c(g, std::vector<double>(g.size(), 2.5), FieldKind::smooth);
  const GridField dc = discretize(c, 0.5);
  for (double v : dc.values()) EXPECT_EQ(v, 2.5);
  const GridField w = sample_white_noise(g, {1, 1});
  const GridField id = discretize(w, 0.25);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(id[i], w[i]);
}

TEST(Discretize, IndexGridBlocks) {
  // Cell k sits at lattice point k - 4; blocks are y + [-1, 1) lattice units
  // around even y, so cells (2m - 1, 2m) share the value of cell 2m.
  const Grid g(2, {8, 8, 1}, 0.25);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = static_cast<double>(i);
  const GridField f(g, v, FieldKind::smooth);
  const GridField b = discretize(f, 0.5);
  EXPECT_EQ(b.kind(), FieldKind::block_constant);
  EXPECT_EQ(b.block_cells(), 2);
  for (std::int64_t i = 0; i < 8; ++i)
    for (std::int64_t j = 0; j < 8; ++j) {
      const std::int64_t ci = std::min<std::int64_t>(i % 2 ? i + 1 : i, 7);
      const std::int64_t cj = std::min<std::int64_t>(j % 2 ? j + 1 : j, 7);
      EXPECT_EQ(b.at({i, j, 0}), f.at({ci, cj, 0})) << i << "," << j;
    }
}

TEST(Discretize, ErrorBoundOnAnalyticInput) {
  const Grid g(2, {64, 64, 1}, 0.125);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.position(i);
    v[i] = std::sin(x[0]) + std::cos(2.0 * x[1]);
  }
  const GridField f(g, v, FieldKind::smooth);
  for (double eps : {0.25, 0.5, 1.0}) {
    const GridField b = discretize(f, eps);
    const double bound = std::sqrt(5.0) * eps * std::sqrt(2.0);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_LE(std::abs(b[i] - f[i]), bound);
  }
}

TEST(SupDifference, Basics) {
  const Grid g = Grid::centered_cube(2, 8, 0.25);
  const GridField a = sample_white_noise(g, {2, 2});
  EXPECT_EQ(sup_difference(a, a, Box{{0, 0, 0}, 1.0}), 0.0);
  std::vector<double> shifted(a.values().begin(), a.values().end());
  for (double& x : shifted) x -= 0.75;
  const GridField b(g, shifted, FieldKind::white_noise);
  EXPECT_NEAR(sup_difference(a, b, Box{{0, 0, 0}, 1.0}), 0.75, 1e-12);
}

TEST(FieldIo, RoundTrip) {
  const Grid g(3, {4, 5, 6}, 0.5, {1.0, -2.0, 0.5});
  const GridField a = sample_white_noise(g, {6, 6});
  const GridField b = decode_field(encode_field(a), FieldKind::white_noise);
  EXPECT_TRUE(b.grid().same_geometry(g));
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(a[i], b[i]);
  EXPECT_EQ(encode_field(a).substr(0, 4), "GPF1");
}

TEST(Grid, PositionConvention) {
  const Grid g(2, {8, 6, 1}, 0.5, {1.0, 2.0, 0.0});
  const Point p = g.position(Index{4, 3, 0});
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], 2.0);
  EXPECT_DOUBLE_EQ(g.position(Index{0, 0, 0})[0], 1.0 - 2.0);
  EXPECT_EQ(g.nearest({1.26, 2.0, 0.0}), (Index{5, 3, 0}));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.linear(g.unravel(i)), i);
}
