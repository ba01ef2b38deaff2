#include "gaussperc/field.hpp"

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <string>

#include "gaussperc/error.hpp"

namespace gaussperc {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::int64_t fft_friendly_size(std::int64_t n) {
  for (std::int64_t candidate = std::max<std::int64_t>(n, 1);; ++candidate) {
    std::int64_t rest = candidate;
    for (std::int64_t p : {2, 3, 5, 7})
      while (rest % p == 0) rest /= p;
    if (rest == 1) return candidate;
  }
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

std::int64_t block_multiple(double eps, double spacing) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("eps", "must be finite and positive");
  const double ratio = eps / spacing;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw ValidationError("eps", "must be a positive integer multiple of the grid spacing");
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

void check_budget(std::size_t cells, std::size_t bytes, const ResourceBudget& budget) {
  if (cells > budget.max_cells)
    throw ResourceError("max_cells", std::to_string(cells) + " cells exceeds the cap of " +
                                         std::to_string(budget.max_cells));
  if (bytes > budget.max_bytes)
    throw ResourceError("max_bytes", std::to_string(bytes) + " bytes exceeds the cap of " +
                                         std::to_string(budget.max_bytes));
}

GridField sample_white_noise(const Grid& grid, RngState rng) {
  Philox4x32 gen(rng);
  std::vector<double> values(grid.size());
  for (double& v : values) v = gen.normal();
  return GridField(grid, std::move(values), FieldKind::white_noise);
}

struct Convolver::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

Convolver::Convolver(const Grid& input, const KernelStencil& stencil, const ResourceBudget& budget)
    : input_(input), radius_cells_(stencil.radius_cells), padded_{1, 1, 1}, plans_(std::make_unique<Plans>()) {
  const int dim = input.dim();
  if (stencil.dim != dim) throw ValidationError("kernel", "stencil dimension does not match the grid");
  std::size_t logical = 1;
  for (int a = 0; a < dim; ++a) {
    padded_[a] = fft_friendly_size(input.extent(a) + 2 * radius_cells_);
    if (2 * radius_cells_ >= padded_[a])
      throw ValidationError("kernel", "support exceeds half the padded domain (wraparound contamination)");
    logical *= static_cast<std::size_t>(padded_[a]);
  }
  real_size_ = logical;
  complex_size_ = logical / static_cast<std::size_t>(padded_[dim - 1]) *
                  static_cast<std::size_t>(padded_[dim - 1] / 2 + 1);
  // real work + complex work + stored spectrum
  check_budget(real_size_, real_size_ * sizeof(double) + 2 * complex_size_ * sizeof(fftw_complex), budget);
  spdlog::debug("convolver: grid {} cells, padded to {} cells ({:.1f}% padding)", input.size(), real_size_,
                100.0 * (static_cast<double>(real_size_) / static_cast<double>(input.size()) - 1.0));

  int n[3];
  for (int a = 0; a < dim; ++a) n[a] = static_cast<int>(padded_[a]);

  std::unique_ptr<double, FftwDeleter> real(fftw_alloc_real(real_size_));
  std::unique_ptr<fftw_complex, FftwDeleter> cplx(fftw_alloc_complex(complex_size_));
  {
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c(dim, n, real.get(), cplx.get(), FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r(dim, n, cplx.get(), real.get(), FFTW_ESTIMATE);
  }

  std::fill(real.get(), real.get() + real_size_, 0.0);
  const std::int64_t side = stencil.side();
  const std::int64_t m = radius_cells_;
  const std::int64_t sk = dim == 3 ? side : 1;
  for (std::int64_t i = 0; i < side; ++i)
    for (std::int64_t j = 0; j < side; ++j)
      for (std::int64_t k = 0; k < sk; ++k) {
        const std::int64_t wi = (i - m + padded_[0]) % padded_[0];
        const std::int64_t wj = (j - m + padded_[1]) % padded_[1];
        const std::int64_t wk = dim == 3 ? (k - m + padded_[2]) % padded_[2] : 0;
        real.get()[(wi * padded_[1] + wj) * padded_[2] + wk] = stencil.at(i, j, k);
      }
  fftw_execute_dft_r2c(plans_->forward, real.get(), cplx.get());

  const double scale = std::pow(input.spacing(), 0.5 * dim) / static_cast<double>(real_size_);
  spectrum_.resize(complex_size_);
  for (std::size_t i = 0; i < complex_size_; ++i) spectrum_[i] = {cplx.get()[i][0] * scale, cplx.get()[i][1] * scale};
}

Convolver::~Convolver() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

std::vector<double> Convolver::apply(std::span<const double> values) const {
  if (values.size() != input_.size()) throw ValidationError("values", "length does not match the convolver grid");
  std::unique_ptr<double, FftwDeleter> real(fftw_alloc_real(real_size_));
  std::unique_ptr<fftw_complex, FftwDeleter> cplx(fftw_alloc_complex(complex_size_));
  double* r = real.get();
  std::fill(r, r + real_size_, 0.0);

  const Index& e = input_.extent();
  std::size_t src = 0;
  for (std::int64_t i = 0; i < e[0]; ++i)
    for (std::int64_t j = 0; j < e[1]; ++j) {
      double* row = r + (i * padded_[1] + j) * padded_[2];
      for (std::int64_t k = 0; k < e[2]; ++k) row[k] = values[src++];
    }

  fftw_execute_dft_r2c(plans_->forward, r, cplx.get());
  fftw_complex* c = cplx.get();
  for (std::size_t i = 0; i < complex_size_; ++i) {
    const double re = c[i][0] * spectrum_[i][0] - c[i][1] * spectrum_[i][1];
    const double im = c[i][0] * spectrum_[i][1] + c[i][1] * spectrum_[i][0];
    c[i][0] = re;
    c[i][1] = im;
  }
  fftw_execute_dft_c2r(plans_->backward, c, r);

  std::vector<double> out(input_.size());
  std::size_t dst = 0;
  for (std::int64_t i = 0; i < e[0]; ++i)
    for (std::int64_t j = 0; j < e[1]; ++j) {
      const double* row = r + (i * padded_[1] + j) * padded_[2];
      for (std::int64_t k = 0; k < e[2]; ++k) out[dst++] = row[k];
    }
  return out;
}

GridField convolve_field(const GridField& noise, const KernelStencil& stencil) {
  if (noise.kind() != FieldKind::white_noise) throw ValidationError("noise", "input must be a white-noise field");
  Convolver conv(noise.grid(), stencil);
  return GridField(noise.grid(), conv.apply(noise.values()), FieldKind::smooth);
}

GridField convolve_field(const GridField& noise, const Kernel& kernel) {
  if (kernel.dim() != noise.grid().dim()) throw ValidationError("kernel", "dimension does not match the grid");
  return convolve_field(noise, sample_kernel(kernel, noise.grid().spacing()));
}

GridField discretize(const GridField& field, double eps) {
  const Grid& g = field.grid();
  const double h = g.spacing();
  const std::int64_t b = block_multiple(eps, h);
  const int dim = g.dim();
  std::array<std::vector<std::int64_t>, 3> center;  // per axis: cell index -> index of block center
  for (int a = 0; a < 3; ++a) {
    const std::int64_t n = g.extent(a);
    center[a].resize(static_cast<std::size_t>(n));
    if (a >= dim) {
      center[a][0] = 0;
      continue;
    }
    if (static_cast<double>(n) * h < eps) throw ValidationError("eps", "larger than the domain side");
    const double shift = g.origin()[a] / h;
    const double shift_int = std::round(shift);
    if (std::abs(shift - shift_int) > 1e-9 * std::max(1.0, std::abs(shift)))
      throw ValidationError("origin", "grid origin must lie on spacing * Z^d for eps-discretization");
    const auto base = static_cast<std::int64_t>(shift_int) - n / 2;  // lattice coordinate of cell 0
    for (std::int64_t k = 0; k < n; ++k) {
      const std::int64_t lattice = base + k;
      // y = b * floor(lattice / b + 1/2), exact in integers
      const std::int64_t num = 2 * lattice + b;
      const std::int64_t den = 2 * b;
      const std::int64_t q = num >= 0 ? num / den : -((-num + den - 1) / den);
      const std::int64_t c = std::clamp<std::int64_t>(q * b - base, 0, n - 1);
      center[a][static_cast<std::size_t>(k)] = c;
    }
  }
  std::vector<double> out(g.size());
  std::size_t idx = 0;
  for (std::int64_t i = 0; i < g.extent(0); ++i)
    for (std::int64_t j = 0; j < g.extent(1); ++j)
      for (std::int64_t k = 0; k < g.extent(2); ++k)
        out[idx++] = field.at({center[0][static_cast<std::size_t>(i)], center[1][static_cast<std::size_t>(j)],
                               center[2][static_cast<std::size_t>(k)]});
  return GridField(g, std::move(out), FieldKind::block_constant, b);
}

double sup_difference(const GridField& a, const GridField& b, const Box& box) {
  if (!a.grid().same_geometry(b.grid())) throw ValidationError("grid", "fields must share a grid");
  const Grid& g = a.grid();
  CellRange r = cells_in_box(g, box);
  for (int ax = 0; ax < g.dim(); ++ax) {
    r.lo[ax] = std::max<std::int64_t>(r.lo[ax], 0);
    r.hi[ax] = std::min<std::int64_t>(r.hi[ax], g.extent(ax));
  }
  if (r.empty(g.dim())) throw ValidationError("box", "box does not intersect the grid");
  double best = 0.0;
  for (std::int64_t i = r.lo[0]; i < r.hi[0]; ++i)
    for (std::int64_t j = r.lo[1]; j < r.hi[1]; ++j)
      for (std::int64_t k = r.lo[2]; k < r.hi[2]; ++k) {
        const std::size_t l = g.linear({i, j, k});
        best = std::max(best, std::abs(a[l] - b[l]));
      }
  return best;
}

FieldSampler::FieldSampler(Kernel kernel, Grid target, std::optional<double> eps, const ResourceBudget& budget)
    : kernel_(std::move(kernel)),
      target_(target),
      eps_(eps),
      stencil_(sample_kernel(kernel_, target.spacing())),
      noise_grid_(target) {
  if (kernel_.dim() != target.dim()) throw ValidationError("kernel", "dimension does not match the grid");
  if (eps_) block_multiple(*eps_, target.spacing());
  const std::int64_t m = stencil_.radius_cells;
  Index ext = target.extent();
  for (int a = 0; a < target.dim(); ++a) {
    ext[a] += 2 * m;
    interior_.lo[a] = m;
    interior_.hi[a] = m + target.extent(a);
  }
  noise_grid_ = Grid(target.dim(), ext, target.spacing(), target.origin());
  convolver_ = std::make_unique<Convolver>(noise_grid_, stencil_, budget);
}

GridField FieldSampler::sample_extended(RngState rng) const {
  const GridField noise = sample_white_noise(noise_grid_, rng);
  return GridField(noise_grid_, convolver_->apply(noise.values()), FieldKind::smooth);
}

GridField FieldSampler::sample(RngState rng) const {
  GridField ext = sample_extended(rng);
  if (eps_) return discretize(ext, *eps_).crop(interior_);
  return ext.crop(interior_);
}

std::pair<GridField, GridField> FieldSampler::sample_pair(RngState rng) const {
  if (!eps_) throw ValidationError("eps", "sample_pair requires a discretization step");
  GridField ext = sample_extended(rng);
  GridField coarse = discretize(ext, *eps_).crop(interior_);
  return {ext.crop(interior_), std::move(coarse)};
}

namespace {

// d/dx_axis of g at k, central where possible.
template <class G>
double derivative(const Grid& grid, const G& g, Index k, int axis) {
  const double h = grid.spacing();
  const std::int64_t n = grid.extent(axis);
  const std::int64_t i = k[axis];
  auto at = [&](std::int64_t off) {
    Index kk = k;
    kk[axis] = i + off;
    return g(kk);
  };
  if (i > 0 && i + 1 < n) return (at(1) - at(-1)) / (2.0 * h);
  if (n >= 3) {
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
  }
  return i == 0 ? (at(1) - at(0)) / h : (at(0) - at(-1)) / h;
}

}  // namespace

Gradient gradient_at(const GridField& field, const Index& k) {
  const Grid& g = field.grid();
  auto value = [&](const Index& kk) { return field.at(kk); };
  Gradient out{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) out[a] = derivative(g, value, k, a);
  return out;
}

Hessian hessian_at(const GridField& field, const Index& k) {
  const Grid& g = field.grid();
  const double h = g.spacing();
  Hessian out{};
  auto value = [&](const Index& kk) { return field.at(kk); };
  for (int a = 0; a < g.dim(); ++a) {
    const std::int64_t n = g.extent(a);
    const std::int64_t i = k[a];
    auto at = [&](std::int64_t pos) {
      Index kk = k;
      kk[a] = pos;
      return field.at(kk);
    };
    if (i > 0 && i + 1 < n) {
      out[a][a] = (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
    } else if (n >= 3) {
      const std::int64_t s = i == 0 ? 1 : -1;
      out[a][a] = (at(i) - 2.0 * at(i + s) + at(i + 2 * s)) / (h * h);
    }
    for (int b = a + 1; b < g.dim(); ++b) {
      auto d_b = [&](const Index& kk) { return derivative(g, value, kk, b); };
      out[a][b] = out[b][a] = derivative(g, d_b, k, a);
    }
  }
  return out;
}

double euclidean_norm(const Gradient& g, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += g[a] * g[a];
  return std::sqrt(s);
}

double operator_norm(const Hessian& h, int dim) {
  if (dim == 2) {
    const double mean = 0.5 * (h[0][0] + h[1][1]);
    const double diff = 0.5 * (h[0][0] - h[1][1]);
    const double rad = std::sqrt(diff * diff + h[0][1] * h[0][1]);
    return std::max(std::abs(mean + rad), std::abs(mean - rad));
  }
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = h[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace gaussperc
