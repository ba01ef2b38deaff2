#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gaussperc/grid.hpp"
#include "gaussperc/kernel.hpp"
#include "gaussperc/rng.hpp"

namespace gaussperc {

/// Default caps applied to every FFT work area.
struct ResourceBudget {
  std::size_t max_cells = 100'000'000;
  std::size_t max_bytes = std::size_t{2} << 30;
};

/// Throws ResourceError naming the violated limit.
void check_budget(std::size_t cells, std::size_t bytes, const ResourceBudget& budget = {});

/// iid N(0,1) on every cell of `grid`, drawn in linear order from `rng`.
GridField sample_white_noise(const Grid& grid, RngState rng);

/// Zero-padded FFT convolution with a precomputed kernel spectrum, reusable
/// across many noise samples of the same shape. `apply` is thread-safe.
class Convolver {
 public:
  Convolver(const Grid& input, const KernelStencil& stencil, const ResourceBudget& budget = {});
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  /// h^{d/2} * sum_j K(x_i - x_j) * values_j for every input cell i.
  std::vector<double> apply(std::span<const double> values) const;

  const Index& padded_extent() const noexcept { return padded_; }

 private:
  struct Plans;
  Grid input_;
  std::int64_t radius_cells_;
  Index padded_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  std::vector<std::array<double, 2>> spectrum_;
  std::unique_ptr<Plans> plans_;
};

/// f = q * W on the noise grid (cells outside the grid contribute nothing).
GridField convolve_field(const GridField& noise, const Kernel& kernel);
GridField convolve_field(const GridField& noise, const KernelStencil& stencil);

/// Block-constant version: every cell takes the value of the cell at the
/// eps * Z^d point of its block y + [-eps/2, eps/2)^d.
GridField discretize(const GridField& field, double eps);

/// max |a - b| over cells of `box`.
double sup_difference(const GridField& a, const GridField& b, const Box& box);

/// Samples f, f_r or f_r^eps on a fixed target grid. Noise is drawn on the
/// target extended by the kernel radius on every side, so every target cell
/// sees its full kernel window.
class FieldSampler {
 public:
  FieldSampler(Kernel kernel, Grid target, std::optional<double> eps = std::nullopt,
               const ResourceBudget& budget = {});

  GridField sample(RngState rng) const;
  /// Smooth field and its discretization from the same noise (eps required).
  std::pair<GridField, GridField> sample_pair(RngState rng) const;

  const Grid& grid() const noexcept { return target_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  const std::optional<double>& eps() const noexcept { return eps_; }

 private:
  GridField sample_extended(RngState rng) const;

  Kernel kernel_;
  Grid target_;
  std::optional<double> eps_;
  KernelStencil stencil_;
  Grid noise_grid_;
  CellRange interior_;
  std::unique_ptr<Convolver> convolver_;
};

using Gradient = std::array<double, 3>;
using Hessian = std::array<std::array<double, 3>, 3>;

/// Finite-difference derivatives at spacing h: central in the interior,
/// one-sided at the grid boundary.
Gradient gradient_at(const GridField& field, const Index& k);
Hessian hessian_at(const GridField& field, const Index& k);
double euclidean_norm(const Gradient& g, int dim);
/// Largest absolute eigenvalue of the symmetric d x d leading block.
double operator_norm(const Hessian& h, int dim);

}  // namespace gaussperc
