#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "gaussperc/grid.hpp"

namespace gaussperc {

enum class KernelKind { bargmann_fock, polynomial_decay };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

/// Smooth radial cutoff: 1 on t <= 1/4, 0 on t >= 1/2, C-infinity between.
double bump(double t);

/// Radially symmetric, nonnegative convolution kernel q (optionally q * chi_r).
class Kernel {
 public:
  KernelKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  /// Decay exponent; +infinity for Bargmann-Fock (Gaussian tail beats every power).
  double beta() const noexcept { return beta_; }
  const std::optional<double>& truncation() const noexcept { return truncation_; }

  /// q(x) for ||x|| = radius.
  double profile(double radius) const noexcept;
  /// Untruncated profile at `radius`.
  double base_profile(double radius) const noexcept;
  double peak() const noexcept { return profile(0.0); }

  /// Radius where the untruncated profile drops below 1e-12 of its peak.
  double effective_radius() const noexcept;
  /// Radius outside of which the kernel is treated as zero.
  double support_radius() const noexcept;

  /// Same kernel with truncation r applied.
  Kernel truncated(double r) const;

 private:
  friend Kernel make_kernel(KernelKind, int, std::optional<double>, std::optional<double>);
  Kernel() = default;

  KernelKind kind_ = KernelKind::bargmann_fock;
  int dim_ = 2;
  double beta_ = 0.0;
  std::optional<double> truncation_;
  double scale_ = 1.0;
};

/// Builds a kernel. `beta` is required for polynomial-decay and must exceed
/// dim; `truncation`, when present, must exceed 1.
Kernel make_kernel(KernelKind kind, int dim, std::optional<double> beta = std::nullopt,
                   std::optional<double> truncation = std::nullopt);

/// (q * q)(displacement): closed form for the untruncated Bargmann-Fock
/// kernel, adaptive quadrature otherwise.
double covariance_exact(const Kernel& kernel, const Point& displacement);

/// A kernel sampled at cell centers on a (2 * radius_cells + 1)^d cube,
/// axis 0 slowest, with the kernel's center at the middle cell.
struct KernelStencil {
  int dim = 2;
  std::int64_t radius_cells = 0;
  std::vector<double> values;

  std::int64_t side() const noexcept { return 2 * radius_cells + 1; }
  double at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept;
};

KernelStencil sample_kernel(const Kernel& kernel, double spacing);

/// Degenerate single-cell stencil of value `a` (a discrete point mass).
KernelStencil point_stencil(int dim, double a);

}  // namespace gaussperc
