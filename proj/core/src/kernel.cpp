#include "gaussperc/kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gaussperc/error.hpp"

namespace gaussperc {
namespace {

constexpr double kPeakFraction = 1e-12;

double smooth_step_half(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

double norm(const Point& v, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += v[a] * v[a];
  return std::sqrt(s);
}

template <class F>
double integrate(F&& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-11);
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  return kind == KernelKind::bargmann_fock ? "bargmann-fock" : "polynomial-decay";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "bargmann-fock") return KernelKind::bargmann_fock;
  if (name == "polynomial-decay") return KernelKind::polynomial_decay;
  throw ValidationError("kernel", "unknown kernel kind '" + std::string(name) + "'");
}

double bump(double t) {
  if (t <= 0.25) return 1.0;
  if (t >= 0.5) return 0.0;
  const double u = (0.5 - t) / 0.25;
  const double g = smooth_step_half(u);
  return g / (g + smooth_step_half(1.0 - u));
}

double Kernel::base_profile(double radius) const noexcept {
  if (kind_ == KernelKind::bargmann_fock) return scale_ * std::exp(-radius * radius);
  return scale_ * std::pow(1.0 + radius * radius, -0.5 * beta_);
}

double Kernel::profile(double radius) const noexcept {
  const double q = base_profile(radius);
  if (!truncation_) return q;
  return q * bump(radius / *truncation_);
}

double Kernel::effective_radius() const noexcept {
  if (kind_ == KernelKind::bargmann_fock) return std::sqrt(-std::log(kPeakFraction));
  return std::sqrt(std::pow(kPeakFraction, -2.0 / beta_) - 1.0);
}

double Kernel::support_radius() const noexcept {
  const double eff = effective_radius();
  return truncation_ ? std::min(0.5 * *truncation_, eff) : eff;
}

Kernel Kernel::truncated(double r) const {
  return make_kernel(kind_, dim_, kind_ == KernelKind::polynomial_decay ? std::optional<double>(beta_) : std::nullopt,
                     r);
}

Kernel make_kernel(KernelKind kind, int dim, std::optional<double> beta, std::optional<double> truncation) {
  if (dim != 2 && dim != 3) throw ValidationError("dim", "must be 2 or 3");
  Kernel k;
  k.kind_ = kind;
  k.dim_ = dim;
  const double d = dim;
  if (kind == KernelKind::bargmann_fock) {
    k.beta_ = std::numeric_limits<double>::infinity();
    k.scale_ = std::pow(2.0 / std::numbers::pi, d / 4.0);
  } else {
    if (!beta) throw ValidationError("beta", "polynomial-decay kernel requires beta");
    if (!(*beta > d) || !std::isfinite(*beta))
      throw ValidationError("beta", "must exceed the dimension (" + std::to_string(dim) + ")");
    k.beta_ = *beta;
    // Integral of (1 + |x|^2)^{-beta} over R^d, so that (q * q)(0) = 1.
    const double mass = std::pow(std::numbers::pi, d / 2.0) * std::exp(std::lgamma(*beta - d / 2.0) - std::lgamma(*beta));
    k.scale_ = 1.0 / std::sqrt(mass);
  }
  if (truncation) {
    if (!(*truncation > 1.0) || !std::isfinite(*truncation))
      throw ValidationError("truncation", "must be finite and greater than 1");
    k.truncation_ = truncation;
  }
  return k;
}

double covariance_exact(const Kernel& kernel, const Point& displacement) {
  const int dim = kernel.dim();
  const double s = norm(displacement, dim);
  if (kernel.kind() == KernelKind::bargmann_fock && !kernel.truncation()) return std::exp(-0.5 * s * s);

  const double upper = kernel.truncation() ? 0.5 * *kernel.truncation() : std::numeric_limits<double>::infinity();
  if (kernel.truncation() && s >= 2.0 * upper) return 0.0;

  if (dim == 2) {
    auto radial = [&](double rho) {
      const double q_rho = kernel.profile(rho);
      if (q_rho == 0.0) return 0.0;
      auto angular = [&](double theta) {
        const double r2 = rho * rho + s * s - 2.0 * rho * s * std::cos(theta);
        return kernel.profile(std::sqrt(std::max(0.0, r2)));
      };
      const double inner = s == 0.0 ? std::numbers::pi * kernel.profile(rho) : integrate(angular, 0.0, std::numbers::pi);
      return 2.0 * rho * q_rho * inner;
    };
    return integrate(radial, 0.0, upper);
  }

  // d = 3: the polar integral reduces to (1 / (rho s)) * int_{|rho-s|}^{rho+s} q(u) u du.
  auto radial = [&](double rho) {
    const double q_rho = kernel.profile(rho);
    if (q_rho == 0.0 || rho == 0.0) return 0.0;
    double inner;
    if (s == 0.0) {
      inner = 2.0 * kernel.profile(rho);
    } else {
      auto shell = [&](double u) { return kernel.profile(u) * u; };
      inner = integrate(shell, std::abs(rho - s), rho + s) / (rho * s);
    }
    return 2.0 * std::numbers::pi * rho * rho * q_rho * inner;
  };
  return integrate(radial, 0.0, upper);
}

double KernelStencil::at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
  const std::int64_t n = side();
  if (dim == 2) return values[static_cast<std::size_t>(i * n + j)];
  return values[static_cast<std::size_t>((i * n + j) * n + k)];
}

KernelStencil sample_kernel(const Kernel& kernel, double spacing) {
  if (!(spacing > 0.0)) throw ValidationError("spacing", "must be positive");
  KernelStencil st;
  st.dim = kernel.dim();
  const double support = kernel.support_radius();
  st.radius_cells = static_cast<std::int64_t>(std::floor(support / spacing + 1e-9));
  const std::int64_t n = st.side();
  const std::int64_t m = st.radius_cells;
  const std::int64_t nk = st.dim == 3 ? n : 1;
  st.values.assign(static_cast<std::size_t>(n * n * nk), 0.0);
  std::size_t idx = 0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t k = 0; k < nk; ++k, ++idx) {
        const double di = static_cast<double>(i - m), dj = static_cast<double>(j - m);
        const double dk = st.dim == 3 ? static_cast<double>(k - m) : 0.0;
        const double r = spacing * std::sqrt(di * di + dj * dj + dk * dk);
        st.values[idx] = r <= support ? kernel.profile(r) : 0.0;
      }
  return st;
}

KernelStencil point_stencil(int dim, double a) {
  KernelStencil st;
  st.dim = dim;
  st.radius_cells = 0;
  st.values = {a};
  return st;
}

}  // namespace gaussperc
