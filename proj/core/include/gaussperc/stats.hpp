#pragma once

#include <cstddef>
#include <span>

namespace gaussperc::stats {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments moments(std::span<const double> xs);

/// Sample covariance of (x, y) pairs and the standard error of that estimate.
struct CovarianceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

CovarianceEstimate covariance(std::span<const double> xs, std::span<const double> ys);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys);

/// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
double quantile(std::span<const double> xs, double q);

}  // namespace gaussperc::stats
