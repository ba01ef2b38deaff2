#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace gaussperc {

/// One row of a level scan: Exist observed in `successes` of `trials`.
struct LevelPoint {
  double level = 0.0;
  double trials = 1.0;
  double successes = 0.0;
};

struct CriticalOptions {
  std::size_t bootstrap = 200;
  double confidence = 0.95;
  std::uint64_t seed = 0;
};

struct CriticalEstimate {
  double level = 0.0;  // where the fitted curve crosses 1/2
  double ci_low = 0.0;
  double ci_high = 0.0;
  double intercept = 0.0;  // logistic fit a + b (l - mean) / sd
  double slope = 0.0;
  std::size_t bootstrap_used = 0;
};

/// Fits sigma(a + b z), z the standardized level, by penalized maximum
/// likelihood (a tiny ridge on b keeps separable scans finite), with b >= 0.
/// The interval comes from a parametric bootstrap resampling each level's
/// count from its observed frequency. Needs >= 5 levels with observed
/// frequencies on both sides of 1/2; throws ValidationError("scan") else.
CriticalEstimate estimate_critical_level(std::span<const LevelPoint> scan, const CriticalOptions& options = {});

}  // namespace gaussperc
