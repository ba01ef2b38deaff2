#include "gaussperc/critical.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gaussperc/error.hpp"
#include "gaussperc/rng.hpp"
#include "gaussperc/stats.hpp"

namespace gaussperc {
namespace {

constexpr double kRidge = 1e-3;  // per unit of total weight

struct Fit {
  double a = 0.0;
  double b = 0.0;
};

double log_sigmoid(double t) { return t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t)); }

// Penalized log-likelihood with weights n_i and targets y_i.
double objective(const std::vector<double>& z, const std::vector<double>& n, const std::vector<double>& k, double a,
                 double b, double ridge) {
  double ll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double t = a + b * z[i];
    ll += k[i] * log_sigmoid(t) + (n[i] - k[i]) * log_sigmoid(-t);
  }
  return ll - 0.5 * ridge * b * b;
}

Fit fit_logistic(const std::vector<double>& z, const std::vector<double>& n, const std::vector<double>& k) {
  double total = 0.0;
  for (double w : n) total += w;
  const double ridge = kRidge * total;
  Fit f{0.0, 1.0};
  double current = objective(z, n, k, f.a, f.b, ridge);
  for (int iter = 0; iter < 200; ++iter) {
    double ga = 0.0, gb = -ridge * f.b, haa = 0.0, hab = 0.0, hbb = ridge;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(f.a + f.b * z[i])));
      const double r = k[i] - n[i] * p;
      const double w = n[i] * p * (1.0 - p);
      ga += r;
      gb += r * z[i];
      haa += w;
      hab += w * z[i];
      hbb += w * z[i] * z[i];
    }
    const double det = haa * hbb - hab * hab;
    double da = 0.0, db = 0.0;
    if (det > 1e-300) {
      da = (hbb * ga - hab * gb) / det;
      db = (haa * gb - hab * ga) / det;
    } else {
      da = ga / std::max(haa, 1e-12);
      db = gb / std::max(hbb, 1e-12);
    }
    double step = 1.0;
    Fit next = f;
    double value = current;
    for (int half = 0; half < 60; ++half) {
      next = {f.a + step * da, std::max(0.0, f.b + step * db)};
      value = objective(z, n, k, next.a, next.b, ridge);
      if (value >= current) break;
      step *= 0.5;
    }
    const bool done = std::abs(next.a - f.a) + std::abs(next.b - f.b) < 1e-12;
    if (value < current) break;
    f = next;
    current = value;
    if (done) break;
  }
  return f;
}

struct Prepared {
  std::vector<double> z, n, k;
  double mean = 0.0;
  double sd = 1.0;
};

Prepared prepare(std::span<const LevelPoint> scan) {
  Prepared p;
  std::vector<double> levels;
  for (const auto& s : scan) levels.push_back(s.level);
  const auto m = stats::moments(levels);
  p.mean = m.mean;
  p.sd = std::sqrt(m.variance);
  for (const auto& s : scan) {
    p.z.push_back((s.level - p.mean) / p.sd);
    p.n.push_back(s.trials);
    p.k.push_back(s.successes);
  }
  return p;
}

bool straddles(const std::vector<double>& n, const std::vector<double>& k) {
  bool below = false, above = false;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double f = k[i] / n[i];
    below = below || f < 0.5;
    above = above || f > 0.5;
  }
  return below && above;
}

double crossing(const Prepared& p, const Fit& f) {
  if (!(f.b > 0.0)) return NAN;
  return p.mean + p.sd * (-f.a / f.b);
}

}  // namespace

CriticalEstimate estimate_critical_level(std::span<const LevelPoint> scan, const CriticalOptions& options) {
  if (scan.size() < 5) throw ValidationError("scan", "needs at least 5 levels");
  for (const auto& s : scan) {
    if (!std::isfinite(s.level)) throw ValidationError("scan", "levels must be finite");
    if (!(s.trials > 0.0) || !(s.successes >= 0.0) || s.successes > s.trials)
      throw ValidationError("scan", "each level needs trials > 0 and 0 <= successes <= trials");
  }
  const Prepared p = prepare(scan);
  if (!(p.sd > 0.0)) throw ValidationError("scan", "levels must not all coincide");
  if (!straddles(p.n, p.k)) throw ValidationError("scan", "frequencies do not straddle 1/2");

  const Fit fit = fit_logistic(p.z, p.n, p.k);
  CriticalEstimate out;
  out.intercept = fit.a;
  out.slope = fit.b;
  out.level = crossing(p, fit);
  if (!std::isfinite(out.level)) throw ValidationError("scan", "fit is not increasing in the level");

  std::vector<double> boot;
  Philox4x32 rng({options.seed, stream_id(StreamTag::bootstrap, 0)});
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    std::vector<double> k(p.k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
      const auto n = static_cast<std::int64_t>(std::llround(p.n[i]));
      std::binomial_distribution<std::int64_t> draw(std::max<std::int64_t>(n, 1), p.k[i] / p.n[i]);
      k[i] = static_cast<double>(draw(rng)) * p.n[i] / static_cast<double>(std::max<std::int64_t>(n, 1));
    }
    if (!straddles(p.n, k)) continue;
    const double est = crossing(p, fit_logistic(p.z, p.n, k));
    if (std::isfinite(est)) boot.push_back(est);
  }
  out.bootstrap_used = boot.size();
  if (boot.empty()) {
    out.ci_low = out.ci_high = out.level;
  } else {
    const double tail = (1.0 - options.confidence) / 2.0;
    out.ci_low = stats::quantile(boot, tail);
    out.ci_high = stats::quantile(boot, 1.0 - tail);
  }
  return out;
}

}  // namespace gaussperc
