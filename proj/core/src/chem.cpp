#include "gaussperc/chem.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "gaussperc/error.hpp"
#include "gaussperc/parallel.hpp"
#include "gaussperc/stats.hpp"

namespace gaussperc::chem {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Face neighbours of a cell, bounds-checked.
template <class F>
void for_each_face_neighbour(const Grid& g, std::size_t cell, F&& f) {
  const Index k = g.unravel(cell);
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t stride = g.strides()[a];
    if (k[a] > 0) f(cell - stride);
    if (k[a] + 1 < g.extent(a)) f(cell + stride);
  }
}

// Breadth-first sweeps over the occupied cells with a reusable visit stamp.
class Sweeper {
 public:
  explicit Sweeper(const ExcursionSet& set)
      : set_(set), hops_(set.grid().size(), 0), stamp_(set.grid().size(), 0) {}

  // BFS from `source`; on_visit(cell, hops) returns false to stop early.
  template <class OnVisit>
  void run(std::size_t source, OnVisit&& on_visit) {
    ++current_;
    queue_.clear();
    queue_.push_back(source);
    stamp_[source] = current_;
    hops_[source] = 0;
    if (!on_visit(source, 0u)) return;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const std::size_t c = queue_[head];
      const std::uint32_t next = hops_[c] + 1;
      bool stop = false;
      for_each_face_neighbour(set_.grid(), c, [&](std::size_t nb) {
        if (stop || !set_.occupied(nb) || stamp_[nb] == current_) return;
        stamp_[nb] = current_;
        hops_[nb] = next;
        queue_.push_back(nb);
        if (!on_visit(nb, next)) stop = true;
      });
      if (stop) return;
    }
  }

 private:
  const ExcursionSet& set_;
  std::vector<std::uint32_t> hops_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t current_ = 0;
  std::vector<std::size_t> queue_;
};

// Chemical diameter of `targets` inside the set. `is_target` marks them.
ChemDiameter diameter_over(const ExcursionSet& set, std::span<const std::size_t> targets,
                           const std::vector<std::uint8_t>& is_target, Sweeper& sweeper) {
  const double h = set.grid().spacing();
  if (targets.size() <= 1) return {0.0, true};

  auto farthest_from = [&](std::size_t src, std::size_t& found, std::size_t& where) {
    std::uint32_t best = 0;
    found = 0;
    where = src;
    sweeper.run(src, [&](std::size_t cell, std::uint32_t hops) {
      if (is_target[cell]) {
        ++found;
        if (hops >= best) {
          best = hops;
          where = cell;
        }
      }
      return found < targets.size();
    });
    return best;
  };

  std::size_t found = 0, where = 0;
  if (targets.size() <= kExactChemDiameterCells) {
    std::uint32_t best = 0;
    for (std::size_t src : targets) {
      best = std::max(best, farthest_from(src, found, where));
      if (found < targets.size()) return {kInfinity, true};
    }
    return {h * best, true};
  }
  farthest_from(targets.front(), found, where);
  if (found < targets.size()) return {kInfinity, true};
  const std::uint32_t second = farthest_from(where, found, where);
  return {h * second, false};
}

}  // namespace

std::string_view to_string(PathStatus status) {
  switch (status) {
    case PathStatus::connected: return "connected";
    case PathStatus::disconnected: return "disconnected";
    case PathStatus::endpoint_outside: return "endpoint-outside";
  }
  return "disconnected";
}

PathResult chemical_distance(const ExcursionSet& set, const Index& a, const Index& b) {
  const Grid& g = set.grid();
  if (!g.contains(a) || !g.contains(b)) throw ValidationError("endpoint", "endpoints must lie within the grid");
  PathResult result;
  const std::size_t src = g.linear(a);
  const std::size_t dst = g.linear(b);
  if (!set.occupied(src) || !set.occupied(dst)) {
    result.status = PathStatus::endpoint_outside;
    return result;
  }
  if (set.adjacency() == Adjacency::face && set.label(src) != set.label(dst)) {
    result.status = PathStatus::disconnected;
    return result;
  }

  const double h = g.spacing();
  std::vector<double> dist(g.size(), kInfinity);
  std::vector<std::size_t> prev(g.size(), kNone);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[src] = 0.0;
  frontier.push({0.0, src});
  while (!frontier.empty()) {
    const auto [d, c] = frontier.top();
    frontier.pop();
    if (d > dist[c]) continue;
    if (c == dst) break;
    for_each_face_neighbour(g, c, [&](std::size_t nb) {
      if (!set.occupied(nb)) return;
      const double nd = d + h;
      if (nd < dist[nb]) {
        dist[nb] = nd;
        prev[nb] = c;
        frontier.push({nd, nb});
      }
    });
  }
  if (dist[dst] == kInfinity) {
    result.status = PathStatus::disconnected;
    return result;
  }
  result.status = PathStatus::connected;
  result.length = dist[dst];
  for (std::size_t c = dst; c != kNone; c = prev[c]) result.path.push_back(c);
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

ChemDiameter chemical_diameter(const ExcursionSet& set, std::int32_t id) {
  if (id < 0 || static_cast<std::size_t>(id) >= set.component_count())
    throw ValidationError("component", "no component with id " + std::to_string(id));
  const auto cells = set.cells_of(id);
  std::vector<std::uint8_t> is_target(set.grid().size(), 0);
  for (std::size_t c : cells) is_target[c] = 1;
  Sweeper sweeper(set);
  return diameter_over(set, cells, is_target, sweeper);
}

ChemDiameter chemical_S(const ExcursionSet& set, double s, const Point& center) {
  const Grid& g = set.grid();
  const CellRange range = checked_range(g, Box{center, s});
  const ExcursionSet local = set.crop(range);
  ChemDiameter out{0.0, true};
  if (local.component_count() == 0) return out;
  std::vector<std::uint8_t> is_target(g.size(), 0);
  std::vector<std::size_t> targets;
  Sweeper sweeper(set);
  for (std::size_t id = 0; id < local.component_count(); ++id) {
    targets.clear();
    for (std::size_t c : local.cells_of(static_cast<std::int32_t>(id))) {
      const Index k = local.grid().unravel(c);
      targets.push_back(g.linear({k[0] + range.lo[0], k[1] + range.lo[1], k[2] + range.lo[2]}));
    }
    for (std::size_t c : targets) is_target[c] = 1;
    const ChemDiameter d = diameter_over(set, targets, is_target, sweeper);
    for (std::size_t c : targets) is_target[c] = 0;
    out.value = std::max(out.value, d.value);
    out.exact = out.exact && d.exact;
  }
  return out;
}

TailProbe S_tail_probe(const FieldSampler& sampler, double level, double s, std::span<const double> thresholds,
                       std::size_t trials, const TailOptions& options) {
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  if (!(s >= 10.0 * sampler.grid().spacing())) throw ValidationError("s", "must be at least 10 grid spacings");
  checked_range(sampler.grid(), Box{sampler.grid().origin(), s});

  TailProbe probe;
  probe.thresholds.assign(thresholds.begin(), thresholds.end());
  probe.samples.assign(trials, 0.0);
  std::vector<std::uint8_t> exact(trials, 1);
  parallel_for(trials, options.threads, [&](std::size_t t) {
    const GridField f = sampler.sample({options.seed, stream_id(StreamTag::field, t)});
    const ExcursionSet set = excursion_set(f, level, Adjacency::face);
    const ChemDiameter S = chemical_S(set, s, f.grid().origin());
    probe.samples[t] = S.value;
    exact[t] = S.exact ? 1 : 0;
  });
  probe.all_exact = std::all_of(exact.begin(), exact.end(), [](std::uint8_t e) { return e != 0; });
  for (double thr : thresholds) {
    const auto hits = std::count_if(probe.samples.begin(), probe.samples.end(), [&](double v) { return v >= thr; });
    probe.frequencies.push_back(static_cast<double>(hits) / static_cast<double>(trials));
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    if (thresholds[i] > 0.0 && probe.frequencies[i] > 0.0) {
      lx.push_back(std::log(thresholds[i]));
      ly.push_back(std::log(probe.frequencies[i]));
    }
  if (lx.size() >= 2) {
    const auto fit = stats::linear_fit(lx, ly);
    probe.fitted_exponent = -fit.slope;
    probe.fit_r_squared = fit.r_squared;
  }
  return probe;
}

double kappa_exponent(int dim, double beta, double delta) {
  if (!(2.0 * beta - dim > 0.0)) throw ValidationError("beta", "2 beta - d must be positive");
  if (!(beta > dim)) throw ValidationError("beta", "must exceed the dimension");
  if (!(delta >= 0.0)) throw ValidationError("delta", "must be nonnegative");
  const double tail = std::isinf(beta) ? 0.0 : 1.0 / (2.0 * beta - dim);
  return (1.0 + delta) * (dim - 1.0) * (0.5 + tail);
}

double stretch_threshold(double x_norm, double kappa) { return std::pow(std::log(x_norm), kappa); }

ScheduleScale schedule_scale(double x_norm, double delta, double beta, int dim, double spacing) {
  ScheduleScale out;
  const double exponent = std::isinf(beta) ? 0.0 : (1.0 + delta) / (2.0 * beta - dim);
  out.formula = std::pow(std::log(x_norm), exponent);
  out.clamped = out.formula < 4.0 * spacing;
  out.value = out.clamped ? 4.0 * spacing : out.formula;
  return out;
}

StretchResult stretch_experiment(const StretchConfig& config) {
  const int dim = config.kernel.dim();
  if (config.levels.empty()) throw ValidationError("levels", "at least one level is required");
  if (config.distances.empty()) throw ValidationError("distances", "at least one distance is required");
  if (config.max_trials == 0) throw ValidationError("max_trials", "must be at least 1");
  for (double x : config.distances)
    if (!(x > 1.0)) throw ValidationError("distances", "distances must exceed 1 (log must be positive)");
  const double beta = std::isinf(config.beta) ? config.kernel.beta() : config.beta;
  const double kappa = kappa_exponent(dim, beta, config.delta);

  StretchResult result;
  for (double x : config.distances) {
    const double margin = std::max(config.min_margin, config.margin_fraction * x);
    Point lo{-margin, -margin, -margin}, hi{x + margin, margin, margin};
    const Grid grid = Grid::covering(dim, lo, hi, config.spacing);
    std::unique_ptr<FieldSampler> sampler;
    try {
      sampler = std::make_unique<FieldSampler>(config.kernel, grid, std::nullopt, config.budget);
    } catch (const ResourceError& e) {
      std::string dims;
      for (int a = 0; a < dim; ++a) dims += (a ? "x" : "") + std::to_string(grid.extent(a));
      throw ResourceError(e.limit(), "stretch domain " + dims + " cells for |x| = " + std::to_string(x) + ": " +
                                         e.what());
    }
    const Index a = grid.nearest({0.0, 0.0, 0.0});
    const Index b = grid.nearest({x, 0.0, 0.0});
    const double target = stretch_threshold(x, kappa);
    const ScheduleScale sched = schedule_scale(x, config.delta, beta, dim, config.spacing);
    if (sched.clamped)
      spdlog::info("stretch: schedule scale {:.4g} below 4h at |x| = {}, clamped to {}", sched.formula, x,
                   sched.value);

    const std::size_t nl = config.levels.size();
    std::vector<StretchRecord> recs;
    std::vector<std::size_t> connected(nl, 0);
    std::size_t done = 0;
    const std::size_t batch = std::max<std::size_t>(1, config.threads);
    auto satisfied = [&] {
      return std::all_of(connected.begin(), connected.end(),
                         [&](std::size_t c) { return c >= config.connected_target; });
    };
    while (done < config.max_trials && !satisfied()) {
      const std::size_t count = std::min(batch, config.max_trials - done);
      std::vector<StretchRecord> chunk(count * nl);
      parallel_for(count, config.threads, [&](std::size_t i) {
        const std::size_t trial = done + i;
        const GridField f = sampler->sample({config.seed, stream_id(StreamTag::field, trial)});
        for (std::size_t li = 0; li < nl; ++li) {
          const ExcursionSet set = excursion_set(f, config.levels[li], Adjacency::face);
          const PathResult p = chemical_distance(set, a, b);
          StretchRecord& r = chunk[i * nl + li];
          r.seed = config.seed;
          r.trial = trial;
          r.level = config.levels[li];
          r.x_norm = x;
          r.connected = p.status == PathStatus::connected;
          r.d_chem = p.length;
          r.stretch = r.connected ? p.length / x : kInfinity;
          r.kappa_target = target;
        }
      });
      for (const auto& r : chunk) {
        if (r.connected) {
          const auto li = static_cast<std::size_t>(
              std::find(config.levels.begin(), config.levels.end(), r.level) - config.levels.begin());
          ++connected[li];
        }
        recs.push_back(r);
      }
      done += count;
    }

    for (std::size_t li = 0; li < nl; ++li) {
      StretchSummary s;
      s.level = config.levels[li];
      s.x_norm = x;
      s.kappa = kappa;
      s.kappa_target = target;
      s.schedule = sched;
      std::vector<double> stretches;
      for (const auto& r : recs) {
        if (r.level != s.level) continue;
        ++s.trials;
        if (!r.connected) continue;
        ++s.connected;
        stretches.push_back(r.stretch);
        if (r.stretch > target) ++s.exceed;
      }
      if (!stretches.empty()) {
        s.median_stretch = stats::quantile(stretches, 0.5);
        s.q10_stretch = stats::quantile(stretches, 0.1);
        s.q90_stretch = stats::quantile(stretches, 0.9);
        s.max_stretch = *std::max_element(stretches.begin(), stretches.end());
      }
      result.summaries.push_back(s);
    }
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  return result;
}

}  // namespace gaussperc::chem
