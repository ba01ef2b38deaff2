#include "gaussperc/experiments.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>

#include "gaussperc/chem.hpp"
#include "gaussperc/critical.hpp"
#include "gaussperc/csv.hpp"
#include "gaussperc/error.hpp"
#include "gaussperc/excursion.hpp"
#include "gaussperc/field_io.hpp"
#include "gaussperc/parallel.hpp"
#include "gaussperc/plot.hpp"
#include "gaussperc/renorm.hpp"
#include "gaussperc/result_store.hpp"
#include "gaussperc/stats.hpp"

namespace gaussperc {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kGeodesicNote =
    "chemical distances are face-adjacent grid geodesics: an upper bound on the continuum length within sqrt(d)";

// Computes rows for trials in batches and hands them to `emit` in trial order.
template <class Row, class Compute, class Emit>
void stream_trials(std::size_t trials, unsigned threads, Compute&& compute, Emit&& emit) {
  const std::size_t batch = std::max<std::size_t>(1, threads) * 8;
  for (std::size_t begin = 0; begin < trials; begin += batch) {
    const std::size_t count = std::min(batch, trials - begin);
    std::vector<Row> rows(count);
    parallel_for(count, threads, [&](std::size_t i) { rows[i] = compute(begin + i); });
    for (std::size_t i = 0; i < count; ++i) emit(begin + i, rows[i]);
  }
}

FieldSampler make_sampler(const ExperimentConfig& c) {
  return FieldSampler(make_kernel(c.field), field_grid(c.field), c.field.eps, c.budget);
}

RngState field_rng(const ExperimentConfig& c, std::size_t trial) { return {c.seed, stream_id(StreamTag::field, trial)}; }

ojson frequency_json(std::size_t successes, std::size_t trials) {
  const auto w = stats::wilson(successes, trials);
  ojson j;
  j["successes"] = successes;
  j["trials"] = trials;
  j["frequency"] = static_cast<double>(successes) / static_cast<double>(trials);
  j["wilson_low"] = w.low;
  j["wilson_high"] = w.high;
  return j;
}

void write_plot(ResultStore& store, const std::string& name, const std::string& table_name, const PlotSpec& spec) {
  const csv::Table table = csv::read(store.dir() / table_name);
  store.write_text(name, emit_plot(table, spec));
}

// ---- sample ---------------------------------------------------------------

ojson run_sample(const ExperimentConfig& c, ResultStore& store) {
  const FieldSampler sampler = make_sampler(c);
  const GridField f = sampler.sample(field_rng(c, 0));
  store.artifact("field.gpf");
  store.artifact("field.json");
  write_field(f, store.dir() / "field");
  const auto m = stats::moments(f.values());
  ojson s;
  s["cells"] = f.grid().size();
  s["kind"] = std::string(to_string(f.kind()));
  s["mean"] = m.mean;
  s["variance"] = m.variance;
  s["min"] = *std::min_element(f.values().begin(), f.values().end());
  s["max"] = *std::max_element(f.values().begin(), f.values().end());
  return s;
}

// ---- events ---------------------------------------------------------------

struct EventRow {
  std::vector<std::array<bool, 6>> per_level;  // exist, unique, local, small_below, antecedent, violated
};

ojson run_events(const ExperimentConfig& c, ResultStore& store) {
  const FieldSampler sampler = make_sampler(c);
  const BoxSpec box{sampler.grid().origin(), c.event.R, c.event.kappa};
  const auto& levels = c.event.levels;
  csv::Writer out(store.artifact("events.csv"), {"trial", "level", "exist", "unique", "local_uniqueness",
                                                  "small_clusters_below", "duality_violated"});
  std::vector<std::array<std::size_t, 6>> totals(levels.size(), std::array<std::size_t, 6>{});
  stream_trials<EventRow>(
      c.trials, c.threads,
      [&](std::size_t t) {
        const GridField f = sampler.sample(field_rng(c, t));
        EventRow row;
        for (double l : levels) {
          const ExcursionSet set = excursion_set(f, l, Adjacency::face);
          const bool exist = exist_event(set, box);
          const bool unique = unique_event(set, box);
          const DualityReport d = duality_check(f, box, l);
          row.per_level.push_back({exist, unique, exist && unique, d.antecedent, d.consequent, d.violated});
        }
        return row;
      },
      [&](std::size_t t, const EventRow& row) {
        for (std::size_t li = 0; li < levels.size(); ++li) {
          const auto& r = row.per_level[li];
          out.row({static_cast<std::uint64_t>(t), levels[li], r[0], r[1], r[2], r[3], r[5]});
          for (int k = 0; k < 6; ++k) totals[li][static_cast<std::size_t>(k)] += r[static_cast<std::size_t>(k)];
        }
        out.flush();
      });

  csv::Writer sum(store.artifact("events_summary.csv"),
                  {"level", "trials", "exist", "unique", "local_uniqueness", "small_clusters_below",
                   "duality_violations"});
  ojson s;
  s["R"] = c.event.R;
  s["kappa"] = c.event.kappa;
  s["levels"] = ojson::array();
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto& t = totals[li];
    const double n = static_cast<double>(c.trials);
    sum.row({levels[li], static_cast<std::uint64_t>(c.trials), t[0] / n, t[1] / n, t[2] / n, t[3] / n,
             static_cast<std::uint64_t>(t[5])});
    ojson l;
    l["level"] = levels[li];
    l["exist"] = frequency_json(t[0], c.trials);
    l["unique"] = frequency_json(t[1], c.trials);
    l["local_uniqueness"] = frequency_json(t[2], c.trials);
    l["small_clusters_below"] = frequency_json(t[3], c.trials);
    l["duality_violations"] = t[5];
    s["levels"].push_back(l);
  }
  sum.flush();
  return s;
}

// ---- crossing-scan ----------------------------------------------------------

ojson run_crossing_scan(const ExperimentConfig& c, ResultStore& store) {
  const FieldSampler sampler = make_sampler(c);
  CrossingOptions opt;
  opt.sign = c.event.sign == "above" ? SignSet::above : SignSet::below;
  opt.adjacency = opt.sign == SignSet::above ? Adjacency::face : Adjacency::star;
  opt.seed = c.seed;
  opt.threads = c.threads;
  csv::Writer out(store.artifact("crossing.csv"),
                  {"level", "R", "trials", "crossings", "frequency", "wilson_low", "wilson_high"});
  ojson s;
  s["sign"] = c.event.sign;
  s["adjacency"] = std::string(to_string(opt.adjacency));
  s["levels"] = ojson::array();
  for (double l : c.event.levels) {
    const auto freq = crossing_probe(sampler, l, c.event.radii, c.trials, opt);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const auto hits = static_cast<std::size_t>(std::llround(freq[i] * static_cast<double>(c.trials)));
      const auto w = stats::wilson(hits, c.trials);
      out.row({l, c.event.radii[i], static_cast<std::uint64_t>(c.trials), static_cast<std::uint64_t>(hits), freq[i],
               w.low, w.high});
      if (freq[i] > 0.0) {
        xs.push_back(c.event.radii[i]);
        ys.push_back(std::log(freq[i]));
      }
    }
    ojson lj;
    lj["level"] = l;
    lj["frequency"] = freq;
    if (xs.size() >= 2) {
      const auto fit = stats::linear_fit(xs, ys);
      lj["decay_rate"] = -fit.slope;
      lj["fit_r_squared"] = fit.r_squared;
    } else {
      lj["decay_rate"] = nullptr;
      lj["fit_r_squared"] = nullptr;
    }
    s["levels"].push_back(lj);
  }
  out.flush();
  PlotSpec p;
  p.x = "R";
  p.y = "frequency";
  p.series = "level";
  p.style = "line";
  p.log_y = true;
  p.title = "crossing frequency";
  write_plot(store, "crossing.svg", "crossing.csv", p);
  return s;
}

// ---- level-scan -------------------------------------------------------------

ojson run_level_scan(const ExperimentConfig& c, ResultStore& store) {
  const FieldSampler sampler = make_sampler(c);
  const BoxSpec box{sampler.grid().origin(), c.event.R, c.event.kappa};
  const auto& levels = c.event.levels;
  std::vector<std::size_t> hits(levels.size(), 0);
  csv::Writer trials_out(store.artifact("level_trials.csv"), {"trial", "level", "exist"});
  stream_trials<std::vector<std::uint8_t>>(
      c.trials, c.threads,
      [&](std::size_t t) {
        const GridField f = sampler.sample(field_rng(c, t));
        std::vector<std::uint8_t> row;
        for (double l : levels) row.push_back(exist_event(excursion_set(f, l, Adjacency::face), box) ? 1 : 0);
        return row;
      },
      [&](std::size_t t, const std::vector<std::uint8_t>& row) {
        for (std::size_t li = 0; li < levels.size(); ++li) {
          trials_out.row({static_cast<std::uint64_t>(t), levels[li], row[li] != 0});
          hits[li] += row[li];
        }
        trials_out.flush();
      });

  csv::Writer scan(store.artifact("level_scan.csv"),
                   {"level", "trials", "successes", "frequency", "wilson_low", "wilson_high"});
  std::vector<LevelPoint> points;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto w = stats::wilson(hits[li], c.trials);
    const double freq = static_cast<double>(hits[li]) / static_cast<double>(c.trials);
    scan.row({levels[li], static_cast<std::uint64_t>(c.trials), static_cast<std::uint64_t>(hits[li]), freq, w.low,
              w.high});
    points.push_back({levels[li], static_cast<double>(c.trials), static_cast<double>(hits[li])});
  }
  scan.flush();

  ojson s;
  s["R"] = c.event.R;
  s["event"] = "exist";
  try {
    CriticalOptions opt;
    opt.seed = c.seed;
    const auto est = estimate_critical_level(points, opt);
    ojson e;
    e["estimate"] = est.level;
    e["ci_low"] = est.ci_low;
    e["ci_high"] = est.ci_high;
    e["intercept"] = est.intercept;
    e["slope"] = est.slope;
    e["bootstrap_used"] = est.bootstrap_used;
    s["critical_level"] = e;
  } catch (const ValidationError& e) {
    s["critical_level"] = nullptr;
    s["critical_level_error"] = e.what();
  }
  PlotSpec p;
  p.x = "level";
  p.y = "frequency";
  p.style = "line";
  p.title = "exist frequency";
  write_plot(store, "level_scan.svg", "level_scan.csv", p);
  return s;
}

// ---- chemdist ---------------------------------------------------------------

struct ChemRow {
  std::vector<chem::PathResult> results;  // level-major, then distance
};

ojson run_chemdist(const ExperimentConfig& c, ResultStore& store) {
  const FieldSampler sampler = make_sampler(c);
  const Grid& g = sampler.grid();
  const Index a = g.nearest({0.0, 0.0, 0.0});
  std::vector<Index> targets;
  for (double x : c.chem.distances) targets.push_back(g.nearest({x, 0.0, 0.0}));
  const auto& levels = c.event.levels;
  const std::size_t nx = targets.size();
  std::vector<std::vector<double>> lengths(levels.size() * nx);

  csv::Writer out(store.artifact("chemdist.csv"), {"trial", "level", "x_norm", "status", "d_chem", "stretch"});
  stream_trials<ChemRow>(
      c.trials, c.threads,
      [&](std::size_t t) {
        const GridField f = sampler.sample(field_rng(c, t));
        ChemRow row;
        for (double l : levels) {
          const ExcursionSet set = excursion_set(f, l, Adjacency::face);
          for (const Index& b : targets) {
            auto r = chem::chemical_distance(set, a, b);
            r.path.clear();
            row.results.push_back(std::move(r));
          }
        }
        return row;
      },
      [&](std::size_t t, const ChemRow& row) {
        for (std::size_t li = 0; li < levels.size(); ++li)
          for (std::size_t xi = 0; xi < nx; ++xi) {
            const auto& r = row.results[li * nx + xi];
            const double x = c.chem.distances[xi];
            out.row({static_cast<std::uint64_t>(t), levels[li], x, std::string(chem::to_string(r.status)), r.length,
                     r.length / x});
            if (r.status == chem::PathStatus::connected) lengths[li * nx + xi].push_back(r.length);
          }
        out.flush();
      });

  csv::Writer sum(store.artifact("chemdist_summary.csv"),
                  {"level", "x_norm", "trials", "connected", "median_d_chem", "median_stretch"});
  ojson s;
  s["note"] = kGeodesicNote;
  s["rows"] = ojson::array();
  for (std::size_t li = 0; li < levels.size(); ++li)
    for (std::size_t xi = 0; xi < nx; ++xi) {
      const auto& L = lengths[li * nx + xi];
      const double x = c.chem.distances[xi];
      const double med = L.empty() ? chem::kInfinity : stats::quantile(L, 0.5);
      sum.row({levels[li], x, static_cast<std::uint64_t>(c.trials), static_cast<std::uint64_t>(L.size()), med,
               med / x});
      ojson r;
      r["level"] = levels[li];
      r["x_norm"] = x;
      r["connected"] = L.size();
      r["median_d_chem"] = json_number(med);
      s["rows"].push_back(r);
    }
  sum.flush();
  return s;
}

// ---- s-tail -----------------------------------------------------------------

ojson run_s_tail(const ExperimentConfig& c, ResultStore& store) {
  const FieldSampler sampler = make_sampler(c);
  chem::TailOptions opt{c.seed, c.threads};
  csv::Writer tail(store.artifact("s_tail.csv"), {"level", "threshold", "frequency"});
  csv::Writer samples(store.artifact("s_samples.csv"), {"level", "trial", "S"});
  ojson s;
  s["s"] = c.chem.s;
  s["note"] = kGeodesicNote;
  s["levels"] = ojson::array();
  for (double l : c.event.levels) {
    const auto probe = chem::S_tail_probe(sampler, l, c.chem.s, c.chem.thresholds, c.trials, opt);
    for (std::size_t i = 0; i < probe.thresholds.size(); ++i)
      tail.row({l, probe.thresholds[i], probe.frequencies[i]});
    for (std::size_t t = 0; t < probe.samples.size(); ++t)
      samples.row({l, static_cast<std::uint64_t>(t), probe.samples[t]});
    ojson lj;
    lj["level"] = l;
    lj["all_exact"] = probe.all_exact;
    lj["fitted_exponent"] = json_number(probe.fitted_exponent);
    lj["fit_r_squared"] = json_number(probe.fit_r_squared);
    s["levels"].push_back(lj);
  }
  tail.flush();
  samples.flush();
  return s;
}

// ---- renorm-scan ------------------------------------------------------------

ojson run_renorm_scan(const ExperimentConfig& c, ResultStore& store) {
  renorm::StructureParams params{c.renorm.C0, c.renorm.delta};
  renorm::ScanOptions opt{c.field.dim, c.seed, c.threads};
  const auto rows = renorm::structure_probability_scan(c.renorm.p, c.renorm.x_norms, params, c.trials, opt);
  csv::Writer out(store.artifact("structure.csv"), {"p", "x_norm", "trials", "successes", "wilson_low", "wilson_high"});
  for (const auto& r : rows)
    out.row({r.p, static_cast<std::int64_t>(r.x_norm), static_cast<std::uint64_t>(r.trials),
             static_cast<std::uint64_t>(r.successes), r.wilson_low, r.wilson_high});
  out.flush();

  ojson s;
  s["C0"] = c.renorm.C0;
  s["delta"] = c.renorm.delta;
  // Smallest scanned p whose success frequency reaches 0.95, per |x|.
  ojson thresholds = ojson::array();
  for (std::int64_t x : c.renorm.x_norms) {
    std::optional<double> best;
    for (const auto& r : rows)
      if (r.x_norm == x && static_cast<double>(r.successes) >= 0.95 * static_cast<double>(r.trials))
        if (!best || r.p < *best) best = r.p;
    ojson t;
    t["x_norm"] = x;
    t["p_threshold_095"] = best ? ojson(*best) : ojson(nullptr);
    thresholds.push_back(t);
  }
  s["thresholds"] = thresholds;

  if (c.renorm.tail_p) {
    renorm::TailOptions topt{c.seed, c.threads};
    const auto tail = renorm::closed_cluster_tail(*c.renorm.tail_p, c.field.dim, c.renorm.n, c.trials, topt);
    csv::Writer t(store.artifact("closed_tail.csv"), {"n", "count", "frequency"});
    for (std::size_t i = 0; i < tail.n.size(); ++i)
      t.row({tail.n[i], static_cast<std::uint64_t>(tail.counts[i]), tail.frequency[i]});
    t.flush();
    ojson tj;
    tj["p"] = *c.renorm.tail_p;
    tj["rate"] = json_number(tail.rate);
    tj["r_squared"] = json_number(tail.r_squared);
    s["closed_tail"] = tj;
  }
  PlotSpec p;
  p.x = "p";
  p.y = "successes";
  p.series = "x_norm";
  p.style = "line";
  p.title = "global structure successes";
  write_plot(store, "structure.svg", "structure.csv", p);
  return s;
}

// ---- domination -------------------------------------------------------------

ojson run_domination(const ExperimentConfig& c, ResultStore& store) {
  const Kernel kernel = make_kernel(c.field);
  Index extent{1, 1, 1};
  for (int a = 0; a < c.field.dim; ++a) extent[a] = c.renorm.sites[static_cast<std::size_t>(a)];
  const Grid sites = renorm::site_lattice(c.field.dim, extent, c.event.R);
  const Grid domain = renorm::site_domain(sites, c.event.R, c.event.kappa, c.field.h);
  const FieldSampler sampler(kernel, domain, c.field.eps, c.budget);
  renorm::CoarseGrainSpec spec;
  spec.R = c.event.R;
  spec.level = c.event.levels.front();
  spec.kappa = c.event.kappa;
  spec.extent = extent;
  auto mu = [&](std::size_t t) { return renorm::coarse_grain(sampler, spec, field_rng(c, t)); };
  const double range = kernel.truncation() ? *kernel.truncation() : 2.0 * kernel.support_radius();
  const std::int64_t M = renorm::dependence_range_sites(range, c.event.R, c.event.kappa);
  renorm::DominationOptions opt;
  opt.seed = c.seed;
  opt.threads = c.threads;
  const auto rep = renorm::domination_probe(mu, renorm::crossing_event(0), std::nullopt, M, c.trials, opt);

  csv::Writer out(store.artifact("domination.csv"),
                  {"event", "p_hat", "M", "alpha", "q", "trials", "mu_successes", "pi_successes", "p_mu", "p_pi",
                   "pooled_se", "holds"});
  out.row({std::string("crossing"), rep.p_hat, static_cast<std::int64_t>(rep.M), rep.alpha, rep.q,
           static_cast<std::uint64_t>(rep.trials), static_cast<std::uint64_t>(rep.mu_successes),
           static_cast<std::uint64_t>(rep.pi_successes), rep.p_mu, rep.p_pi, rep.pooled_se, rep.holds});
  out.flush();
  store.write_json("site_configuration.json", mu(0).to_json());

  ojson s;
  s["p_hat"] = rep.p_hat;
  s["M"] = rep.M;
  s["alpha"] = rep.alpha;
  s["q"] = rep.q;
  s["p_mu"] = rep.p_mu;
  s["p_pi"] = rep.p_pi;
  s["pooled_se"] = rep.pooled_se;
  s["holds"] = rep.holds;
  s["dependence_range"] = range;
  return s;
}

// ---- stretch ----------------------------------------------------------------

ojson run_stretch(const ExperimentConfig& c, ResultStore& store) {
  chem::StretchConfig sc;
  sc.kernel = make_kernel(c.field);
  sc.spacing = c.field.h;
  sc.levels = c.event.levels;
  sc.distances = c.chem.distances;
  sc.connected_target = c.chem.connected_target;
  sc.max_trials = c.chem.max_trials;
  sc.delta = c.chem.delta;
  sc.beta = sc.kernel.beta();
  sc.seed = c.seed;
  sc.threads = c.threads;
  sc.budget = c.budget;
  const auto result = chem::stretch_experiment(sc);

  csv::Writer rec(store.artifact("stretch_records.csv"),
                  {"seed", "trial", "level", "x_norm", "connected", "d_chem", "stretch", "kappa_target"});
  for (const auto& r : result.records)
    rec.row({r.seed, static_cast<std::uint64_t>(r.trial), r.level, r.x_norm, r.connected, r.d_chem, r.stretch,
             r.kappa_target});
  rec.flush();
  csv::Writer sum(store.artifact("stretch_summary.csv"),
                  {"level", "x_norm", "trials", "connected", "exceed", "exceed_given_connected",
                   "exceed_unconditional", "kappa", "kappa_target", "median_stretch", "q10_stretch", "q90_stretch",
                   "max_stretch", "schedule_scale", "schedule_clamped"});
  ojson s;
  s["note"] = kGeodesicNote;
  s["rows"] = ojson::array();
  for (const auto& x : result.summaries) {
    sum.row({x.level, x.x_norm, static_cast<std::uint64_t>(x.trials), static_cast<std::uint64_t>(x.connected),
             static_cast<std::uint64_t>(x.exceed), x.exceed_given_connected(), x.exceed_unconditional(), x.kappa,
             x.kappa_target, x.median_stretch, x.q10_stretch, x.q90_stretch, x.max_stretch, x.schedule.value,
             x.schedule.clamped});
    ojson r;
    r["level"] = x.level;
    r["x_norm"] = x.x_norm;
    r["connected"] = x.connected;
    r["exceed_given_connected"] = x.exceed_given_connected();
    r["schedule_formula"] = x.schedule.formula;
    r["schedule_clamped"] = x.schedule.clamped;
    s["rows"].push_back(r);
  }
  sum.flush();

  PlotSpec p;
  p.x = "x_norm";
  p.y = "q90_stretch";
  p.log_x = true;
  p.title = "stretch q90 vs log(x)^kappa";
  ReferenceCurve ref;
  ref.kind = "stretch-threshold";
  ref.dim = c.field.dim;
  if (std::isfinite(sc.kernel.beta())) ref.beta = sc.kernel.beta();
  ref.delta = c.chem.delta;
  p.reference = ref;
  write_plot(store, "stretch.svg", "stretch_summary.csv", p);
  return s;
}

}  // namespace

ojson json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

fs::path resolve_output_root(const ExperimentConfig& config, const std::optional<fs::path>& cli_out) {
  if (cli_out) return *cli_out;
  if (const char* env = std::getenv("GAUSSPERC_OUT"); env && *env) return env;
  return config.output_dir;
}

RunResult run(const ExperimentConfig& config, const fs::path& root) {
  validate(config);
  ResultStore store(root, config);
  spdlog::info("run {} ({}) -> {}", store.id(), to_string(config.experiment), store.dir().string());
  ojson summary;
  switch (config.experiment) {
    case ExperimentKind::sample: summary = run_sample(config, store); break;
    case ExperimentKind::events: summary = run_events(config, store); break;
    case ExperimentKind::crossing_scan: summary = run_crossing_scan(config, store); break;
    case ExperimentKind::level_scan: summary = run_level_scan(config, store); break;
    case ExperimentKind::chemdist: summary = run_chemdist(config, store); break;
    case ExperimentKind::s_tail: summary = run_s_tail(config, store); break;
    case ExperimentKind::renorm_scan: summary = run_renorm_scan(config, store); break;
    case ExperimentKind::domination: summary = run_domination(config, store); break;
    case ExperimentKind::stretch: summary = run_stretch(config, store); break;
  }
  ojson full;
  full["experiment"] = std::string(to_string(config.experiment));
  full["run_id"] = store.id();
  full["results"] = summary;
  store.write_json("summary.json", full);
  store.finalize();
  return {store.id(), store.dir(), store.artifacts(), full};
}

}  // namespace gaussperc
