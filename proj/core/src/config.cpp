#include "gaussperc/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gaussperc/error.hpp"

namespace gaussperc {
namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 9> kNames{{
    {ExperimentKind::sample, "sample"},
    {ExperimentKind::events, "events"},
    {ExperimentKind::crossing_scan, "crossing-scan"},
    {ExperimentKind::level_scan, "level-scan"},
    {ExperimentKind::chemdist, "chemdist"},
    {ExperimentKind::s_tail, "s-tail"},
    {ExperimentKind::renorm_scan, "renorm-scan"},
    {ExperimentKind::domination, "domination"},
    {ExperimentKind::stretch, "stretch"},
}};

using ojson = nlohmann::ordered_json;

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

// Rejects keys outside `allowed` so typos never pass silently.
void check_keys(const nlohmann::json& j, const char* where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(where, "must be a JSON object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& item : j.items())
    if (!keys.count(item.key())) throw ValidationError(item.key(), std::string("unknown key in ") + where);
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(key, "has the wrong type");
  }
}

void read_optional(const nlohmann::json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read(j, key, v);
  out = v;
}

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

bool integer_multiple(double a, double h) {
  const double ratio = a / h;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio) && std::round(ratio) >= 1.0;
}

void validate_field(const FieldSpec& f) {
  require(f.dim == 2 || f.dim == 3, "dim", "must be 2 or 3");
  require(finite_positive(f.h), "h", "must be finite and positive");
  require(finite_positive(f.domain), "domain", "must be finite and positive");
  require(f.domain >= 2.0 * f.h, "domain", "must span at least two cells");
  if (f.kernel == KernelKind::polynomial_decay) {
    require(f.beta.has_value(), "beta", "polynomial-decay kernels need beta");
    require(std::isfinite(*f.beta) && *f.beta > f.dim, "beta", "must exceed the dimension");
  } else {
    require(!f.beta.has_value(), "beta", "only polynomial-decay kernels take beta");
  }
  if (f.r) require(std::isfinite(*f.r) && *f.r > 1.0, "r", "truncation radius must exceed 1");
  if (f.eps) {
    require(finite_positive(*f.eps), "eps", "must be finite and positive");
    require(integer_multiple(*f.eps, f.h), "eps", "must be an integer multiple of h");
    require(*f.eps <= f.domain, "eps", "must not exceed the domain side");
  }
}

void validate_levels(const std::vector<double>& levels) {
  require(!levels.empty(), "levels", "at least one level is required");
  for (double l : levels) require(std::isfinite(l), "levels", "levels must be finite");
}

void validate_box(const ExperimentConfig& c) {
  require(std::isfinite(c.event.R) && c.event.R > 1.0, "R", "must exceed 1");
  require(c.event.kappa > 0.0 && c.event.kappa < 1.0, "kappa", "must lie in (0, 1)");
  require(c.event.R * (1.0 + c.event.kappa) <= c.field.domain / 2.0, "R",
          "enlarged box B_{R(1+kappa)} must fit in the domain");
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "sample";
}

ExperimentKind experiment_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw ValidationError("experiment", "unknown experiment '" + std::string(name) + "'");
}

Kernel make_kernel(const FieldSpec& spec) {
  return make_kernel(spec.kernel, spec.dim, spec.beta, spec.r);
}

Grid field_grid(const FieldSpec& spec) {
  const double half = spec.domain / 2.0;
  return Grid::covering(spec.dim, {-half, -half, -half}, {half, half, half}, spec.h);
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  ojson j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;

  ojson f;
  f["kernel"] = std::string(to_string(c.field.kernel));
  f["dim"] = c.field.dim;
  f["beta"] = optional_json(c.field.beta);
  f["r"] = optional_json(c.field.r);
  f["eps"] = optional_json(c.field.eps);
  f["h"] = c.field.h;
  f["domain"] = c.field.domain;
  j["field"] = f;

  ojson e;
  e["R"] = c.event.R;
  e["kappa"] = c.event.kappa;
  e["levels"] = c.event.levels;
  e["radii"] = c.event.radii;
  e["sign"] = c.event.sign;
  j["event"] = e;

  ojson ch;
  ch["s"] = c.chem.s;
  ch["thresholds"] = c.chem.thresholds;
  ch["distances"] = c.chem.distances;
  ch["connected_target"] = c.chem.connected_target;
  ch["max_trials"] = c.chem.max_trials;
  ch["delta"] = c.chem.delta;
  j["chem"] = ch;

  ojson rn;
  rn["p"] = c.renorm.p;
  rn["x_norms"] = c.renorm.x_norms;
  rn["C0"] = c.renorm.C0;
  rn["delta"] = c.renorm.delta;
  rn["n"] = c.renorm.n;
  rn["tail_p"] = optional_json(c.renorm.tail_p);
  rn["sites"] = c.renorm.sites;
  j["renorm"] = rn;

  ojson b;
  b["max_cells"] = c.budget.max_cells;
  b["max_bytes"] = c.budget.max_bytes;
  j["budget"] = b;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  check_keys(j, "config",
             {"experiment", "seed", "trials", "threads", "output_dir", "field", "event", "chem", "renorm", "budget"});
  ExperimentConfig c;
  std::string experiment = std::string(to_string(c.experiment));
  read(j, "experiment", experiment);
  c.experiment = experiment_from_string(experiment);
  read(j, "seed", c.seed);
  read(j, "trials", c.trials);
  read(j, "threads", c.threads);
  read(j, "output_dir", c.output_dir);

  if (j.contains("field")) {
    const auto& f = j.at("field");
    check_keys(f, "field", {"kernel", "dim", "beta", "r", "eps", "h", "domain"});
    std::string kernel = std::string(to_string(c.field.kernel));
    read(f, "kernel", kernel);
    c.field.kernel = kernel_kind_from_string(kernel);
    read(f, "dim", c.field.dim);
    read_optional(f, "beta", c.field.beta);
    read_optional(f, "r", c.field.r);
    read_optional(f, "eps", c.field.eps);
    read(f, "h", c.field.h);
    read(f, "domain", c.field.domain);
  }
  if (j.contains("event")) {
    const auto& e = j.at("event");
    check_keys(e, "event", {"R", "kappa", "levels", "radii", "sign"});
    read(e, "R", c.event.R);
    read(e, "kappa", c.event.kappa);
    read(e, "levels", c.event.levels);
    read(e, "radii", c.event.radii);
    read(e, "sign", c.event.sign);
  }
  if (j.contains("chem")) {
    const auto& ch = j.at("chem");
    check_keys(ch, "chem", {"s", "thresholds", "distances", "connected_target", "max_trials", "delta"});
    read(ch, "s", c.chem.s);
    read(ch, "thresholds", c.chem.thresholds);
    read(ch, "distances", c.chem.distances);
    read(ch, "connected_target", c.chem.connected_target);
    read(ch, "max_trials", c.chem.max_trials);
    read(ch, "delta", c.chem.delta);
  }
  if (j.contains("renorm")) {
    const auto& rn = j.at("renorm");
    check_keys(rn, "renorm", {"p", "x_norms", "C0", "delta", "n", "tail_p", "sites"});
    read(rn, "p", c.renorm.p);
    read(rn, "x_norms", c.renorm.x_norms);
    read(rn, "C0", c.renorm.C0);
    read(rn, "delta", c.renorm.delta);
    read(rn, "n", c.renorm.n);
    read_optional(rn, "tail_p", c.renorm.tail_p);
    read(rn, "sites", c.renorm.sites);
  }
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    check_keys(b, "budget", {"max_cells", "max_bytes"});
    read(b, "max_cells", c.budget.max_cells);
    read(b, "max_bytes", c.budget.max_bytes);
  }
  validate(c);
  return c;
}

std::string serialize(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const ExperimentConfig& c) {
  require(c.trials >= 1, "trials", "must be at least 1");
  require(c.threads >= 1, "threads", "must be at least 1");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  require(c.budget.max_cells >= 1 && c.budget.max_bytes >= 1, "budget", "limits must be positive");
  validate_field(c.field);

  switch (c.experiment) {
    case ExperimentKind::sample:
      break;
    case ExperimentKind::events:
    case ExperimentKind::level_scan:
      validate_levels(c.event.levels);
      validate_box(c);
      break;
    case ExperimentKind::crossing_scan:
      validate_levels(c.event.levels);
      require(!c.event.radii.empty(), "radii", "at least one radius is required");
      for (double R : c.event.radii) {
        require(std::isfinite(R) && R >= 2.0, "radii", "radii must be at least 2");
        require(R <= c.field.domain / 2.0, "radii", "B_R must fit in the domain");
      }
      require(c.event.sign == "below" || c.event.sign == "above", "sign", "must be 'below' or 'above'");
      break;
    case ExperimentKind::chemdist:
      validate_levels(c.event.levels);
      require(!c.chem.distances.empty(), "distances", "at least one distance is required");
      for (double x : c.chem.distances) {
        require(std::isfinite(x) && x > 1.0, "distances", "distances must exceed 1");
        require(x <= c.field.domain / 2.0, "distances", "x must lie in the domain");
      }
      break;
    case ExperimentKind::s_tail:
      validate_levels(c.event.levels);
      require(std::isfinite(c.chem.s) && c.chem.s >= 10.0 * c.field.h, "s", "must be at least 10 h");
      require(c.chem.s <= c.field.domain / 2.0, "s", "B_s must fit in the domain");
      require(!c.chem.thresholds.empty(), "thresholds", "at least one threshold is required");
      for (double t : c.chem.thresholds) require(std::isfinite(t) && t >= 0.0, "thresholds", "must be finite and >= 0");
      break;
    case ExperimentKind::renorm_scan:
      require(!c.renorm.p.empty(), "p", "at least one p is required");
      for (double p : c.renorm.p) require(p > 0.0 && p <= 1.0, "p", "values must lie in (0, 1]");
      require(!c.renorm.x_norms.empty(), "x_norms", "at least one |x| is required");
      for (auto x : c.renorm.x_norms) require(x >= 1, "x_norms", "values must be at least 1");
      require(c.renorm.C0 > 0.0 && std::isfinite(c.renorm.C0), "C0", "must be positive");
      require(c.renorm.delta >= 0.0 && std::isfinite(c.renorm.delta), "delta", "must be nonnegative");
      if (c.renorm.tail_p) {
        require(*c.renorm.tail_p >= 0.0 && *c.renorm.tail_p <= 1.0, "tail_p", "must lie in [0, 1]");
        require(!c.renorm.n.empty(), "n", "at least one n is required");
      }
      break;
    case ExperimentKind::domination: {
      validate_levels(c.event.levels);
      require(std::isfinite(c.event.R) && c.event.R > 1.0, "R", "must exceed 1");
      require(c.event.kappa > 0.0 && c.event.kappa < 1.0, "kappa", "must lie in (0, 1)");
      require(static_cast<int>(c.renorm.sites.size()) == c.field.dim, "sites", "needs one extent per axis");
      for (auto s : c.renorm.sites) require(s >= 2, "sites", "every axis needs at least 2 sites");
      const double span = c.event.R / 10.0 * static_cast<double>(*std::max_element(c.renorm.sites.begin(),
                                                                                   c.renorm.sites.end()) - 1);
      require(span + 2.0 * c.event.R * (1.0 + c.event.kappa) <= c.field.domain, "domain",
              "enlarged site boxes must fit in the domain");
      break;
    }
    case ExperimentKind::stretch:
      validate_levels(c.event.levels);
      require(!c.chem.distances.empty(), "distances", "at least one distance is required");
      for (double x : c.chem.distances) require(std::isfinite(x) && x > 1.0, "distances", "distances must exceed 1");
      require(c.chem.connected_target >= 1, "connected_target", "must be at least 1");
      require(c.chem.max_trials >= 1, "max_trials", "must be at least 1");
      require(c.chem.delta >= 0.0 && std::isfinite(c.chem.delta), "delta", "must be nonnegative");
      break;
  }
}

}  // namespace gaussperc
