#include "gaussperc/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaussperc/error.hpp"
#include "gaussperc/parallel.hpp"

namespace gaussperc {
namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Neighbours preceding a cell in linear order.
std::vector<Index> backward_offsets(int dim, Adjacency adjacency) {
  std::vector<Index> out;
  for (const Index& d : neighbour_offsets(dim, adjacency)) {
    for (int a = 0; a < 3; ++a) {
      if (d[a] < 0) {
        out.push_back(d);
        break;
      }
      if (d[a] > 0) break;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Adjacency adjacency) { return adjacency == Adjacency::face ? "face" : "star"; }

std::string_view to_string(SignSet sign) { return sign == SignSet::above ? "above" : "below"; }

std::vector<Index> neighbour_offsets(int dim, Adjacency adjacency) {
  std::vector<Index> out;
  const std::int64_t zr = dim == 3 ? 1 : 0;
  for (std::int64_t i = -1; i <= 1; ++i)
    for (std::int64_t j = -1; j <= 1; ++j)
      for (std::int64_t k = -zr; k <= zr; ++k) {
        const std::int64_t nonzero = (i != 0) + (j != 0) + (k != 0);
        if (nonzero == 0) continue;
        if (adjacency == Adjacency::face && nonzero != 1) continue;
        out.push_back({i, j, k});
      }
  return out;
}

ExcursionSet ExcursionSet::from_mask(const Grid& grid, std::vector<std::uint8_t> occupied, double level,
                                     Adjacency adjacency) {
  if (occupied.size() != grid.size()) throw ValidationError("occupied", "mask length does not match grid");
  ExcursionSet s(grid);
  s.level_ = level;
  s.adjacency_ = adjacency;
  s.occupied_ = std::move(occupied);

  const std::size_t n = grid.size();
  const Index& e = grid.extent();
  const auto offsets = backward_offsets(grid.dim(), adjacency);
  UnionFind uf(n);
  std::size_t l = 0;
  for (std::int64_t i = 0; i < e[0]; ++i)
    for (std::int64_t j = 0; j < e[1]; ++j)
      for (std::int64_t k = 0; k < e[2]; ++k, ++l) {
        if (!s.occupied_[l]) continue;
        for (const Index& d : offsets) {
          const Index nb{i + d[0], j + d[1], k + d[2]};
          if (!grid.contains(nb)) continue;
          const std::size_t nl = grid.linear(nb);
          if (s.occupied_[nl]) uf.unite(l, nl);
        }
      }

  s.labels_.assign(n, kEmpty);
  std::vector<std::int32_t> root_label(n, kEmpty);
  std::vector<std::size_t> counts;
  for (std::size_t c = 0; c < n; ++c) {
    if (!s.occupied_[c]) continue;
    const std::size_t r = uf.find(c);
    if (root_label[r] == kEmpty) {
      root_label[r] = static_cast<std::int32_t>(counts.size());
      counts.push_back(0);
    }
    s.labels_[c] = root_label[r];
    ++counts[static_cast<std::size_t>(root_label[r])];
  }

  s.offsets_.assign(counts.size() + 1, 0);
  for (std::size_t id = 0; id < counts.size(); ++id) s.offsets_[id + 1] = s.offsets_[id] + counts[id];
  s.members_.resize(s.offsets_.back());
  std::vector<std::size_t> fill(s.offsets_.begin(), s.offsets_.end() - 1);
  for (std::size_t c = 0; c < n; ++c)
    if (s.labels_[c] != kEmpty) s.members_[fill[static_cast<std::size_t>(s.labels_[c])]++] = c;

  s.components_.resize(counts.size());
  for (std::size_t id = 0; id < counts.size(); ++id) {
    Component& comp = s.components_[id];
    const auto cells = s.cells_of(static_cast<std::int32_t>(id));
    comp.cells = cells.size();
    comp.lo = comp.hi = grid.unravel(cells.front());
    for (std::size_t c : cells) {
      const Index k = grid.unravel(c);
      for (int a = 0; a < 3; ++a) {
        comp.lo[a] = std::min(comp.lo[a], k[a]);
        comp.hi[a] = std::max(comp.hi[a], k[a]);
      }
    }
    comp.diameter = euclidean_diameter(grid, cells);
  }
  return s;
}

std::span<const std::size_t> ExcursionSet::cells_of(std::int32_t id) const noexcept {
  const auto u = static_cast<std::size_t>(id);
  return {members_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
}

bool ExcursionSet::diameter_at_least(std::int32_t id, double threshold) const {
  const Diameter& d = components_[static_cast<std::size_t>(id)].diameter;
  if (d.lower >= threshold) return true;
  if (d.upper < threshold) return false;
  return exact_euclidean_diameter(grid_, cells_of(id)) >= threshold;
}

double ExcursionSet::max_diameter() const noexcept {
  double best = 0.0;
  for (const auto& c : components_) best = std::max(best, c.diameter.upper);
  return best;
}

ExcursionSet ExcursionSet::crop(const CellRange& range) const {
  if (!range_inside(grid_, range)) throw ValidationError("box", "crop range leaves the grid");
  const Grid sub = grid_.sub_grid(range.lo, range.hi);
  std::vector<std::uint8_t> mask;
  mask.reserve(sub.size());
  for (std::int64_t i = range.lo[0]; i < range.hi[0]; ++i)
    for (std::int64_t j = range.lo[1]; j < range.hi[1]; ++j)
      for (std::int64_t k = range.lo[2]; k < range.hi[2]; ++k) mask.push_back(occupied_[grid_.linear({i, j, k})]);
  return from_mask(sub, std::move(mask), level_, adjacency_);
}

ExcursionSet excursion_set(const GridField& field, double level, Adjacency adjacency) {
  if (!std::isfinite(level)) throw ValidationError("level", "must be finite");
  std::vector<std::uint8_t> mask(field.grid().size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = field[i] >= -level ? 1 : 0;
  return ExcursionSet::from_mask(field.grid(), std::move(mask), level, adjacency);
}

ExcursionSet lower_excursion_set(const GridField& field, double level, Adjacency adjacency) {
  if (!std::isfinite(level)) throw ValidationError("level", "must be finite");
  std::vector<std::uint8_t> mask(field.grid().size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = field[i] <= -level ? 1 : 0;
  return ExcursionSet::from_mask(field.grid(), std::move(mask), level, adjacency);
}

void BoxSpec::validate() const {
  if (!(R > 1.0) || !std::isfinite(R)) throw ValidationError("R", "box half-side must exceed 1");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ValidationError("kappa", "must lie in (0, 1)");
}

CellRange checked_range(const Grid& grid, const Box& box) {
  const CellRange r = cells_in_box(grid, box);
  if (!range_inside(grid, r)) throw ValidationError("box", "box does not fit inside the grid domain");
  return r;
}

bool exist_event(const ExcursionSet& set, const BoxSpec& box) {
  box.validate();
  const ExcursionSet sub = set.crop(checked_range(set.grid(), box.inner()));
  const Grid& g = sub.grid();
  if (sub.component_count() == 0) return false;
  std::vector<std::uint8_t> touch(sub.component_count());
  for (int axis = 0; axis < g.dim(); ++axis) {
    std::fill(touch.begin(), touch.end(), 0);
    const std::int64_t last = g.extent(axis) - 1;
    bool crossed = false;
    for (std::size_t c = 0; c < g.size() && !crossed; ++c) {
      const std::int32_t lab = sub.label(c);
      if (lab == ExcursionSet::kEmpty) continue;
      const std::int64_t pos = g.unravel(c)[axis];
      auto& t = touch[static_cast<std::size_t>(lab)];
      if (pos == 0) t |= 1;
      if (pos == last) t |= 2;
      crossed = t == 3;
    }
    if (!crossed) return false;
  }
  return true;
}

bool unique_event(const ExcursionSet& set, const BoxSpec& box) {
  box.validate();
  const CellRange inner = checked_range(set.grid(), box.inner());
  const CellRange outer = checked_range(set.grid(), box.enlarged());
  const ExcursionSet sub = set.crop(inner);
  const ExcursionSet big = set.crop(outer);
  const double threshold = box.kappa * box.R;
  std::int32_t common = ExcursionSet::kEmpty;
  for (std::size_t id = 0; id < sub.component_count(); ++id) {
    const auto lab = static_cast<std::int32_t>(id);
    if (!sub.diameter_at_least(lab, threshold)) continue;
    const Index local = sub.grid().unravel(sub.cells_of(lab).front());
    Index in_big{0, 0, 0};
    for (int a = 0; a < 3; ++a) in_big[a] = local[a] + inner.lo[a] - outer.lo[a];
    const std::int32_t merged = big.label(big.grid().linear(in_big));
    if (common == ExcursionSet::kEmpty) {
      common = merged;
    } else if (merged != common) {
      return false;
    }
  }
  return true;
}

bool local_uniqueness(const ExcursionSet& set, const BoxSpec& box) {
  return exist_event(set, box) && unique_event(set, box);
}

bool small_clusters_property(const ExcursionSet& set, const BoxSpec& box) {
  box.validate();
  const ExcursionSet big = set.crop(checked_range(set.grid(), box.enlarged()));
  const double threshold = box.kappa * box.R;
  for (std::size_t id = 0; id < big.component_count(); ++id)
    if (big.diameter_at_least(static_cast<std::int32_t>(id), threshold)) return false;
  return true;
}

bool crosses_to_boundary(const ExcursionSet& set, const Point& center, double R) {
  if (!(R >= 1.0)) throw ValidationError("R", "must be at least 1");
  const CellRange outer = checked_range(set.grid(), Box{center, R});
  const ExcursionSet sub = set.crop(outer);
  const Grid& g = sub.grid();
  std::vector<std::uint8_t> seeds(sub.component_count(), 0);
  const CellRange unit = cells_in_box(g, Box{center, 1.0});
  bool any = false;
  for (std::int64_t i = std::max<std::int64_t>(unit.lo[0], 0); i < std::min(unit.hi[0], g.extent(0)); ++i)
    for (std::int64_t j = std::max<std::int64_t>(unit.lo[1], 0); j < std::min(unit.hi[1], g.extent(1)); ++j)
      for (std::int64_t k = std::max<std::int64_t>(unit.lo[2], 0); k < std::min(unit.hi[2], g.extent(2)); ++k) {
        const std::int32_t lab = sub.label(g.linear({i, j, k}));
        if (lab != ExcursionSet::kEmpty) {
          seeds[static_cast<std::size_t>(lab)] = 1;
          any = true;
        }
      }
  if (!any) return false;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const std::int32_t lab = sub.label(c);
    if (lab == ExcursionSet::kEmpty || !seeds[static_cast<std::size_t>(lab)]) continue;
    const Index k = g.unravel(c);
    for (int a = 0; a < g.dim(); ++a)
      if (k[a] == 0 || k[a] == g.extent(a) - 1) return true;
  }
  return false;
}

std::vector<double> crossing_probe(const FieldSampler& sampler, double level, std::span<const double> radii,
                                   std::size_t trials, const CrossingOptions& options) {
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  for (double R : radii) {
    if (!(R >= 2.0)) throw ValidationError("R", "crossing radii must be at least 2");
    checked_range(sampler.grid(), Box{sampler.grid().origin(), R});
  }
  std::vector<std::uint8_t> hits(trials * radii.size(), 0);
  parallel_for(trials, options.threads, [&](std::size_t t) {
    const GridField f = sampler.sample({options.seed, stream_id(StreamTag::field, t)});
    const ExcursionSet set = options.sign == SignSet::above ? excursion_set(f, level, options.adjacency)
                                                            : lower_excursion_set(f, level, options.adjacency);
    for (std::size_t r = 0; r < radii.size(); ++r)
      hits[t * radii.size() + r] = crosses_to_boundary(set, f.grid().origin(), radii[r]) ? 1 : 0;
  });
  std::vector<double> freq(radii.size(), 0.0);
  for (std::size_t t = 0; t < trials; ++t)
    for (std::size_t r = 0; r < radii.size(); ++r) freq[r] += hits[t * radii.size() + r];
  for (double& f : freq) f /= static_cast<double>(trials);
  return freq;
}

DualityReport duality_check(const GridField& field, const BoxSpec& box, double level) {
  box.validate();
  const GridField local = field.crop(checked_range(field.grid(), box.enlarged()));
  const ExcursionSet lower = lower_excursion_set(local, level, Adjacency::star);
  const ExcursionSet upper = excursion_set(local, level, Adjacency::face);
  DualityReport report;
  report.antecedent = small_clusters_property(lower, box);
  report.consequent = local_uniqueness(upper, box);
  report.violated = report.antecedent && !report.consequent;
  return report;
}

double certified_box_size(double lambda, double k, int dim) {
  if (!(k > lambda && lambda > 0.0)) return 0.0;
  return lambda * lambda / (4.0 * k * k * std::pow(static_cast<double>(dim), 1.5));
}

RegularityProbe regularity_probe(const GridField& field, const Box& box, double level) {
  const Grid& g = field.grid();
  const CellRange r = checked_range(g, box);
  for (int a = 0; a < g.dim(); ++a)
    if (r.lo[a] < 1 || r.hi[a] > g.extent(a) - 1)
      throw ValidationError("box", "regularity probe needs a one-cell margin inside the grid");

  std::vector<std::size_t> cells;
  std::vector<double> grad_norm;
  double max_grad = 0.0, max_hess = 0.0;
  for (std::int64_t i = r.lo[0]; i < r.hi[0]; ++i)
    for (std::int64_t j = r.lo[1]; j < r.hi[1]; ++j)
      for (std::int64_t k = r.lo[2]; k < r.hi[2]; ++k) {
        const Index idx{i, j, k};
        const double gn = euclidean_norm(gradient_at(field, idx), g.dim());
        max_grad = std::max(max_grad, gn);
        max_hess = std::max(max_hess, operator_norm(hessian_at(field, idx), g.dim()));
        cells.push_back(g.linear(idx));
        grad_norm.push_back(gn);
      }

  RegularityProbe probe;
  probe.k = max_grad + max_hess;
  const double band = g.spacing() * max_grad;
  double lambda = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (std::abs(field[cells[c]] + level) > band) continue;
    ++probe.near_level_cells;
    lambda = std::min(lambda, grad_norm[c]);
  }
  probe.lambda = lambda;
  probe.degenerate = probe.near_level_cells > 0 && lambda == 0.0;
  probe.k_not_above_lambda = !(probe.k > lambda);
  probe.certified_eps = certified_box_size(lambda, probe.k, g.dim());
  return probe;
}

}  // namespace gaussperc
