#include "gaussperc/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gaussperc/chem.hpp"
#include "gaussperc/error.hpp"

namespace gaussperc {
namespace {

// Stroke glyphs on a 4 x 6 cell (baseline y = 0, cap height 6). Each string
// is one polyline of "x,y" points.
const std::map<char, std::vector<std::string_view>>& glyphs() {
  static const std::map<char, std::vector<std::string_view>> table{
      {'0', {"0,0 4,0 4,6 0,6 0,0", "0,0 4,6"}},
      {'1', {"1,5 2,6 2,0", "1,0 3,0"}},
      {'2', {"0,6 4,6 4,3 0,3 0,0 4,0"}},
      {'3', {"0,6 4,6 4,0 0,0", "0,3 4,3"}},
      {'4', {"0,6 0,3 4,3", "4,6 4,0"}},
      {'5', {"4,6 0,6 0,3 4,3 4,0 0,0"}},
      {'6', {"4,6 0,6 0,0 4,0 4,3 0,3"}},
      {'7', {"0,6 4,6 1,0"}},
      {'8', {"0,0 4,0 4,6 0,6 0,0", "0,3 4,3"}},
      {'9', {"4,3 0,3 0,6 4,6 4,0 0,0"}},
      {'A', {"0,0 0,4 2,6 4,4 4,0", "0,3 4,3"}},
      {'B', {"0,0 0,6 3,6 4,5 4,4 3,3 0,3", "3,3 4,2 4,1 3,0 0,0"}},
      {'C', {"4,6 0,6 0,0 4,0"}},
      {'D', {"0,0 0,6 3,6 4,5 4,1 3,0 0,0"}},
      {'E', {"4,6 0,6 0,0 4,0", "0,3 3,3"}},
      {'F', {"4,6 0,6 0,0", "0,3 3,3"}},
      {'G', {"4,5 4,6 0,6 0,0 4,0 4,3 2,3"}},
      {'H', {"0,6 0,0", "4,6 4,0", "0,3 4,3"}},
      {'I', {"1,6 3,6", "2,6 2,0", "1,0 3,0"}},
      {'J', {"4,6 4,0 0,0 0,2"}},
      {'K', {"0,6 0,0", "4,6 0,3 4,0"}},
      {'L', {"0,6 0,0 4,0"}},
      {'M', {"0,0 0,6 2,3 4,6 4,0"}},
      {'N', {"0,0 0,6 4,0 4,6"}},
      {'O', {"0,0 4,0 4,6 0,6 0,0"}},
      {'P', {"0,0 0,6 4,6 4,3 0,3"}},
      {'Q', {"0,0 4,0 4,6 0,6 0,0", "2,2 4,-1"}},
      {'R', {"0,0 0,6 4,6 4,3 0,3 4,0"}},
      {'S', {"4,6 0,6 0,3 4,3 4,0 0,0"}},
      {'T', {"0,6 4,6", "2,6 2,0"}},
      {'U', {"0,6 0,0 4,0 4,6"}},
      {'V', {"0,6 2,0 4,6"}},
      {'W', {"0,6 1,0 2,3 3,0 4,6"}},
      {'X', {"0,6 4,0", "0,0 4,6"}},
      {'Y', {"0,6 2,3 4,6", "2,3 2,0"}},
      {'Z', {"0,6 4,6 0,0 4,0"}},
      {'.', {"2,0 2,0.5"}},
      {',', {"2,0.5 1.5,-1"}},
      {'-', {"1,3 3,3"}},
      {'+', {"0.5,3 3.5,3", "2,1.5 2,4.5"}},
      {'(', {"3,6.5 2,5 2,1 3,-0.5"}},
      {')', {"1,6.5 2,5 2,1 1,-0.5"}},
      {'[', {"3,6.5 2,6.5 2,-0.5 3,-0.5"}},
      {']', {"1,6.5 2,6.5 2,-0.5 1,-0.5"}},
      {'_', {"0,-0.5 4,-0.5"}},
      {'/', {"0,0 4,6"}},
      {'=', {"0.5,2 3.5,2", "0.5,4 3.5,4"}},
      {':', {"2,1 2,1.5", "2,4 2,4.5"}},
      {'^', {"1,4 2,6 3,4"}},
      {'|', {"2,-1 2,7"}},
      {'<', {"4,5 0,3 4,1"}},
      {'>', {"0,5 4,3 0,1"}},
      {'%', {"0,6 1,6 1,5 0,5 0,6", "4,6 0,0", "3,1 4,1 4,0 3,0 3,1"}},
      {'\'', {"2,6 2,4"}},
      {'?', {"0,5 1,6 3,6 4,5 4,4 2,3 2,2", "2,0 2,0.5"}},
  };
  return table;
}

constexpr double kAdvance = 6.0;  // glyph cell plus gap, in glyph units

double parse_coord(std::string_view s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

enum class Anchor { start, middle, end };

double text_width(std::string_view text, double size) { return static_cast<double>(text.size()) * kAdvance * size / 6.0 - 2.0 * size / 6.0; }

// Path element drawing `text` with its baseline at (x, y) and cap height `size`.
std::string text_path(std::string_view text, double x, double y, double size, Anchor anchor,
                      std::string_view extra = {}) {
  const double s = size / 6.0;
  const double w = text_width(text, size);
  double x0 = x;
  if (anchor == Anchor::middle) x0 -= w / 2.0;
  if (anchor == Anchor::end) x0 -= w;
  std::string d;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (c == ' ') continue;
    auto it = glyphs().find(c);
    if (it == glyphs().end()) it = glyphs().find('?');
    const double gx = x0 + static_cast<double>(i) * kAdvance * s;
    for (std::string_view stroke : it->second) {
      bool first = true;
      std::size_t pos = 0;
      while (pos < stroke.size()) {
        const std::size_t end = std::min(stroke.find(' ', pos), stroke.size());
        const std::string_view pt = stroke.substr(pos, end - pos);
        const std::size_t comma = pt.find(',');
        const double px = parse_coord(pt.substr(0, comma));
        const double py = parse_coord(pt.substr(comma + 1));
        d += first ? "M" : "L";
        d += num(gx + px * s) + " " + num(y - py * s);
        first = false;
        pos = end + 1;
      }
    }
  }
  std::string out = "<path class=\"text\" aria-label=\"";
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  out += "\" d=\"" + d + "\" fill=\"none\" stroke=\"#222\" stroke-width=\"1\" stroke-linecap=\"round\"";
  if (!extra.empty()) out += " " + std::string(extra);
  out += "/>\n";
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double t(double v) const {
    if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return (v - lo) / (hi - lo);
  }
};

Axis make_axis(std::vector<double> values, bool log) {
  Axis a;
  a.log = log;
  if (values.empty()) {
    a.lo = log ? 1.0 : 0.0;
    a.hi = log ? 10.0 : 1.0;
    return a;
  }
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (log) {
    double llo = std::log10(lo), lhi = std::log10(hi);
    if (lhi - llo < 1e-12) {
      llo -= 0.5;
      lhi += 0.5;
    }
    const double pad = 0.05 * (lhi - llo);
    a.lo = std::pow(10.0, llo - pad);
    a.hi = std::pow(10.0, lhi + pad);
    return a;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  a.lo = lo - pad;
  a.hi = hi + pad;
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log) {
    for (double e = std::ceil(std::log10(a.lo) - 1e-9); e <= std::log10(a.hi) + 1e-9; e += 1.0)
      out.push_back(std::pow(10.0, e));
    if (out.size() < 2) {
      out.clear();
      for (int i = 0; i <= 4; ++i) out.push_back(a.lo * std::pow(a.hi / a.lo, i / 4.0));
    }
    return out;
  }
  const double raw = (a.hi - a.lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(a.lo / step - 1e-9) * step; v <= a.hi + 1e-9 * step; v += step)
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return out;
}

std::string tick_label(double v) { return fmt::format("{:.4g}", v); }

constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

double ReferenceCurve::resolved_kappa() const {
  if (kind == "log-power") return kappa;
  if (kind == "stretch-threshold") return chem::kappa_exponent(dim, beta ? *beta : chem::kInfinity, delta);
  throw ValidationError("reference", "unknown reference kind '" + kind + "'");
}

PlotSpec plot_spec_from_json(const nlohmann::json& j) {
  try {
    PlotSpec s;
    s.x = j.at("x").get<std::string>();
    s.y = j.at("y").get<std::string>();
    s.title = j.value("title", std::string());
    s.x_label = j.value("x_label", s.x);
    s.y_label = j.value("y_label", s.y);
    s.log_x = j.value("log_x", false);
    s.log_y = j.value("log_y", false);
    s.style = j.value("style", std::string("scatter"));
    if (s.style != "scatter" && s.style != "line") throw ValidationError("style", "must be 'scatter' or 'line'");
    if (j.contains("series") && !j.at("series").is_null()) s.series = j.at("series").get<std::string>();
    if (j.contains("reference") && !j.at("reference").is_null()) {
      const auto& r = j.at("reference");
      ReferenceCurve c;
      c.kind = r.value("kind", std::string("log-power"));
      c.kappa = r.value("kappa", 1.0);
      c.dim = r.value("dim", 2);
      if (r.contains("beta") && !r.at("beta").is_null()) c.beta = r.at("beta").get<double>();
      c.delta = r.value("delta", 0.5);
      c.label = r.value("label", std::string());
      c.resolved_kappa();
      s.reference = c;
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("spec", e.what());
  }
}

std::string emit_plot(const csv::Table& table, const PlotSpec& spec) {
  for (const std::string* col : {&spec.x, &spec.y})
    if (table.find(*col) < 0) throw ValidationError("columns", "missing column '" + *col + "'");
  if (spec.series && table.find(*spec.series) < 0)
    throw ValidationError("columns", "missing column '" + *spec.series + "'");

  const auto xs = table.numbers(spec.x);
  const auto ys = table.numbers(spec.y);
  std::vector<std::string> names;
  std::vector<std::size_t> group(xs.size(), 0);
  if (spec.series) {
    const auto idx = static_cast<std::size_t>(table.find(*spec.series));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const std::string& v = table.rows[i][idx];
      auto it = std::find(names.begin(), names.end(), v);
      if (it == names.end()) {
        names.push_back(v);
        it = names.end() - 1;
      }
      group[i] = static_cast<std::size_t>(it - names.begin());
    }
  } else {
    names.push_back(spec.y);
  }

  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0);
  };
  std::vector<std::size_t> keep;
  std::vector<double> vx, vy;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (usable(xs[i], ys[i])) {
      keep.push_back(i);
      vx.push_back(xs[i]);
      vy.push_back(ys[i]);
    }

  const Axis ax = make_axis(vx, spec.log_x);
  std::vector<std::pair<double, double>> ref;
  double kappa = 0.0;
  if (spec.reference && !keep.empty()) {
    kappa = spec.reference->resolved_kappa();
    const double lo = std::max(ax.lo, 1.0 + 1e-9);
    if (ax.hi > lo) {
      for (int i = 0; i <= 100; ++i) {
        const double x = spec.log_x ? lo * std::pow(ax.hi / lo, i / 100.0) : lo + (ax.hi - lo) * i / 100.0;
        const double y = std::pow(std::log(x), kappa);
        if (usable(x, y)) ref.emplace_back(x, y);
      }
      for (const auto& [x, y] : ref) vy.push_back(y);
    }
  }
  const Axis ay = make_axis(vy, spec.log_y);
  const PlotArea area;
  auto px = [&](double x) { return area.left + ax.t(x) * (area.right - area.left); };
  auto py = [&](double y) { return area.bottom - ay.t(y) * (area.bottom - area.top); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      kCanvasWidth, kCanvasHeight);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", kCanvasWidth, kCanvasHeight);
  svg += fmt::format(
      "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#222\"/>\n",
      num(area.left), num(area.top), num(area.right - area.left), num(area.bottom - area.top));

  for (double t : ticks(ax)) {
    const double x = px(t);
    svg += fmt::format("<line class=\"tick\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#222\"/>\n", num(x),
                       num(area.bottom), num(area.bottom + 5));
    svg += text_path(tick_label(t), x, area.bottom + 18, 8, Anchor::middle);
  }
  for (double t : ticks(ay)) {
    const double y = py(t);
    svg += fmt::format("<line class=\"tick\" x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#222\"/>\n",
                       num(area.left - 5), num(y), num(area.left));
    svg += text_path(tick_label(t), area.left - 8, y + 4, 8, Anchor::end);
  }
  const std::string xl = spec.x_label.empty() ? spec.x : spec.x_label;
  const std::string yl = spec.y_label.empty() ? spec.y : spec.y_label;
  svg += text_path(xl, (area.left + area.right) / 2, area.bottom + 45, 10, Anchor::middle);
  const double ylx = 25.0, yly = (area.top + area.bottom) / 2;
  svg += text_path(yl, ylx, yly, 10, Anchor::middle,
                   fmt::format("transform=\"rotate(-90 {} {})\"", num(ylx), num(yly)));
  if (!spec.title.empty()) svg += text_path(spec.title, kCanvasWidth / 2, 25, 12, Anchor::middle);

  if (keep.empty()) {
    svg += text_path("no data", (area.left + area.right) / 2, (area.top + area.bottom) / 2, 14, Anchor::middle,
                     "data-role=\"no-data\"");
  } else {
    if (!ref.empty()) {
      std::string pts;
      for (const auto& [x, y] : ref) pts += (pts.empty() ? "" : " ") + num(px(x)) + "," + num(py(y));
      svg += "<polyline class=\"reference\" points=\"" + pts +
             "\" fill=\"none\" stroke=\"#555\" stroke-dasharray=\"6 4\"/>\n";
    }
    for (std::size_t g = 0; g < names.size(); ++g) {
      const std::string_view color = kPalette[g % std::size(kPalette)];
      std::string pts;
      std::string markers;
      for (std::size_t i : keep) {
        if (group[i] != g) continue;
        pts += (pts.empty() ? "" : " ") + num(px(xs[i])) + "," + num(py(ys[i]));
        markers += fmt::format("<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n", num(px(xs[i])),
                               num(py(ys[i])), color);
      }
      if (spec.style == "line" && !pts.empty())
        svg += fmt::format("<polyline class=\"series\" points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n", pts, color);
      svg += markers;
    }
    std::vector<std::pair<std::string, std::string>> legend;
    if (names.size() > 1 || spec.series)
      for (std::size_t g = 0; g < names.size(); ++g)
        legend.emplace_back(*spec.series + " " + names[g], std::string(kPalette[g % std::size(kPalette)]));
    if (!ref.empty()) {
      const std::string label = spec.reference->label.empty()
                                    ? "log(x)^" + fmt::format("{:.4g}", kappa)
                                    : spec.reference->label;
      legend.emplace_back(label, "#555");
    }
    double ly = area.top + 15;
    for (const auto& [label, color] : legend) {
      svg += fmt::format("<line class=\"legend\" x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\"/>\n",
                         num(area.right - 150), num(ly - 3), num(area.right - 135), color);
      svg += text_path(label, area.right - 130, ly, 8, Anchor::start);
      ly += 14;
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace gaussperc
