#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gaussperc/csv.hpp"

namespace gaussperc {

/// Overlay y = log(x)^kappa. For kind "stretch-threshold" kappa is derived
/// from (dim, beta, delta); for "log-power" it is given directly.
struct ReferenceCurve {
  std::string kind = "log-power";
  double kappa = 1.0;
  int dim = 2;
  std::optional<double> beta;  // absent: Gaussian tail
  double delta = 0.5;
  std::string label;

  double resolved_kappa() const;
};

struct PlotSpec {
  std::string x;
  std::string y;
  std::string title;
  std::string x_label;  // default: column name
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::string style = "scatter";  // or "line"
  std::optional<std::string> series;  // column splitting rows into series
  std::optional<ReferenceCurve> reference;
};

PlotSpec plot_spec_from_json(const nlohmann::json& j);

/// Fixed 640x480 canvas; all text is drawn as stroked paths so the bytes
/// never depend on installed fonts. Throws ValidationError("columns") when
/// a named column is missing.
std::string emit_plot(const csv::Table& table, const PlotSpec& spec);

/// Plot area in canvas pixels.
struct PlotArea {
  double left = 80.0;
  double right = 620.0;
  double top = 40.0;
  double bottom = 410.0;
};
inline constexpr double kCanvasWidth = 640.0;
inline constexpr double kCanvasHeight = 480.0;

}  // namespace gaussperc
