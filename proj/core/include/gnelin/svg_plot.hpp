#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gnelin {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<std::optional<double>> y;  // nullopt samples are skipped
};

struct PlotOptions {
  std::string title;
  std::string x_label = "iteration";
  std::string y_label;
  int width = 720;
  int height = 480;
};

/// Static SVG with a log-scale y axis, one polyline per series and a legend
/// in input order. Nonpositive values are clipped to a floor one decade below
/// the smallest positive value, and the plot says so. Throws EmptySeries when
/// there is nothing to draw.
std::string render_svg(const std::vector<PlotSeries>& series,
                       const PlotOptions& options = {});

/// Reads each CSV, takes the `iter` column as x and one series per
/// (file, column) pair, and writes the SVG to `output_path`.
void emit_svg_plot(const std::vector<std::string>& csv_paths,
                   const std::vector<std::string>& columns,
                   const std::string& output_path,
                   const PlotOptions& options = {});

}  // namespace gnelin
