#include "gnelin/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gnelin/error.hpp"
#include "gnelin/trajectory_io.hpp"

namespace gnelin {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series,
                       const PlotOptions& opt) {
  require(!series.empty(), Errc::EmptySeries, "no series to plot");
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double pos_min = std::numeric_limits<double>::infinity();
  double y_max = 0.0;
  int clipped = 0;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), Errc::DimensionMismatch,
            "series \"" + s.label + "\" has mismatched x and y");
    int points = 0;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!s.y[k] || !std::isfinite(*s.y[k])) continue;
      ++points;
      x_min = std::min(x_min, s.x[k]);
      x_max = std::max(x_max, s.x[k]);
      if (*s.y[k] > 0.0) {
        pos_min = std::min(pos_min, *s.y[k]);
        y_max = std::max(y_max, *s.y[k]);
      } else {
        ++clipped;
      }
    }
    require(points > 0, Errc::EmptySeries,
            "series \"" + s.label + "\" has no finite values");
  }
  if (!std::isfinite(pos_min)) {
    pos_min = 1e-16;
    y_max = 1.0;
  }
  const double floor_value = pos_min / 10.0;
  const double lo_dec = std::floor(std::log10(clipped ? floor_value : pos_min));
  const double hi_dec = std::max(std::ceil(std::log10(y_max)), lo_dec + 1.0);
  if (x_max <= x_min) x_max = x_min + 1.0;

  const double left = 80, right = 180, top = 40, bottom = 60;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + pw * (x - x_min) / (x_max - x_min); };
  auto py = [&](double y) {
    return top + ph * (hi_dec - std::log10(y)) / (hi_dec - lo_dec);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << escape(opt.title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double dec = lo_dec; dec <= hi_dec; dec += 1.0) {
    const double y = py(std::pow(10.0, dec));
    svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw
        << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\">1e" << static_cast<int>(dec) << "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 5.0;
    const double x = px(xv);
    svg << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x
        << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << top + ph + 18
        << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 16
      << "\" text-anchor=\"middle\">" << escape(opt.x_label) << "</text>\n";
  if (!opt.y_label.empty())
    svg << "<text transform=\"translate(18," << top + ph / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(opt.y_label)
        << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < series[s].x.size(); ++k) {
      const auto& yv = series[s].y[k];
      if (!yv || !std::isfinite(*yv)) continue;
      const double y = *yv > 0.0 ? *yv : floor_value;
      svg << (first ? "" : " ") << num(px(series[s].x[k])) << ',' << num(py(y));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
        << left + pw + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text class=\"legend\" x=\"" << left + pw + 42 << "\" y=\"" << ly + 4
        << "\">" << escape(series[s].label) << "</text>\n";
  }
  if (clipped > 0)
    svg << "<text class=\"warning\" x=\"" << left + 4 << "\" y=\"" << top + ph - 6
        << "\" fill=\"#b00000\">warning: " << clipped
        << " nonpositive value(s) clipped to " << num(floor_value) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_plot(const std::vector<std::string>& csv_paths,
                   const std::vector<std::string>& columns,
                   const std::string& output_path, const PlotOptions& options) {
  require(!csv_paths.empty() && !columns.empty(), Errc::EmptySeries,
          "need at least one CSV and one column");
  std::vector<PlotSeries> series;
  for (const auto& path : csv_paths) {
    const CsvTable table = read_csv_file(path);
    const auto iters = table.column("iter");
    for (const auto& col : columns) {
      PlotSeries s;
      s.label = std::filesystem::path(path).stem().string() + ":" + col;
      const auto values = table.column(col);
      for (std::size_t k = 0; k < iters.size(); ++k) {
        if (!iters[k]) continue;
        s.x.push_back(*iters[k]);
        s.y.push_back(values[k]);
      }
      series.push_back(std::move(s));
    }
  }
  const std::string svg = render_svg(series, options);
  std::ofstream out(output_path);
  require(out.good(), Errc::Io, "cannot write " + output_path);
  out << svg;
}

}  // namespace gnelin
