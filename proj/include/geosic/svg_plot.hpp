#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace geosic::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // non-positive values are dropped
};

/// Static line chart, one polyline per series, with a legend.
std::string line_chart(const Axes& axes, const std::vector<Series>& series);

void write_line_chart(const std::filesystem::path& path, const Axes& axes,
                      const std::vector<Series>& series);

}  // namespace geosic::plot
