#pragma once

#include "grasp/evolve.hpp"

#include <string>
#include <vector>

namespace grasp {

struct Series {
  std::string name;
  std::vector<double> y;
  std::string colour = "#1f77b4";
};

/// A minimal SVG line chart over x = 0, 1, 2, ...
std::string line_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series,
                           int width = 640, int height = 400);

/// Mean and best fitness over generations.
std::string fitness_chart_svg(const RunTrace& trace, const std::string& title);

/// Inter-cluster mutation probability over generations.
std::string mutation_chart_svg(const RunTrace& trace, const std::string& title);

}  // namespace grasp
