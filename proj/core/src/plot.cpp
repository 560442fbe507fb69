#include "grasp/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace grasp {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series,
                           int width, int height) {
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double x_max = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](double x) { return left + pw * x / x_max; };
  auto py = [&](double y) { return top + ph * (hi - y) / (hi - lo); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{3}</text>\n",
      width, height, width / 2, escape(title));
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, top + ph);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, top + ph,
                     left + pw);
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3f}</text>\n",
        left - 6, py(v) + 4, v);
  }
  const std::size_t step = std::max<std::size_t>(1, (n + 9) / 10);
  for (std::size_t g = 0; g < n; g += step) {
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
        px(static_cast<double>(g)), top + ph + 16, g);
  }
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">generation</text>\n",
      left + pw / 2, height - 12);
  svg += fmt::format(
      "<text x=\"14\" y=\"{0}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 14 {0})\">{1}</text>\n",
      top + ph / 2, escape(y_label));

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string pts;
    for (std::size_t g = 0; g < s.y.size(); ++g) {
      pts += fmt::format("{}{:.2f},{:.2f}", g ? " " : "", px(static_cast<double>(g)), py(s.y[g]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", s.colour, pts);
    const double ly = top + 14 + 16 * static_cast<double>(i);
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       left + pw - 110, ly, left + pw - 90, ly, s.colour);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                       left + pw - 85, ly + 4, escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

std::string fitness_chart_svg(const RunTrace& trace, const std::string& title) {
  Series mean{"mean", {}, "#1f77b4"}, best{"best", {}, "#d62728"};
  for (const auto& r : trace) {
    mean.y.push_back(r.mean_fitness);
    best.y.push_back(r.best_fitness);
  }
  return line_chart_svg(title, "fitness", {mean, best});
}

std::string mutation_chart_svg(const RunTrace& trace, const std::string& title) {
  Series p{"p_inter", {}, "#2ca02c"}, d{"diversity", {}, "#9467bd"};
  for (const auto& r : trace) {
    p.y.push_back(r.p_inter);
    d.y.push_back(r.diversity);
  }
  return line_chart_svg(title, "probability", {p, d});
}

}  // namespace grasp
