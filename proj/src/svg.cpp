#include "varshap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace varshap {

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Symmetric diverging scale: -1 -> blue, 0 -> white, +1 -> red.
std::string diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  int r, g, b;
  if (t < 0) {
    double u = -t;
    r = static_cast<int>(std::lround(255 + u * (33 - 255)));
    g = static_cast<int>(std::lround(255 + u * (102 - 255)));
    b = static_cast<int>(std::lround(255 + u * (172 - 255)));
  } else {
    double u = t;
    r = static_cast<int>(std::lround(255 + u * (178 - 255)));
    g = static_cast<int>(std::lround(255 + u * (24 - 255)));
    b = static_cast<int>(std::lround(255 + u * (43 - 255)));
  }
  return "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")";
}

std::string svg_open(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
         "\" font-family=\"sans-serif\">\n";
}

std::string text_at(double x, double y, const std::string& body, const std::string& extra = "") {
  std::string attrs = extra.find("font-size") == std::string::npos ? " font-size=\"11\"" : "";
  if (!extra.empty()) attrs += " " + extra;
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"" + attrs + ">" +
         escape_xml(body) + "</text>\n";
}

std::string rect_at(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\"/>\n";
}

// Nearest-rank percentile of |values|; 1.0 when everything is zero so the
// scale stays well-defined.
double clip_magnitude(const std::vector<std::vector<double>>& values) {
  std::vector<double> magnitudes;
  for (const auto& row : values) {
    for (double v : row) magnitudes.push_back(std::abs(v));
  }
  if (magnitudes.empty()) return 1.0;
  std::sort(magnitudes.begin(), magnitudes.end());
  size_t idx = static_cast<size_t>(0.99 * static_cast<double>(magnitudes.size() - 1));
  double m = magnitudes[idx];
  return m > 0 ? m : 1.0;
}

}  // namespace

std::string svg_heatmap(const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& values,
                        const std::string& title) {
  const size_t k = names.size();
  if (values.size() != k) throw std::runtime_error("heatmap: names/values size mismatch");
  for (const auto& row : values) {
    if (row.size() != k) throw std::runtime_error("heatmap: ragged value matrix");
  }
  const double cell = 26.0;
  const double margin_left = 150.0;
  const double margin_top = 46.0;
  const double width = margin_left + cell * static_cast<double>(k) + 20.0;
  const double height = margin_top + cell * static_cast<double>(k) + 150.0;
  const double clip = clip_magnitude(values);

  std::ostringstream out;
  out << svg_open(width, height);
  out << "<!-- scale clipped at |value| = " << num(clip) << " -->\n";
  out << text_at(10, 20, title, "font-size=\"13\"");
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      double x = margin_left + cell * static_cast<double>(j);
      double y = margin_top + cell * static_cast<double>(i);
      out << rect_at(x, y, cell - 1.0, cell - 1.0, diverging_color(values[i][j] / clip));
    }
  }
  for (size_t i = 0; i < k; ++i) {
    out << text_at(margin_left - 6.0, margin_top + cell * (static_cast<double>(i) + 0.7), names[i],
                   "text-anchor=\"end\"");
    double x = margin_left + cell * (static_cast<double>(i) + 0.7);
    double y = margin_top + cell * static_cast<double>(k) + 6.0;
    out << "<text x=\"" << num(x) << "\" y=\"" << num(y)
        << "\" font-size=\"11\" text-anchor=\"end\" transform=\"rotate(-60 " << num(x) << " "
        << num(y) << ")\">" << escape_xml(names[i]) << "</text>\n";
  }
  // Color bar.
  const double bar_y = height - 30.0;
  for (int s = 0; s <= 40; ++s) {
    double t = (static_cast<double>(s) / 20.0) - 1.0;
    out << rect_at(margin_left + 4.0 * s, bar_y, 4.0, 12.0, diverging_color(t));
  }
  out << text_at(margin_left, bar_y - 4.0, "-" + num(clip));
  out << text_at(margin_left + 164.0, bar_y - 4.0, "+" + num(clip));
  out << "</svg>\n";
  return out.str();
}

std::string svg_histogram(const std::vector<double>& values, int bins, const std::string& title) {
  if (bins < 1) throw std::runtime_error("histogram: bins must be at least 1");
  double lo = 0.0, hi = 0.0;
  if (!values.empty()) {
    lo = *std::min_element(values.begin(), values.end());
    hi = *std::max_element(values.begin(), values.end());
  }
  if (hi <= lo) hi = lo + 1.0;
  std::vector<int> counts(static_cast<size_t>(bins), 0);
  for (double v : values) {
    int b = static_cast<int>(static_cast<double>(bins) * (v - lo) / (hi - lo));
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<size_t>(b)];
  }
  int max_count = 1;
  for (int c : counts) max_count = std::max(max_count, c);

  const double bar_w = std::max(6.0, 560.0 / static_cast<double>(bins));
  const double plot_h = 180.0;
  const double margin_left = 40.0;
  const double margin_top = 40.0;
  const double width = margin_left + bar_w * static_cast<double>(bins) + 20.0;
  const double height = margin_top + plot_h + 40.0;

  std::ostringstream out;
  out << svg_open(width, height);
  out << "<!-- bins=" << bins << " min=" << num(lo) << " max=" << num(hi)
      << " count=" << values.size() << " -->\n";
  out << text_at(10, 20, title, "font-size=\"13\"");
  for (int b = 0; b < bins; ++b) {
    double h = plot_h * static_cast<double>(counts[static_cast<size_t>(b)]) /
               static_cast<double>(max_count);
    double x = margin_left + bar_w * static_cast<double>(b);
    out << rect_at(x, margin_top + plot_h - h, bar_w - 1.0, h, "rgb(70,120,180)");
  }
  out << "<line x1=\"" << num(margin_left) << "\" y1=\"" << num(margin_top + plot_h) << "\" x2=\""
      << num(margin_left + bar_w * bins) << "\" y2=\"" << num(margin_top + plot_h)
      << "\" stroke=\"black\"/>\n";
  out << text_at(margin_left, margin_top + plot_h + 16.0, num(lo));
  out << text_at(margin_left + bar_w * bins - 30.0, margin_top + plot_h + 16.0, num(hi));
  out << text_at(6.0, margin_top + 10.0, std::to_string(max_count));
  out << "</svg>\n";
  return out.str();
}

std::string svg_bar_chart(const std::vector<std::string>& names,
                          const std::vector<double>& values, const std::string& title) {
  if (names.size() != values.size()) {
    throw std::runtime_error("bar chart: names/values size mismatch");
  }
  double max_abs = 1e-12;
  for (double v : values) max_abs = std::max(max_abs, std::abs(v));
  const double row_h = 22.0;
  const double margin_left = 150.0;
  const double half_span = 220.0;
  const double margin_top = 40.0;
  const double width = margin_left + 2.0 * half_span + 60.0;
  const double height = margin_top + row_h * static_cast<double>(names.size()) + 20.0;
  const double axis_x = margin_left + half_span;

  std::ostringstream out;
  out << svg_open(width, height);
  out << text_at(10, 20, title, "font-size=\"13\"");
  for (size_t i = 0; i < names.size(); ++i) {
    double y = margin_top + row_h * static_cast<double>(i);
    double extent = half_span * values[i] / max_abs;
    out << text_at(margin_left - 6.0, y + row_h * 0.65, names[i], "text-anchor=\"end\"");
    if (extent >= 0) {
      out << rect_at(axis_x, y + 3.0, extent, row_h - 8.0, "rgb(178,24,43)");
    } else {
      out << rect_at(axis_x + extent, y + 3.0, -extent, row_h - 8.0, "rgb(33,102,172)");
    }
    out << text_at(axis_x + (extent >= 0 ? extent + 4.0 : extent - 40.0), y + row_h * 0.65,
                   num(values[i]));
  }
  out << "<line x1=\"" << num(axis_x) << "\" y1=\"" << num(margin_top - 6.0) << "\" x2=\""
      << num(axis_x) << "\" y2=\"" << num(height - 14.0) << "\" stroke=\"black\"/>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace varshap
