#pragma once

#include <string>
#include <vector>

namespace varshap {

// Deterministic, self-contained SVG emitters (no external assets, fixed
// decimal formatting). Heatmap colors use a symmetric diverging scale around
// zero, clipped at the 99th percentile of |values|.
std::string svg_heatmap(const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& values,
                        const std::string& title);

// `bins` uniform bins over the observed range (bin meta embedded as a
// comment in the output).
std::string svg_histogram(const std::vector<double>& values, int bins,
                          const std::string& title);

std::string svg_bar_chart(const std::vector<std::string>& names,
                          const std::vector<double>& values,
                          const std::string& title);

}  // namespace varshap
