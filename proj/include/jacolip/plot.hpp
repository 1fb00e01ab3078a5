#pragma once

#include <string>
#include <vector>

#include "jacolip/train.hpp"

namespace jacolip {

struct Series {
    std::string label;
    std::vector<double> values;  // indexed by epoch
};

// Self-contained SVG line chart, one polyline per series, with a legend.
std::string render_line_chart(const std::string& title, const std::vector<Series>& series);

// Writes the four dynamics charts (ndcg, utility, weight_norm, grad_norm)
// for one or more logs; returns the emitted file paths.
std::vector<std::string> write_dynamics_charts(const std::vector<DynamicsLog>& logs,
                                               const std::vector<std::string>& labels,
                                               const std::string& out_dir);

}  // namespace jacolip
