#include "jacolip/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jacolip {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 40;

}  // namespace

std::string render_line_chart(const std::string& title, const std::vector<Series>& series) {
    if (series.empty()) throw FatalError("render_line_chart: no series");
    double lo = 0.0, hi = 1.0;
    std::size_t max_len = 0;
    bool first = true;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) {
            if (!std::isfinite(v)) throw FatalError("render_line_chart: non-finite value");
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (max_len == 0) throw FatalError("render_line_chart: empty series");
    if (hi == lo) {
        hi += 1.0;
        lo -= 1.0;
    }

    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](std::size_t i) {
        double t = (max_len > 1) ? double(i) / double(max_len - 1) : 0.5;
        return kLeft + t * plot_w;
    };
    auto sy = [&](double v) { return kTop + (1.0 - (v - lo) / (hi - lo)) * plot_h; };

    std::ostringstream out;
    out.precision(10);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    // axes
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<text x=\"12\" y=\"" << sy(hi) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << hi << "</text>\n";
    out << "<text x=\"12\" y=\"" << sy(lo) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << lo << "</text>\n";
    out << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">epoch "
        << (max_len - 1) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 8];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i)
            out << sx(i) << "," << sy(s.values[i]) << " ";
        out << "\"/>\n";
        // legend entry
        double ly = kTop + 14.0 * double(si);
        out << "<line x1=\"" << kLeft + plot_w - 110 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + plot_w - 90 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + plot_w - 85 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<std::string> write_dynamics_charts(const std::vector<DynamicsLog>& logs,
                                               const std::vector<std::string>& labels,
                                               const std::string& out_dir) {
    if (logs.empty() || logs.size() != labels.size())
        throw FatalError("write_dynamics_charts: need matching logs and labels");
    for (const auto& l : logs)
        if (l.records.empty()) throw FatalError("write_dynamics_charts: empty dynamics log");

    struct Chart {
        const char* name;
        double EpochRecord::* field;
    };
    const Chart charts[] = {{"ndcg", &EpochRecord::ndcg},
                            {"utility", &EpochRecord::utility},
                            {"weight_norm", &EpochRecord::weight_norm},
                            {"grad_norm", &EpochRecord::grad_norm}};
    std::vector<std::string> paths;
    for (const auto& chart : charts) {
        std::vector<Series> series;
        for (std::size_t i = 0; i < logs.size(); ++i) {
            Series s;
            s.label = labels[i];
            for (const auto& r : logs[i].records) s.values.push_back(r.*chart.field);
            series.push_back(std::move(s));
        }
        std::string path = out_dir + "/" + chart.name + ".svg";
        std::ofstream out(path);
        if (!out) throw FatalError("cannot write chart: " + path);
        out << render_line_chart(chart.name, series);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace jacolip
