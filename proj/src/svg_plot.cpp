#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "plantnbv/harness.hpp"

namespace plantnbv {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<double> mean, ci;  // index 0 = view 1; NaN mean = missing
};

std::string render_chart(const std::string& title, const std::string& y_label,
                         const std::vector<Series>& series, int max_views) {
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (const Series& s : series) {
        for (int v = 0; v < max_views; ++v) {
            if (!std::isfinite(s.mean[v])) continue;
            y_min = std::min(y_min, s.mean[v] - s.ci[v]);
            y_max = std::max(y_max, s.mean[v] + s.ci[v]);
        }
    }
    if (!std::isfinite(y_min)) {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto x_of = [&](double view) {
        return kMarginLeft + plot_w * (view - 1.0) / std::max(1, max_views - 1);
    };
    auto y_of = [&](double val) {
        return kMarginTop + plot_h * (1.0 - (val - y_min) / (y_max - y_min));
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kMarginLeft << "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << title << "</text>\n";

    // Axes.
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
    for (int v = 1; v <= max_views; ++v) {
        const double x = x_of(v);
        svg << "<line x1=\"" << x << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\"" << x
            << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << x << "\" y=\"" << kMarginTop + plot_h + 20
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << v
            << "</text>\n";
    }
    for (int t = 0; t <= 5; ++t) {
        const double val = y_min + (y_max - y_min) * t / 5.0;
        const double y = y_of(val);
        svg << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kMarginLeft
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << y + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
            << fmt(val) << "</text>\n";
    }
    svg << "<text x=\"" << (kMarginLeft + plot_w / 2) << "\" y=\"" << kHeight - 12
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">views"
        << "</text>\n";
    svg << "<text x=\"18\" y=\"" << (kMarginTop + plot_h / 2)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 "
        << (kMarginTop + plot_h / 2) << ")\">" << y_label << "</text>\n";

    // Confidence bands then lines, so lines stay visible.
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::ostringstream band;
        std::vector<std::pair<double, double>> upper, lower;
        for (int v = 0; v < max_views; ++v) {
            if (!std::isfinite(series[s].mean[v])) continue;
            upper.emplace_back(x_of(v + 1), y_of(series[s].mean[v] + series[s].ci[v]));
            lower.emplace_back(x_of(v + 1), y_of(series[s].mean[v] - series[s].ci[v]));
        }
        if (upper.size() >= 2) {
            band << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" "
                 << "points=\"";
            for (const auto& [x, y] : upper) band << fmt(x) << ',' << fmt(y) << ' ';
            for (auto it = lower.rbegin(); it != lower.rend(); ++it)
                band << fmt(it->first) << ',' << fmt(it->second) << ' ';
            band << "\"/>\n";
            svg << band.str();
        }
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" "
            << "points=\"";
        for (int v = 0; v < max_views; ++v) {
            if (!std::isfinite(series[s].mean[v])) continue;
            svg << fmt(x_of(v + 1)) << ',' << fmt(y_of(series[s].mean[v])) << ' ';
        }
        svg << "\"/>\n";
        const double ly = kMarginTop + 18.0 * s;
        svg << "<line x1=\"" << kMarginLeft + plot_w + 10 << "\" y1=\"" << ly << "\" x2=\""
            << kMarginLeft + plot_w + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << kMarginLeft + plot_w + 40 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::vector<std::string> emit_plots(const AggregateResult& aggregate,
                                    const std::string& out_dir) {
    if (aggregate.cells.empty()) throw IoError("cannot plot an empty aggregate");

    std::filesystem::create_directories(out_dir);
    std::set<std::string> attentions;
    for (const AggregateCell& cell : aggregate.cells) attentions.insert(cell.attention);

    std::vector<std::string> written;
    for (const std::string& attention : attentions) {
        for (const bool chamfer : {false, true}) {
            std::vector<Series> series;
            for (const AggregateCell& cell : aggregate.cells) {
                if (cell.attention != attention) continue;
                Series s;
                s.label = cell.planner;
                s.mean = chamfer ? cell.mean_chamfer : cell.mean_f1;
                s.ci = chamfer ? cell.ci_chamfer : cell.ci_f1;
                series.push_back(std::move(s));
            }
            if (series.empty()) continue;
            std::sort(series.begin(), series.end(),
                      [](const Series& a, const Series& b) { return a.label < b.label; });
            const std::string metric = chamfer ? "chamfer" : "f1";
            const std::string title =
                (chamfer ? "Chamfer distance, " : "F1 score, ") + attention;
            const std::string body = render_chart(
                title, chamfer ? "chamfer distance [m]" : "F1 score", series,
                aggregate.max_views);
            const std::filesystem::path path =
                std::filesystem::path(out_dir) / (metric + "_" + attention + ".svg");
            std::ofstream out(path);
            if (!out) throw IoError("cannot write plot: " + path.string());
            out << body;
            if (!out) throw IoError("failed writing plot: " + path.string());
            written.push_back(path.string());
        }
    }
    return written;
}

}  // namespace plantnbv
