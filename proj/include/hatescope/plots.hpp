#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hatescope/stats.hpp"

namespace hatescope::plots {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct BoxGroup {
    std::string name;
    std::vector<double> values;
};

namespace detail {

inline constexpr std::array<const char*, 6> kPalette{"#c0392b", "#2471a3", "#e67e22", "#17a589", "#7d3c98",
                                                     "#566573"};
inline constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

inline void widen(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
}

inline std::string open_svg(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
           "</text>\n";
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel, bool x_ticks) {
    std::string s;
    const double bx = kHeight - kBottom;
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(bx) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" + num(bx) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(bx) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" + label(yv) +
             "</text>\n";
        if (x_ticks) {
            const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
            s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(bx + 16) + "\" text-anchor=\"middle\">" + label(xv) +
                 "</text>\n";
        }
    }
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 8) + "\" text-anchor=\"middle\">" +
         escape(xlabel) + "</text>\n";
    s += "<text transform=\"translate(16," + num(kHeight / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(ylabel) + "</text>\n";
    return s;
}

}  // namespace detail

inline std::string line_plot(const std::string& title, const std::vector<Series>& series, const std::string& xlabel,
                             const std::string& ylabel) {
    using namespace detail;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
    for (const auto& s : series) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y1 = 1;
    widen(x0, x1);
    widen(y0, y1);
    const Frame f{x0, x1, y0, y1};
    std::string svg = open_svg(title) + axes(f, xlabel, ylabel, true);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            pts += num(f.px(s.x[i])) + "," + num(f.py(s.y[i])) + " ";
        }
        const char* color = kPalette[k % kPalette.size()];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
        svg += "<text x=\"" + num(kWidth - kRight - 4) + "\" y=\"" + num(kTop + 14 * (k + 1)) +
               "\" text-anchor=\"end\" fill=\"" + color + "\">" + escape(s.name) + "</text>\n";
    }
    return svg + "</svg>\n";
}

/// Quartile boxes with whiskers at the most extreme values within 1.5 IQR.
inline std::string box_plot(const std::string& title, const std::vector<BoxGroup>& groups, const std::string& ylabel) {
    using namespace detail;
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto& g : groups) {
        for (double v : g.values) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(y0)) y0 = 0, y1 = 1;
    widen(y0, y1);
    const Frame f{0.0, static_cast<double>(std::max<std::size_t>(groups.size(), 1)), y0, y1};
    std::string svg = open_svg(title) + axes(f, "", ylabel, false);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double cx = f.px(k + 0.5), half = (f.px(1) - f.px(0)) * 0.25;
        const char* color = kPalette[k % kPalette.size()];
        svg += "<text x=\"" + num(cx) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" +
               escape(groups[k].name) + " (n=" + std::to_string(groups[k].values.size()) + ")</text>\n";
        if (groups[k].values.empty()) continue;
        auto v = groups[k].values;
        std::sort(v.begin(), v.end());
        const double q1 = stats::quantile_sorted(v, 0.25), q2 = stats::quantile_sorted(v, 0.5),
                     q3 = stats::quantile_sorted(v, 0.75), iqr = q3 - q1;
        const double lo = *std::lower_bound(v.begin(), v.end(), q1 - 1.5 * iqr);
        const double hi = *(std::upper_bound(v.begin(), v.end(), q3 + 1.5 * iqr) - 1);
        auto line = [&](double xa, double ya, double xb, double yb) {
            svg += "<line x1=\"" + num(xa) + "\" y1=\"" + num(ya) + "\" x2=\"" + num(xb) + "\" y2=\"" + num(yb) +
                   "\" stroke=\"" + color + "\"/>\n";
        };
        line(cx, f.py(lo), cx, f.py(q1));
        line(cx, f.py(q3), cx, f.py(hi));
        line(cx - half / 2, f.py(lo), cx + half / 2, f.py(lo));
        line(cx - half / 2, f.py(hi), cx + half / 2, f.py(hi));
        svg += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(f.py(q3)) + "\" width=\"" + num(2 * half) +
               "\" height=\"" + num(std::max(f.py(q1) - f.py(q3), 0.5)) + "\" fill=\"" + color +
               "\" fill-opacity=\"0.25\" stroke=\"" + color + "\"/>\n";
        svg += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(f.py(q2)) + "\" x2=\"" + num(cx + half) + "\" y2=\"" +
               num(f.py(q2)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        for (double x : v) {
            if (x < lo || x > hi) {
                svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(f.py(x)) + "\" r=\"2\" fill=\"none\" stroke=\"" +
                       color + "\"/>\n";
            }
        }
    }
    return svg + "</svg>\n";
}

}  // namespace hatescope::plots
