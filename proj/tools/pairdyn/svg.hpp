#pragma once

// Self-contained SVG plots: categorical heatmap, ternary trajectory, line chart.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "io.hpp"

namespace pairdyn::cli::svg {

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> p{"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1"};
    return p;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

struct Frame {
    double left = 70, top = 30, width = 480, height = 360;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

inline void axes(std::ostringstream& o, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    o << "<rect x='" << fmt(f.left) << "' y='" << fmt(f.top) << "' width='" << fmt(f.width) << "' height='"
      << fmt(f.height) << "' fill='none' stroke='#333'/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0, yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
        o << "<text x='" << fmt(f.px(xv)) << "' y='" << fmt(f.top + f.height + 16) << "' font-size='11' text-anchor='middle'>"
          << fmt(std::round(xv * 1000) / 1000) << "</text>\n";
        o << "<text x='" << fmt(f.left - 6) << "' y='" << fmt(f.py(yv) + 4) << "' font-size='11' text-anchor='end'>"
          << fmt(std::round(yv * 1000) / 1000) << "</text>\n";
    }
    o << "<text x='" << fmt(f.left + f.width / 2) << "' y='" << fmt(f.top + f.height + 36)
      << "' font-size='13' text-anchor='middle'>" << escape(xlabel) << "</text>\n";
    o << "<text x='18' y='" << fmt(f.top + f.height / 2) << "' font-size='13' text-anchor='middle' transform='rotate(-90 18 "
      << fmt(f.top + f.height / 2) << ")'>" << escape(ylabel) << "</text>\n";
}

inline std::string open(double w, double h) {
    std::ostringstream o;
    o << "<svg xmlns='http://www.w3.org/2000/svg' width='" << fmt(w) << "' height='" << fmt(h) << "' viewBox='0 0 "
      << fmt(w) << ' ' << fmt(h) << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    return o.str();
}

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

inline void polyline(std::ostringstream& o, const Frame& f, const std::vector<std::pair<double, double>>& pts,
                     const std::string& color, double width = 1.5, const std::string& dash = "") {
    o << "<polyline fill='none' stroke='" << color << "' stroke-width='" << fmt(width) << "'";
    if (!dash.empty()) o << " stroke-dasharray='" << dash << "'";
    o << " points='";
    for (const auto& [x, y] : pts)
        if (std::isfinite(x) && std::isfinite(y)) o << fmt(f.px(x)) << ',' << fmt(f.py(y)) << ' ';
    o << "'/>\n";
}

// Cells labelled by category index; overlays drawn as dashed lines.
inline std::string heatmap(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<int>& cat,
                           const std::vector<std::string>& names, const std::vector<Series>& overlays,
                           const std::string& xlabel, const std::string& ylabel, const std::string& title) {
    Frame f;
    const auto step = [](const std::vector<double>& v) { return v.size() > 1 ? v[1] - v[0] : 1.0; };
    const double dx = step(xs), dy = step(ys);
    f.x0 = xs.front() - dx / 2;
    f.x1 = xs.back() + dx / 2;
    f.y0 = ys.front() - dy / 2;
    f.y1 = ys.back() + dy / 2;
    std::ostringstream o;
    o << open(760, 440);
    o << "<text x='" << fmt(f.left) << "' y='18' font-size='14'>" << escape(title) << "</text>\n";
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
        for (std::size_t iy = 0; iy < ys.size(); ++iy) {
            const int c = cat[ix * ys.size() + iy];
            const double x = f.px(xs[ix] - dx / 2), y = f.py(ys[iy] + dy / 2);
            o << "<rect x='" << fmt(x) << "' y='" << fmt(y) << "' width='" << fmt(f.px(xs[ix] + dx / 2) - x)
              << "' height='" << fmt(f.py(ys[iy] - dy / 2) - y) << "' fill='"
              << palette()[static_cast<std::size_t>(c) % palette().size()] << "'/>\n";
        }
    }
    o << "<clipPath id='plot'><rect x='" << fmt(f.left) << "' y='" << fmt(f.top) << "' width='" << fmt(f.width)
      << "' height='" << fmt(f.height) << "'/></clipPath>\n<g clip-path='url(#plot)'>\n";
    for (const auto& s : overlays) polyline(o, f, s.points, "#111", 2.0, "6,3");
    o << "</g>\n";
    axes(o, f, xlabel, ylabel);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = f.top + 10 + 22.0 * static_cast<double>(i);
        o << "<rect x='570' y='" << fmt(y) << "' width='14' height='14' fill='" << palette()[i % palette().size()]
          << "'/><text x='590' y='" << fmt(y + 12) << "' font-size='12'>" << escape(names[i]) << "</text>\n";
    }
    for (std::size_t i = 0; i < overlays.size(); ++i) {
        const double y = f.top + 10 + 22.0 * static_cast<double>(names.size() + i);
        o << "<line x1='570' x2='584' y1='" << fmt(y + 7) << "' y2='" << fmt(y + 7)
          << "' stroke='#111' stroke-dasharray='4,2' stroke-width='2'/><text x='590' y='" << fmt(y + 12)
          << "' font-size='12'>" << escape(overlays[i].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline std::string line_chart(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel,
                              const std::string& title) {
    Frame f;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    f.x0 = xmin;
    f.x1 = xmax;
    f.y0 = std::min(0.0, ymin);
    f.y1 = std::max(1.0, ymax);
    std::ostringstream o;
    o << open(700, 440);
    o << "<text x='" << fmt(f.left) << "' y='18' font-size='14'>" << escape(title) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        polyline(o, f, series[i].points, palette()[i % palette().size()]);
        const double y = f.top + 10 + 20.0 * static_cast<double>(i);
        o << "<line x1='570' x2='590' y1='" << fmt(y) << "' y2='" << fmt(y) << "' stroke='"
          << palette()[i % palette().size()] << "' stroke-width='2'/><text x='596' y='" << fmt(y + 4)
          << "' font-size='12'>" << escape(series[i].name) << "</text>\n";
    }
    axes(o, f, xlabel, ylabel);
    o << "</svg>\n";
    return o.str();
}

// Barycentric plot; vertex 0 bottom-left, 1 bottom-right, 2 top.
inline std::string ternary(const std::vector<Eigen::VectorXd>& states, const std::vector<std::string>& names,
                           const std::string& title) {
    const double L = 420, ox = 60, oy = 460;
    auto map = [&](const Eigen::VectorXd& x) {
        return std::pair<double, double>{ox + L * (x(1) + 0.5 * x(2)), oy - L * (std::sqrt(3.0) / 2) * x(2)};
    };
    std::ostringstream o;
    o << open(540, 500);
    o << "<text x='20' y='20' font-size='14'>" << escape(title) << "</text>\n";
    const auto a = map(Eigen::Vector3d(1, 0, 0)), b = map(Eigen::Vector3d(0, 1, 0)), c = map(Eigen::Vector3d(0, 0, 1));
    o << "<polygon fill='none' stroke='#333' points='" << fmt(a.first) << ',' << fmt(a.second) << ' ' << fmt(b.first)
      << ',' << fmt(b.second) << ' ' << fmt(c.first) << ',' << fmt(c.second) << "'/>\n";
    o << "<text x='" << fmt(a.first - 10) << "' y='" << fmt(a.second + 18) << "' font-size='13'>" << escape(names[0])
      << "</text>\n<text x='" << fmt(b.first) << "' y='" << fmt(b.second + 18) << "' font-size='13'>" << escape(names[1])
      << "</text>\n<text x='" << fmt(c.first - 4) << "' y='" << fmt(c.second - 8) << "' font-size='13'>"
      << escape(names[2]) << "</text>\n";
    o << "<polyline fill='none' stroke='" << palette()[0] << "' stroke-width='1.5' points='";
    for (const auto& x : states) {
        const auto p = map(x);
        o << fmt(p.first) << ',' << fmt(p.second) << ' ';
    }
    o << "'/>\n";
    if (!states.empty()) {
        const auto s = map(states.front()), e = map(states.back());
        o << "<circle cx='" << fmt(s.first) << "' cy='" << fmt(s.second) << "' r='4' fill='" << palette()[2] << "'/>\n";
        o << "<circle cx='" << fmt(e.first) << "' cy='" << fmt(e.second) << "' r='4' fill='" << palette()[3] << "'/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace pairdyn::cli::svg
