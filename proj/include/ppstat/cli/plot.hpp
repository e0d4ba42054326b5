#ifndef PPSTAT_CLI_PLOT_HPP
#define PPSTAT_CLI_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppstat/core/error.hpp"

namespace ppstat::cli {

/// Numeric CSV with a header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const
    {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) {
            throw SchemaError("csv: missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - columns.begin());
    }

    [[nodiscard]] std::vector<double> values(const std::string& name) const
    {
        const auto c = column(name);
        std::vector<double> v;
        for (const auto& r : rows) {
            v.push_back(r[c]);
        }
        return v;
    }
};

inline Table parse_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    Table t;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) {
            out.push_back(cell);
        }
        if (!s.empty() && s.back() == ',') {
            out.emplace_back();
        }
        return out;
    };
    if (!std::getline(in, line) || line.empty()) {
        throw SchemaError("csv: missing header row");
    }
    t.columns = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != t.columns.size()) {
            throw SchemaError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(t.columns.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size()) {
                throw SchemaError("csv: line " + std::to_string(lineno) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) {
        throw SchemaError("csv: no data rows");
    }
    return t;
}

enum class PlotKind { cdf, variance_vs_scale, tail_loglog };

inline PlotKind plot_kind_from_string(const std::string& s)
{
    if (s == "cdf") {
        return PlotKind::cdf;
    }
    if (s == "variance-vs-scale") {
        return PlotKind::variance_vs_scale;
    }
    if (s == "tail-loglog") {
        return PlotKind::tail_loglog;
    }
    throw SchemaError("plot kind must be cdf, variance-vs-scale or tail-loglog");
}

struct Plot {
    std::string svg;
    /// Least-squares slope of log P against log r (tail-loglog only).
    std::optional<double> slope;
};

namespace detail {

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Frame {
    double x0;
    double x1;
    double y0;
    double y1;
    bool log_axes = false;

    static constexpr double width = 640.0;
    static constexpr double height = 420.0;
    static constexpr double left = 70.0;
    static constexpr double right = 20.0;
    static constexpr double top = 30.0;
    static constexpr double bottom = 50.0;

    [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    [[nodiscard]] double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline void widen(double& lo, double& hi)
{
    if (hi > lo) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        return;
    }
    const double pad = lo == 0.0 ? 1.0 : 0.5 * std::fabs(lo);
    lo -= pad;
    hi += pad;
}

inline std::string axes(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel)
{
    std::ostringstream os;
    const double xa = Frame::left;
    const double xb = Frame::width - Frame::right;
    const double ya = Frame::top;
    const double yb = Frame::height - Frame::bottom;
    os << "<rect x=\"0\" y=\"0\" width=\"" << Frame::width << "\" height=\"" << Frame::height << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << xa << "\" y1=\"" << yb << "\" x2=\"" << xb << "\" y2=\"" << yb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << xa << "\" y1=\"" << ya << "\" x2=\"" << xa << "\" y2=\"" << yb << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double tx = f.x0 + (f.x1 - f.x0) * k / 4.0;
        const double ty = f.y0 + (f.y1 - f.y0) * k / 4.0;
        const double lx = f.log_axes ? std::pow(10.0, tx) : tx;
        const double ly = f.log_axes ? std::pow(10.0, ty) : ty;
        os << "<line x1=\"" << num(f.px(tx)) << "\" y1=\"" << yb << "\" x2=\"" << num(f.px(tx)) << "\" y2=\"" << yb + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(f.px(tx)) << "\" y=\"" << yb + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
           << num(lx) << "</text>\n";
        os << "<line x1=\"" << xa - 5 << "\" y1=\"" << num(f.py(ty)) << "\" x2=\"" << xa << "\" y2=\"" << num(f.py(ty))
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << xa - 8 << "\" y=\"" << num(f.py(ty) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
           << num(ly) << "</text>\n";
    }
    os << "<text x=\"" << Frame::width / 2 << "\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";
    os << "<text x=\"" << (xa + xb) / 2 << "\" y=\"" << Frame::height - 12 << "\" font-size=\"12\" text-anchor=\"middle\">"
       << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << (ya + yb) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (ya + yb) / 2 << ")\">" << ylabel << "</text>\n";
    return os.str();
}

inline std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts, const char* colour)
{
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
        os << (k ? " " : "") << num(f.px(pts[k].first)) << ',' << num(f.py(pts[k].second));
    }
    os << "\"/>\n";
    return os.str();
}

inline std::string document(const std::string& body)
{
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::width << "\" height=\"" << Frame::height
       << "\" viewBox=\"0 0 " << Frame::width << ' ' << Frame::height << "\" font-family=\"sans-serif\">\n"
       << body << "</svg>\n";
    return os.str();
}

inline Frame frame_for(const std::vector<double>& x, const std::vector<double>& y)
{
    Frame f{};
    const auto [xl, xh] = std::minmax_element(x.begin(), x.end());
    const auto [yl, yh] = std::minmax_element(y.begin(), y.end());
    f.x0 = *xl;
    f.x1 = *xh;
    f.y0 = *yl;
    f.y1 = *yh;
    widen(f.x0, f.x1);
    widen(f.y0, f.y1);
    return f;
}

} // namespace detail

/// Least-squares slope of y on x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto n = static_cast<double>(x.size());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    if (sxx == 0.0) {
        throw SchemaError("plot: cannot fit a slope to a single abscissa");
    }
    return sxy / sxx;
}

/// cdf reads columns r,F; variance-vs-scale reads scale,var (and var_se when
/// present); tail-loglog reads r and P (or F, converted to 1 - F).
inline Plot emit_plot(const std::string& csv, PlotKind kind)
{
    const Table t = parse_csv(csv);
    Plot out;
    std::string body;
    if (kind == PlotKind::cdf) {
        auto r = t.values("r");
        auto F = t.values("F");
        std::vector<std::pair<double, double>> steps;
        const double start = std::min(0.0, *std::min_element(r.begin(), r.end()));
        steps.emplace_back(start, 0.0);
        double level = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            steps.emplace_back(r[k], level);
            level = F[k];
            steps.emplace_back(r[k], level);
        }
        const double end = r.back() + 0.05 * (r.back() - start) + (r.back() == start ? 1.0 : 0.0);
        steps.emplace_back(end, level);
        std::vector<double> xs{start, end};
        std::vector<double> ys{0.0, 1.0};
        const auto f = detail::frame_for(xs, ys);
        body = detail::axes(f, "Match-distance distribution", "r", "F(r)") + detail::polyline(f, steps, "#1f5fa8");
    } else if (kind == PlotKind::variance_vs_scale) {
        const auto s = t.values("scale");
        const auto v = t.values("var");
        std::vector<double> lo = v;
        std::vector<double> hi = v;
        const bool has_se =
            std::find(t.columns.begin(), t.columns.end(), std::string("var_se")) != t.columns.end();
        if (has_se) {
            const auto se = t.values("var_se");
            for (std::size_t k = 0; k < v.size(); ++k) {
                lo[k] = v[k] - se[k];
                hi[k] = v[k] + se[k];
            }
        }
        std::vector<double> ys = lo;
        ys.insert(ys.end(), hi.begin(), hi.end());
        const auto f = detail::frame_for(s, ys);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = 0; k < s.size(); ++k) {
            pts.emplace_back(s[k], v[k]);
        }
        body = detail::axes(f, "Variance of the linear statistic", "scale", "variance") + detail::polyline(f, pts, "#a83a1f");
        for (std::size_t k = 0; k < s.size(); ++k) {
            body += "<circle cx=\"" + detail::num(f.px(s[k])) + "\" cy=\"" + detail::num(f.py(v[k])) +
                    "\" r=\"3\" fill=\"#a83a1f\"/>\n";
            if (has_se) {
                body += "<line x1=\"" + detail::num(f.px(s[k])) + "\" y1=\"" + detail::num(f.py(lo[k])) + "\" x2=\"" +
                        detail::num(f.px(s[k])) + "\" y2=\"" + detail::num(f.py(hi[k])) + "\" stroke=\"#a83a1f\"/>\n";
            }
        }
    } else {
        const auto r = t.values("r");
        std::vector<double> p;
        if (std::find(t.columns.begin(), t.columns.end(), std::string("P")) != t.columns.end()) {
            p = t.values("P");
        } else {
            for (double F : t.values("F")) {
                p.push_back(1.0 - F);
            }
        }
        std::vector<double> lx;
        std::vector<double> ly;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (r[k] > 0.0 && p[k] > 0.0) {
                lx.push_back(std::log10(r[k]));
                ly.push_back(std::log10(p[k]));
            }
        }
        if (lx.size() < 2) {
            throw SchemaError("plot: tail-loglog needs at least two rows with r > 0 and P > 0");
        }
        out.slope = fit_slope(lx, ly);
        auto f = detail::frame_for(lx, ly);
        f.log_axes = true;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = 0; k < lx.size(); ++k) {
            pts.emplace_back(lx[k], ly[k]);
        }
        body = detail::axes(f, "Tail P(X > r), fitted slope " + detail::num(*out.slope), "r", "P(X > r)") +
               detail::polyline(f, pts, "#2b7a3d");
    }
    out.svg = detail::document(body);
    return out;
}

} // namespace ppstat::cli

#endif // PPSTAT_CLI_PLOT_HPP
