#ifndef PPSTAT_CORE_IO_HPP
#define PPSTAT_CORE_IO_HPP

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ppstat/core/error.hpp"
#include "ppstat/core/pattern.hpp"

namespace ppstat::io {

using nlohmann::json;

/// 17 significant digits, enough for a bit-exact round trip.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object()) {
        throw SchemaError(where + ": expected an object");
    }
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || item.key() == a;
        }
        if (!ok) {
            throw SchemaError(where + ": unknown field '" + item.key() + "'");
        }
    }
}

inline const json& require_key(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key)) {
        throw SchemaError(where + ": missing field '" + std::string(key) + "'");
    }
    return obj.at(key);
}

inline double get_number(const json& obj, const char* key, const std::string& where)
{
    const auto& v = require_key(obj, key, where);
    if (!v.is_number()) {
        throw SchemaError(where + ": field '" + std::string(key) + "' must be a number");
    }
    return v.get<double>();
}

inline json window_to_json(const Window& w)
{
    if (w.kind() == WindowKind::disc) {
        return {{"kind", "disc"}, {"center", {w.center()[0], w.center()[1]}}, {"radius", w.radius()}};
    }
    json bounds = json::array();
    for (const auto& b : w.bounds()) {
        bounds.push_back({b.lo, b.hi});
    }
    return {{"kind", "box"}, {"bounds", bounds}};
}

inline Window window_from_json(const json& j)
{
    const std::string where = "window";
    const auto kind = require_key(j, "kind", where);
    if (kind == "box") {
        reject_unknown_keys(j, {"kind", "bounds"}, where);
        const auto& b = require_key(j, "bounds", where);
        if (!b.is_array()) {
            throw SchemaError("window: bounds must be an array of [a, b] pairs");
        }
        std::vector<Interval> bounds;
        for (const auto& pair : b) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
                throw SchemaError("window: each bound must be a pair of numbers");
            }
            bounds.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        try {
            return Window::box(std::move(bounds));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(std::string("window: ") + e.what());
        }
    }
    if (kind == "disc") {
        reject_unknown_keys(j, {"kind", "center", "radius"}, where);
        const auto& c = require_key(j, "center", where);
        if (!c.is_array() || c.size() != 2) {
            throw SchemaError("window: disc center must be [x, y]");
        }
        try {
            return Window::disc(make_point({c[0].get<double>(), c[1].get<double>()}), get_number(j, "radius", where));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(std::string("window: ") + e.what());
        }
    }
    throw SchemaError("window: kind must be 'box' or 'disc'");
}

inline json metric_to_json(const Metric& m)
{
    json j = {{"kind", to_string(m.kind())}};
    if (m.kind() == MetricKind::toroidal) {
        json periods = json::array();
        for (int i = 0; i < m.dimension(); ++i) {
            periods.push_back(m.period(i));
        }
        j["periods"] = periods;
    }
    return j;
}

/// Metric for a window; toroidal periods default to the window side lengths.
inline Metric metric_from_json(const json& j, const Window& window)
{
    const std::string where = "metric";
    const auto kind = require_key(j, "kind", where);
    try {
        if (kind == "euclidean") {
            reject_unknown_keys(j, {"kind"}, where);
            return Metric::euclidean(window.dimension());
        }
        if (kind == "toroidal") {
            reject_unknown_keys(j, {"kind", "periods"}, where);
            if (j.contains("periods")) {
                return Metric::toroidal(j.at("periods").get<std::vector<double>>());
            }
            return Metric::toroidal(window);
        }
        if (kind == "hyperbolic-disc") {
            reject_unknown_keys(j, {"kind"}, where);
            return Metric::hyperbolic_disc();
        }
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("metric: ") + e.what());
    } catch (const json::exception& e) {
        throw SchemaError(std::string("metric: ") + e.what());
    }
    throw SchemaError("metric: kind must be 'euclidean', 'toroidal' or 'hyperbolic-disc'");
}

inline Colour colour_from_string(const std::string& s)
{
    if (s == "red") {
        return Colour::red;
    }
    if (s == "blue") {
        return Colour::blue;
    }
    if (s == "none") {
        return Colour::none;
    }
    throw SchemaError("label must be 'red', 'blue' or 'none'");
}

/// Pattern file text: one JSON document, points in canonical order, 17 significant digits.
inline std::string pattern_to_string(const PointPattern& p)
{
    std::ostringstream os;
    os << "{\n";
    os << "  \"dimension\": " << p.dimension() << ",\n";
    os << "  \"window\": " << window_to_json(p.window()).dump() << ",\n";
    os << "  \"metric\": " << metric_to_json(p.metric()).dump() << ",\n";
    os << "  \"label\": \"" << to_string(p.label()) << "\",\n";
    os << "  \"points\": [";
    for (std::size_t k = 0; k < p.size(); ++k) {
        os << (k ? ",\n    [" : "\n    [");
        for (int i = 0; i < p.dimension(); ++i) {
            os << (i ? ", " : "") << format_double(p[k][i]);
        }
        os << ']';
    }
    os << (p.empty() ? "]\n" : "\n  ]\n");
    os << "}\n";
    return os.str();
}

inline PointPattern pattern_from_json(const json& j)
{
    reject_unknown_keys(j, {"dimension", "window", "metric", "label", "points"}, "pattern");
    const auto dim = static_cast<int>(get_number(j, "dimension", "pattern"));
    const Window window = window_from_json(require_key(j, "window", "pattern"));
    if (window.dimension() != dim) {
        throw SchemaError("pattern: dimension does not match window");
    }
    const Metric metric = metric_from_json(require_key(j, "metric", "pattern"), window);
    const Colour label = j.contains("label") ? colour_from_string(j.at("label").get<std::string>()) : Colour::none;
    std::vector<Point> points;
    for (const auto& row : require_key(j, "points", "pattern")) {
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            throw SchemaError("pattern: every point must have exactly `dimension` coordinates");
        }
        Point p;
        for (int i = 0; i < dim; ++i) {
            p[i] = row[static_cast<std::size_t>(i)].get<double>();
        }
        points.push_back(p);
    }
    try {
        return PointPattern(window, metric, std::move(points), label);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("pattern: ") + e.what());
    }
}

inline PointPattern pattern_from_string(const std::string& text)
{
    try {
        return pattern_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("pattern: ") + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_pattern(const std::string& path, const PointPattern& p) { write_text_file(path, pattern_to_string(p)); }

inline PointPattern read_pattern(const std::string& path) { return pattern_from_string(read_text_file(path)); }

} // namespace ppstat::io

#endif // PPSTAT_CORE_IO_HPP
