#ifndef PPSTAT_CLI_CONFIG_HPP
#define PPSTAT_CLI_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppstat/core/error.hpp"
#include "ppstat/core/io.hpp"
#include "ppstat/core/operators.hpp"
#include "ppstat/core/region.hpp"
#include "ppstat/generators.hpp"

namespace ppstat::cli {

using nlohmann::json;

namespace schema {

inline std::string get_string(const json& obj, const char* key, const std::string& where)
{
    const auto& v = io::require_key(obj, key, where);
    if (!v.is_string()) {
        throw SchemaError(where + ": field '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

inline double number_or(const json& obj, const char* key, double fallback, const std::string& where)
{
    return obj.contains(key) ? io::get_number(obj, key, where) : fallback;
}

inline bool bool_or(const json& obj, const char* key, bool fallback, const std::string& where)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_boolean()) {
        throw SchemaError(where + ": field '" + key + "' must be true or false");
    }
    return obj.at(key).get<bool>();
}

inline std::uint64_t count_or(const json& obj, const char* key, std::uint64_t fallback, const std::string& where)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw SchemaError(where + ": field '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline Point point_from(const json& v, int dim, const std::string& where)
{
    if (!v.is_array() || static_cast<int>(v.size()) != dim) {
        throw SchemaError(where + ": expected a point with " + std::to_string(dim) + " coordinates");
    }
    Point p;
    for (int i = 0; i < dim; ++i) {
        const auto& c = v[static_cast<std::size_t>(i)];
        if (!c.is_number()) {
            throw SchemaError(where + ": coordinates must be numbers");
        }
        p[i] = c.get<double>();
    }
    return p;
}

inline std::vector<double> numbers(const json& v, const std::string& where)
{
    if (!v.is_array()) {
        throw SchemaError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) {
            throw SchemaError(where + ": expected an array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

/// Turns precondition failures raised while building typed values into schema errors.
template <typename Fn>
auto checked(const std::string& where, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

} // namespace schema

inline generators::Perturbation perturbation_from_json(const json& j)
{
    const std::string where = "perturbation";
    const auto kind = schema::get_string(j, "kind", where);
    return schema::checked(where, [&] {
        if (kind == "zero") {
            io::reject_unknown_keys(j, {"kind"}, where);
            return generators::Perturbation::zero();
        }
        if (kind == "uniform-ball") {
            io::reject_unknown_keys(j, {"kind", "radius"}, where);
            return generators::Perturbation::uniform_ball(io::get_number(j, "radius", where));
        }
        if (kind == "gaussian") {
            io::reject_unknown_keys(j, {"kind", "sigma"}, where);
            return generators::Perturbation::gaussian(io::get_number(j, "sigma", where));
        }
        if (kind == "heavy-tail") {
            io::reject_unknown_keys(j, {"kind", "alpha"}, where);
            return generators::Perturbation::heavy_tail(io::get_number(j, "alpha", where));
        }
        throw SchemaError("perturbation: kind must be zero, uniform-ball, gaussian or heavy-tail");
    });
}

inline generators::Model model_from_json(const json& j)
{
    const std::string where = "model";
    const auto kind = schema::get_string(j, "kind", where);
    auto probability = [&](const char* key, double fallback, bool allow_zero) {
        const double p = schema::number_or(j, key, fallback, where);
        if (!(p <= 1.0 && (allow_zero ? p >= 0.0 : p > 0.0))) {
            throw SchemaError(where + ": '" + key + "' must be a probability");
        }
        return p;
    };
    if (kind == "poisson") {
        io::reject_unknown_keys(j, {"kind", "intensity"}, where);
        const double lambda = io::get_number(j, "intensity", where);
        if (!(lambda > 0.0)) {
            throw SchemaError("model: intensity must be positive");
        }
        return generators::Poisson{lambda};
    }
    if (kind == "shifted-lattice") {
        io::reject_unknown_keys(j, {"kind"}, where);
        return generators::ShiftedLattice{};
    }
    if (kind == "site-percolation") {
        io::reject_unknown_keys(j, {"kind", "p"}, where);
        return generators::SitePercolation{probability("p", 0.5, true)};
    }
    if (kind == "perturbed-lattice") {
        io::reject_unknown_keys(j, {"kind", "perturbation", "shift", "margin"}, where);
        generators::PerturbedLattice m;
        m.perturbation = perturbation_from_json(io::require_key(j, "perturbation", where));
        m.shift = schema::bool_or(j, "shift", false, where);
        if (j.contains("margin")) {
            m.margin = io::get_number(j, "margin", where);
            if (!(*m.margin >= 0.0)) {
                throw SchemaError("model: margin must be non-negative");
            }
        }
        return m;
    }
    if (kind == "doubled-perturbed-lattice") {
        io::reject_unknown_keys(j, {"kind", "radius"}, where);
        const double r = schema::number_or(j, "radius", 0.25, where);
        if (!(r > 0.0 && r <= 0.25)) {
            throw SchemaError("model: radius must lie in (0, 1/4]");
        }
        return generators::DoubledPerturbedLattice{r};
    }
    if (kind == "column-deleted-stack") {
        io::reject_unknown_keys(j, {"kind", "p", "site_p"}, where);
        return generators::ColumnDeletedStack{probability("p", 0.5, false), probability("site_p", 0.75, true)};
    }
    if (kind == "interval-counts") {
        io::reject_unknown_keys(j, {"kind", "shift"}, where);
        return generators::IntervalCounts{schema::bool_or(j, "shift", false, where)};
    }
    if (kind == "gaf-planar") {
        io::reject_unknown_keys(j, {"kind"}, where);
        return generators::GafPlanar{};
    }
    if (kind == "gaf-hyperbolic") {
        io::reject_unknown_keys(j, {"kind", "palm"}, where);
        return generators::GafHyperbolic{schema::bool_or(j, "palm", false, where)};
    }
    if (kind == "superposition") {
        io::reject_unknown_keys(j, {"kind", "parts"}, where);
        const auto& parts = io::require_key(j, "parts", where);
        if (!parts.is_array() || parts.empty()) {
            throw SchemaError("model: superposition needs a non-empty 'parts' array");
        }
        generators::Superposition s;
        for (const auto& p : parts) {
            s.parts.push_back(model_from_json(p));
        }
        return s;
    }
    throw SchemaError("model: unknown kind '" + kind + "'");
}

inline generators::GeneratorSpec generator_from_json(const json& j, const std::string& where = "generator")
{
    io::reject_unknown_keys(j, {"model", "window", "metric"}, where);
    const Window window = io::window_from_json(io::require_key(j, "window", where));
    const Metric metric = j.contains("metric") ? io::metric_from_json(j.at("metric"), window)
                                               : Metric::euclidean(window.dimension());
    if (metric.dimension() != window.dimension()) {
        throw SchemaError(where + ": metric and window dimensions differ");
    }
    return {model_from_json(io::require_key(j, "model", where)), window, metric};
}

/// A set of boxes and balls, optionally with balls around the current points.
struct RegionSpec {
    std::vector<std::pair<Point, Point>> boxes;
    std::vector<std::pair<Point, double>> balls;
    std::optional<double> around_points;
    bool whole_window = false;

    [[nodiscard]] Region build(const PointPattern& pattern) const
    {
        return schema::checked("region", [&] {
            Region r = whole_window ? Region::from_window(pattern.window()) : Region(pattern.dimension());
            for (const auto& [lo, hi] : boxes) {
                r.add_box(lo, hi);
            }
            for (const auto& [c, rad] : balls) {
                r.add_ball(c, rad);
            }
            if (around_points) {
                for (const auto& p : pattern.points()) {
                    r.add_ball(p, *around_points);
                }
            }
            return r;
        });
    }
};

inline RegionSpec region_from_json(const json& j, int dim)
{
    const std::string where = "region";
    io::reject_unknown_keys(j, {"boxes", "balls", "around_points", "window"}, where);
    RegionSpec r;
    if (j.contains("boxes")) {
        for (const auto& b : j.at("boxes")) {
            if (!b.is_array() || static_cast<int>(b.size()) != dim) {
                throw SchemaError("region: each box is a list of [lo, hi] per axis");
            }
            Point lo;
            Point hi;
            for (int i = 0; i < dim; ++i) {
                const auto v = schema::numbers(b[static_cast<std::size_t>(i)], where);
                if (v.size() != 2) {
                    throw SchemaError("region: each box axis is [lo, hi]");
                }
                lo[i] = v[0];
                hi[i] = v[1];
            }
            r.boxes.emplace_back(lo, hi);
        }
    }
    if (j.contains("balls")) {
        for (const auto& b : j.at("balls")) {
            io::reject_unknown_keys(b, {"center", "radius"}, where);
            r.balls.emplace_back(schema::point_from(io::require_key(b, "center", where), dim, where),
                                 io::get_number(b, "radius", where));
        }
    }
    if (j.contains("around_points")) {
        r.around_points = io::get_number(j, "around_points", where);
    }
    r.whole_window = schema::bool_or(j, "window", false, where);
    return r;
}

namespace op {
struct Restrict {
    RegionSpec region;
    bool complement = false;
};
struct Insert {
    RegionSpec region;
    std::size_t count = 1;
};
struct Delete {
    PointSelector selector;
};
struct Recentre {
    std::optional<Point> origin;
    bool nearest_point = false;
};
} // namespace op

using Operation = std::variant<op::Restrict, op::Insert, op::Delete, op::Recentre>;

inline Operation operation_from_json(const json& j, int dim)
{
    const std::string where = "operation";
    const auto kind = schema::get_string(j, "op", where);
    if (kind == "restrict") {
        io::reject_unknown_keys(j, {"op", "region", "complement"}, where);
        return op::Restrict{region_from_json(io::require_key(j, "region", where), dim),
                            schema::bool_or(j, "complement", false, where)};
    }
    if (kind == "insert-uniform") {
        io::reject_unknown_keys(j, {"op", "region", "count"}, where);
        return op::Insert{region_from_json(io::require_key(j, "region", where), dim),
                          static_cast<std::size_t>(schema::count_or(j, "count", 1, where))};
    }
    if (kind == "delete") {
        io::reject_unknown_keys(j, {"op", "select", "indices"}, where);
        const auto sel = schema::get_string(j, "select", where);
        if (sel == "nearest-to-origin") {
            return op::Delete{selector::NearestToOrigin{}};
        }
        if (sel == "first-interval-rule") {
            return op::Delete{selector::FirstIntervalRule{}};
        }
        if (sel == "indices") {
            selector::Indices idx;
            for (const auto& v : io::require_key(j, "indices", where)) {
                if (!v.is_number_unsigned()) {
                    throw SchemaError("operation: indices must be non-negative integers");
                }
                idx.indices.push_back(v.get<std::size_t>());
            }
            return op::Delete{idx};
        }
        throw SchemaError("operation: select must be nearest-to-origin, first-interval-rule or indices");
    }
    if (kind == "recentre") {
        io::reject_unknown_keys(j, {"op", "origin", "nearest_point"}, where);
        op::Recentre r;
        if (j.contains("origin")) {
            r.origin = schema::point_from(j.at("origin"), dim, where);
        }
        r.nearest_point = schema::bool_or(j, "nearest_point", false, where);
        if (r.origin.has_value() == r.nearest_point) {
            throw SchemaError("operation: recentre needs exactly one of 'origin' or 'nearest_point'");
        }
        return r;
    }
    throw SchemaError("operation: unknown op '" + kind + "'");
}

inline PointPattern apply(const Operation& operation, const PointPattern& p, const RngSpec& rng)
{
    return schema::checked("operation", [&]() -> PointPattern {
        if (const auto* r = std::get_if<op::Restrict>(&operation)) {
            return restrict(p, r->region.build(p), r->complement);
        }
        if (const auto* ins = std::get_if<op::Insert>(&operation)) {
            return insert_uniform(p, ins->region.build(p), ins->count, rng);
        }
        if (const auto* del = std::get_if<op::Delete>(&operation)) {
            return delete_points(p, del->selector);
        }
        const auto& rc = std::get<op::Recentre>(operation);
        if (rc.origin) {
            return recentre(p, *rc.origin);
        }
        const auto idx = select_points(p, selector::NearestToOrigin{});
        return recentre(p, p[idx.front()]);
    });
}

enum class Command { generate, match, percolate, diagnose, palm, plot };

inline Command command_from_string(const std::string& s)
{
    if (s == "generate") {
        return Command::generate;
    }
    if (s == "match") {
        return Command::match;
    }
    if (s == "percolate") {
        return Command::percolate;
    }
    if (s == "diagnose") {
        return Command::diagnose;
    }
    if (s == "palm") {
        return Command::palm;
    }
    if (s == "plot") {
        return Command::plot;
    }
    throw SchemaError("command must be generate, match, percolate, diagnose, palm or plot");
}

struct GenerateParams {
    std::size_t replicates = 1;
};

struct MatchParams {
    std::size_t replicates = 1;
    double boundary_margin = 0.0;
    std::vector<double> tail_grid;
};

struct PercolateParams {
    std::size_t replicates = 1;
    double radius = 1.0;
    bool all_faces = false;
    std::optional<int> axis;
    std::optional<double> branch_radius;
    std::optional<Point> origin;
};

struct DiagnoseParams {
    std::size_t replicates = 200;
    std::vector<double> scales;
    bool indicator = false;
    std::vector<long> n1_scales;
    bool tolerance = true;
};

struct PalmParams {
    std::size_t replicates = 1000;
    double ball_radius = 2.0;
    std::size_t keep_patterns = 1;
};

struct PlotParams {
    std::string input;
    std::string kind;
    std::string output = "plot.svg";
};

using Params = std::variant<GenerateParams, MatchParams, PercolateParams, DiagnoseParams, PalmParams, PlotParams>;

enum class Format { json, csv, svg };

struct ExperimentConfig {
    Command command = Command::generate;
    RngSpec rng;
    std::optional<generators::GeneratorSpec> generator;
    std::optional<generators::GeneratorSpec> blue;
    std::vector<Operation> operations;
    Params params;
    std::vector<Format> formats{Format::json, Format::csv, Format::svg};
    std::optional<std::string> output;
    /// Canonical form of the validated document, hashed into the manifest.
    json document;

    [[nodiscard]] bool wants(Format f) const
    {
        return std::find(formats.begin(), formats.end(), f) != formats.end();
    }
};

namespace detail {

inline std::size_t replicates(const json& p, std::size_t fallback, const std::string& where)
{
    const auto n = schema::count_or(p, "replicates", fallback, where);
    if (n == 0) {
        throw SchemaError(where + ": replicates must be at least 1");
    }
    return static_cast<std::size_t>(n);
}

inline Params params_from_json(Command c, const json& p, int dim)
{
    const std::string where = "params";
    switch (c) {
    case Command::generate:
        io::reject_unknown_keys(p, {"replicates"}, where);
        return GenerateParams{replicates(p, 1, where)};
    case Command::match: {
        io::reject_unknown_keys(p, {"replicates", "boundary_margin", "tail_grid"}, where);
        MatchParams m;
        m.replicates = replicates(p, 1, where);
        m.boundary_margin = schema::number_or(p, "boundary_margin", 0.0, where);
        if (!(m.boundary_margin >= 0.0)) {
            throw SchemaError("params: boundary_margin must be non-negative");
        }
        if (p.contains("tail_grid")) {
            m.tail_grid = schema::numbers(p.at("tail_grid"), where);
        }
        return m;
    }
    case Command::percolate: {
        io::reject_unknown_keys(p, {"replicates", "radius", "mode", "axis", "branch_radius", "origin"}, where);
        PercolateParams m;
        m.replicates = replicates(p, 1, where);
        m.radius = io::get_number(p, "radius", where);
        if (!(m.radius > 0.0)) {
            throw SchemaError("params: radius must be positive");
        }
        const std::string mode = p.contains("mode") ? schema::get_string(p, "mode", where) : "touch-two-opposite";
        if (mode != "touch-all-faces" && mode != "touch-two-opposite") {
            throw SchemaError("params: mode must be touch-all-faces or touch-two-opposite");
        }
        m.all_faces = mode == "touch-all-faces";
        if (p.contains("axis")) {
            const auto a = schema::count_or(p, "axis", 0, where);
            if (static_cast<int>(a) >= dim) {
                throw SchemaError("params: axis out of range");
            }
            m.axis = static_cast<int>(a);
        }
        if (p.contains("branch_radius")) {
            m.branch_radius = io::get_number(p, "branch_radius", where);
        }
        if (p.contains("origin")) {
            m.origin = schema::point_from(p.at("origin"), dim, where);
        }
        return m;
    }
    case Command::diagnose: {
        io::reject_unknown_keys(p, {"replicates", "scales", "profile", "n1_scales", "tolerance"}, where);
        DiagnoseParams m;
        m.replicates = replicates(p, 200, where);
        if (p.contains("scales")) {
            m.scales = schema::numbers(p.at("scales"), where);
            for (double s : m.scales) {
                if (!(s > 0.0)) {
                    throw SchemaError("params: scales must be positive");
                }
            }
        }
        const std::string profile = p.contains("profile") ? schema::get_string(p, "profile", where) : "tent";
        if (profile != "tent" && profile != "indicator") {
            throw SchemaError("params: profile must be tent or indicator");
        }
        m.indicator = profile == "indicator";
        if (m.indicator && dim != 1) {
            throw SchemaError("params: the indicator profile is one-dimensional");
        }
        if (p.contains("n1_scales")) {
            if (dim != 1) {
                throw SchemaError("params: n1_scales needs a one-dimensional generator");
            }
            for (const auto& v : p.at("n1_scales")) {
                if (!v.is_number_integer() || v.get<long>() <= 0) {
                    throw SchemaError("params: n1_scales must be positive integers");
                }
                m.n1_scales.push_back(v.get<long>());
            }
        }
        m.tolerance = schema::bool_or(p, "tolerance", true, where);
        if (m.scales.empty() && m.n1_scales.empty() && !m.tolerance) {
            throw SchemaError("params: nothing to compute (no scales, no n1_scales, tolerance off)");
        }
        return m;
    }
    case Command::palm: {
        io::reject_unknown_keys(p, {"replicates", "ball_radius", "keep_patterns"}, where);
        PalmParams m;
        m.replicates = replicates(p, 1000, where);
        m.ball_radius = schema::number_or(p, "ball_radius", 2.0, where);
        if (!(m.ball_radius > 0.0)) {
            throw SchemaError("params: ball_radius must be positive");
        }
        m.keep_patterns = static_cast<std::size_t>(schema::count_or(p, "keep_patterns", 1, where));
        return m;
    }
    case Command::plot: {
        io::reject_unknown_keys(p, {"input", "kind", "output"}, where);
        PlotParams m;
        m.input = schema::get_string(p, "input", where);
        m.kind = schema::get_string(p, "kind", where);
        if (m.kind != "cdf" && m.kind != "variance-vs-scale" && m.kind != "tail-loglog") {
            throw SchemaError("params: kind must be cdf, variance-vs-scale or tail-loglog");
        }
        if (p.contains("output")) {
            m.output = schema::get_string(p, "output", where);
        }
        return m;
    }
    }
    throw SchemaError("unknown command");
}

} // namespace detail

/// Validates the whole document before anything runs.
inline ExperimentConfig config_from_json(const json& j)
{
    io::reject_unknown_keys(j, {"command", "seed", "stream", "generator", "blue", "operations", "params", "formats", "output"},
                            "config");
    ExperimentConfig c;
    c.command = command_from_string(schema::get_string(j, "command", "config"));
    c.rng.seed = schema::count_or(j, "seed", 0, "config");
    c.rng.stream = schema::count_or(j, "stream", 0, "config");
    int dim = 1;
    if (c.command != Command::plot) {
        c.generator = generator_from_json(io::require_key(j, "generator", "config"));
        dim = c.generator->window.dimension();
    } else if (j.contains("generator")) {
        throw SchemaError("config: plot takes no generator");
    }
    if (j.contains("blue")) {
        if (c.command != Command::match) {
            throw SchemaError("config: 'blue' is only valid for match");
        }
        c.blue = generator_from_json(j.at("blue"), "blue");
        if (c.blue->window.dimension() != dim) {
            throw SchemaError("blue: dimension differs from the red generator");
        }
    }
    if (j.contains("operations")) {
        if (c.command == Command::plot) {
            throw SchemaError("config: plot takes no operations");
        }
        if (!j.at("operations").is_array()) {
            throw SchemaError("config: operations must be an array");
        }
        for (const auto& o : j.at("operations")) {
            c.operations.push_back(operation_from_json(o, dim));
        }
    }
    c.params = detail::params_from_json(c.command, j.contains("params") ? j.at("params") : json::object(), dim);
    if (j.contains("formats")) {
        c.formats.clear();
        for (const auto& f : j.at("formats")) {
            const auto s = f.is_string() ? f.get<std::string>() : std::string();
            if (s == "json") {
                c.formats.push_back(Format::json);
            } else if (s == "csv") {
                c.formats.push_back(Format::csv);
            } else if (s == "svg") {
                c.formats.push_back(Format::svg);
            } else {
                throw SchemaError("config: formats entries must be json, csv or svg");
            }
        }
    }
    if (j.contains("output")) {
        c.output = schema::get_string(j, "output", "config");
    }
    c.document = j;
    return c;
}

inline ExperimentConfig config_from_string(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
}

} // namespace ppstat::cli

#endif // PPSTAT_CLI_CONFIG_HPP
