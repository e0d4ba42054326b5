#ifndef PPSTAT_CLI_RUN_HPP
#define PPSTAT_CLI_RUN_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "ppstat/cli/config.hpp"
#include "ppstat/cli/plot.hpp"
#include "ppstat/core/io.hpp"
#include "ppstat/core/parallel.hpp"
#include "ppstat/diagnostics.hpp"
#include "ppstat/generators.hpp"
#include "ppstat/matching.hpp"
#include "ppstat/percolation.hpp"

namespace ppstat::cli {

inline constexpr const char* version = "0.1.0";

inline std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw ComputeError("sha256: digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int k = 0; k < len; ++k) {
        std::snprintf(buf, sizeof buf, "%02x", md[k]);
        hex += buf;
    }
    return hex;
}

struct RunOptions {
    /// Overrides the config's "output"; "ppstat-out" when neither is set.
    std::optional<std::string> out_dir;
    int workers = 1;
    /// Multiplies every replicate count (rounded up, at least 1; diagnose
    /// keeps at least 100).
    double reps_scale = 1.0;
    std::optional<std::uint64_t> seed_override;
};

struct OutputRecord {
    std::string file;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string version;
    std::string config_hash;
    std::string command;
    RngSpec rng;
    double reps_scale = 1.0;
    double wall_clock_seconds = 0.0;
    std::vector<OutputRecord> outputs;

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& o : outputs) {
            files.push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}});
        }
        return {{"version", version},
                {"config_hash", config_hash},
                {"command", command},
                {"seed", rng.seed},
                {"stream", rng.stream},
                {"reps_scale", reps_scale},
                {"wall_clock_seconds", wall_clock_seconds},
                {"outputs", files}};
    }
};

/// PPSTAT_SEED as an unsigned integer, if set.
inline std::optional<std::uint64_t> seed_from_environment()
{
    const char* v = std::getenv("PPSTAT_SEED");
    if (v == nullptr) {
        return std::nullopt;
    }
    const std::string s(v);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw SchemaError("PPSTAT_SEED must be a non-negative integer, got '" + s + "'");
    }
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw SchemaError("PPSTAT_SEED is out of range: '" + s + "'");
    }
}

namespace detail {

inline const char* command_name(Command c)
{
    switch (c) {
    case Command::generate:
        return "generate";
    case Command::match:
        return "match";
    case Command::percolate:
        return "percolate";
    case Command::diagnose:
        return "diagnose";
    case Command::palm:
        return "palm";
    default:
        return "plot";
    }
}

inline std::size_t scaled(std::size_t n, double factor, std::size_t floor)
{
    const double v = std::ceil(static_cast<double>(n) * factor - 1e-9);
    return std::max(floor, static_cast<std::size_t>(std::max(1.0, v)));
}

inline std::string numbered(const std::string& stem, std::size_t k, std::size_t total, const std::string& ext)
{
    if (total == 1) {
        return stem + ext;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%04zu", k);
    return stem + buf + ext;
}

/// Sample, then apply the operations in order; operation k draws from child(k + 1).
inline PointPattern realise(const generators::GeneratorSpec& gen, const std::vector<Operation>& ops, const RngSpec& spec)
{
    PointPattern p = generators::sample(gen, spec.child(0));
    for (std::size_t k = 0; k < ops.size(); ++k) {
        p = apply(ops[k], p, spec.child(k + 1));
    }
    return p;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Outputs are assembled in memory and only written once the computation
/// has succeeded.
class OutputSet {
public:
    void add(std::string name, std::string text) { files_.emplace_back(std::move(name), std::move(text)); }

    /// Writes everything, then the manifest. Removes what was written if any
    /// write fails.
    void commit(const std::filesystem::path& dir, RunManifest& manifest)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
        }
        std::vector<std::filesystem::path> written;
        try {
            for (const auto& [name, text] : files_) {
                const auto path = dir / name;
                io::write_text_file(path.string(), text);
                written.push_back(path);
                manifest.outputs.push_back({name, sha256_hex(text), text.size()});
            }
            const auto path = dir / "manifest.json";
            io::write_text_file(path.string(), dump(manifest.to_json()));
        } catch (...) {
            for (const auto& p : written) {
                std::filesystem::remove(p, ec);
            }
            throw;
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

/// [[value, relative frequency], ...] in increasing value order.
inline nlohmann::json frequencies(const std::vector<long>& values)
{
    std::map<long, std::size_t> counts;
    for (long v : values) {
        ++counts[v];
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [v, c] : counts) {
        out.push_back({v, static_cast<double>(c) / static_cast<double>(values.size())});
    }
    return out;
}

inline void run_generate(const ExperimentConfig& c, const GenerateParams& p, const RunOptions& o, OutputSet& out)
{
    const auto reps = scaled(p.replicates, o.reps_scale, 1);
    const auto patterns = parallel_map(reps, o.workers, [&](std::size_t r) {
        return io::pattern_to_string(realise(*c.generator, c.operations, c.rng.child(r)));
    });
    for (std::size_t r = 0; r < reps; ++r) {
        out.add(numbered("pattern", r, reps, ".json"), patterns[r]);
    }
}

inline void run_match(const ExperimentConfig& c, const MatchParams& p, const RunOptions& o, OutputSet& out)
{
    const auto reps = scaled(p.replicates, o.reps_scale, 1);
    auto one = [&](std::size_t r) {
        const RngSpec spec = c.rng.child(r);
        const PointPattern red = realise(*c.generator, c.operations, spec.child(0));
        std::optional<PointPattern> blue;
        if (c.blue) {
            blue = generators::sample(*c.blue, spec.child(1));
        }
        auto m = blue ? matching::stable_match(red, *blue, c.generator->metric) : matching::stable_match(red, c.generator->metric);
        auto stats = matching::match_stats(m, red, p.boundary_margin, p.tail_grid);
        return std::make_pair(std::move(m), std::move(stats));
    };
    std::vector<matching::PalmMatchStats> parts;
    if (reps == 1) {
        auto [m, stats] = one(0);
        out.add("matching.json", dump(matching::matching_to_json(m)));
        parts.push_back(std::move(stats));
    } else {
        parts = parallel_map(reps, o.workers, [&](std::size_t r) { return one(r).second; });
    }
    const auto pooled = matching::pool_stats(parts, p.tail_grid);
    auto summary = matching::summary_json(pooled);
    summary["replicates"] = reps;
    summary["mode"] = c.blue ? "two-colour" : "one-colour";
    summary["max_distance"] = pooled.distances.back();
    out.add("summary.json", dump(summary));
    const auto cdf = matching::cdf_csv(pooled);
    const auto tail = matching::tail_csv(pooled);
    if (c.wants(Format::csv)) {
        out.add("cdf.csv", cdf);
        out.add("tail.csv", tail);
    }
    if (c.wants(Format::svg)) {
        out.add("cdf.svg", emit_plot(cdf, PlotKind::cdf).svg);
        const auto positive =
            std::count_if(pooled.tail.begin(), pooled.tail.end(), [](const auto& t) { return t.first > 0.0 && t.second > 0.0; });
        if (positive >= 2) {
            out.add("tail.svg", emit_plot(tail, PlotKind::tail_loglog).svg);
        }
    }
}

struct PercolationRow {
    std::size_t n_points = 0;
    std::size_t n_clusters = 0;
    std::size_t n_spanning = 0;
    std::optional<std::size_t> m_branches;
};

inline void run_percolate(const ExperimentConfig& c, const PercolateParams& p, const RunOptions& o, OutputSet& out)
{
    const auto reps = scaled(p.replicates, o.reps_scale, 1);
    const auto mode = p.all_faces ? percolation::SpanMode::touch_all_faces : percolation::SpanMode::touch_two_opposite;
    const auto rows = parallel_map(reps, o.workers, [&](std::size_t r) {
        const PointPattern pattern = realise(*c.generator, c.operations, c.rng.child(r));
        const auto labels = percolation::build_boolean_model(pattern, p.radius);
        PercolationRow row;
        row.n_points = pattern.size();
        row.n_clusters = labels.cluster_count();
        row.n_spanning = percolation::count_spanning_clusters(labels, mode, p.axis);
        if (p.branch_radius) {
            const Point origin = p.origin.value_or(pattern.window().center());
            row.m_branches = percolation::count_m_branches(labels, pattern, origin, *p.branch_radius);
        }
        return row;
    });
    std::ostringstream csv;
    csv << "replicate,n_points,R,n_clusters,n_spanning,m_branches\n";
    std::vector<long> spanning;
    std::vector<long> branches;
    double clusters = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto& row = rows[r];
        csv << r << ',' << row.n_points << ',' << io::format_double(p.radius) << ',' << row.n_clusters << ','
            << row.n_spanning << ',';
        if (row.m_branches) {
            csv << *row.m_branches;
            branches.push_back(static_cast<long>(*row.m_branches));
        }
        csv << '\n';
        spanning.push_back(static_cast<long>(row.n_spanning));
        clusters += static_cast<double>(row.n_clusters);
    }
    nlohmann::json summary{{"replicates", reps},
                           {"R", p.radius},
                           {"mode", p.all_faces ? "touch-all-faces" : "touch-two-opposite"},
                           {"mean_clusters", clusters / static_cast<double>(reps)},
                           {"spanning_frequencies", frequencies(spanning)}};
    if (p.axis) {
        summary["axis"] = *p.axis;
    }
    if (p.branch_radius) {
        summary["branch_radius"] = *p.branch_radius;
        summary["branch_frequencies"] = frequencies(branches);
    }
    out.add("summary.json", dump(summary));
    if (c.wants(Format::csv)) {
        out.add("percolation.csv", csv.str());
    }
}

inline void run_diagnose(const ExperimentConfig& c, const DiagnoseParams& p, const RunOptions& o, OutputSet& out)
{
    const auto reps = scaled(p.replicates, o.reps_scale, 100);
    const auto& gen = *c.generator;
    nlohmann::json summary{{"replicates", reps}};
    const diagnostics::Sampler sampler = [&](const RngSpec& r) { return realise(gen, c.operations, r); };
    if (!p.scales.empty()) {
        for (double s : p.scales) {
            diagnostics::require_window_fits(gen, s, "diagnose");
        }
        diagnostics::FluctuationOptions fo;
        fo.workers = o.workers;
        fo.profile = p.indicator ? diagnostics::Profile::indicator : diagnostics::Profile::tent;
        const auto stats = diagnostics::estimate_fluctuation(sampler, p.scales, reps, c.rng.child(0), fo);
        std::vector<double> variances;
        for (const auto& s : stats.scales) {
            variances.push_back(s.variance);
        }
        summary["fluctuation"] = {{"profile", p.indicator ? "indicator" : "tent"},
                                  {"kendall_tau", stats.kendall_tau},
                                  {"trend", p.scales.size() >= 4 ? diagnostics::to_string(diagnostics::classify_trend(p.scales, variances))
                                                                 : "undetermined"}};
        const auto replicate = diagnostics::replicate_csv(stats);
        if (c.wants(Format::csv)) {
            out.add("replicate.csv", replicate);
            out.add("covariance.csv", diagnostics::covariance_csv(stats));
        }
        if (c.wants(Format::svg)) {
            out.add("variance.svg", emit_plot(replicate, PlotKind::variance_vs_scale).svg);
        }
    }
    if (!p.n1_scales.empty()) {
        const double centre = gen.window.center()[0];
        for (long n : p.n1_scales) {
            const auto& b = gen.window.bound(0);
            if (gen.metric.kind() == MetricKind::toroidal ? 2.0 * static_cast<double>(n) > b.length()
                                                          : centre - static_cast<double>(n) < b.lo ||
                                                                centre + static_cast<double>(n) > b.hi) {
                throw std::invalid_argument("diagnose: window too small for n1 scale " + std::to_string(n));
            }
        }
        const auto rows = parallel_map(reps, o.workers, [&](std::size_t r) {
            const PointPattern pattern = sampler(c.rng.child(1).child(r));
            std::vector<long> v;
            for (long n : p.n1_scales) {
                v.push_back(diagnostics::n1_statistic(pattern, n, centre));
            }
            return v;
        });
        std::ostringstream csv;
        std::ostringstream hist;
        csv << "n,reps,mean,var,var_se,mean_abs,min,max\n";
        hist << "n,value,count\n";
        for (std::size_t i = 0; i < p.n1_scales.size(); ++i) {
            std::vector<double> x;
            std::map<long, std::size_t> counts;
            double abs_sum = 0.0;
            for (const auto& row : rows) {
                x.push_back(static_cast<double>(row[i]));
                abs_sum += std::fabs(static_cast<double>(row[i]));
                ++counts[row[i]];
            }
            const auto m = diagnostics::sample_moments(static_cast<double>(p.n1_scales[i]), x);
            csv << p.n1_scales[i] << ',' << reps << ',' << io::format_double(m.mean) << ',' << io::format_double(m.variance)
                << ',' << io::format_double(m.variance_se) << ',' << io::format_double(abs_sum / static_cast<double>(reps))
                << ',' << counts.begin()->first << ',' << counts.rbegin()->first << '\n';
            for (const auto& [v, k] : counts) {
                hist << p.n1_scales[i] << ',' << v << ',' << k << '\n';
            }
        }
        if (c.wants(Format::csv)) {
            out.add("n1.csv", csv.str());
            out.add("n1_histogram.csv", hist.str());
        }
    }
    if (p.tolerance) {
        if (!c.operations.empty()) {
            throw SchemaError("diagnose: operations cannot be combined with the tolerance report");
        }
        diagnostics::ToleranceOptions to;
        to.reps = reps;
        to.workers = o.workers;
        const auto report = diagnostics::tolerance_report(gen, c.rng.child(2), to);
        out.add("verdict.json", dump(diagnostics::verdict_json(report)));
        if (c.wants(Format::csv)) {
            out.add("verdict_replicate.csv", diagnostics::replicate_csv(report.fluctuation));
        }
    }
    out.add("summary.json", dump(summary));
}

inline void run_palm(const ExperimentConfig& c, const PalmParams& p, const RunOptions& o, OutputSet& out)
{
    const auto reps = scaled(p.replicates, o.reps_scale, 1);
    const auto& gen = *c.generator;
    diagnostics::PalmSampler sampler([&](const RngSpec& r) { return realise(gen, c.operations, r); }, gen.window,
                                     c.rng.child(~std::uint64_t{0}));
    const Point origin = make_point(std::vector<double>(static_cast<std::size_t>(gen.window.dimension()), 0.0));
    std::vector<long> counts;
    std::ostringstream csv;
    csv << "replicate,count\n";
    for (std::size_t r = 0; r < reps; ++r) {
        const PointPattern pattern = sampler.sample(c.rng.child(r));
        long n = -1;
        for (const auto& x : pattern.points()) {
            n += pattern.metric()(x, origin) < p.ball_radius ? 1 : 0;
        }
        counts.push_back(n);
        csv << r << ',' << n << '\n';
        if (r < p.keep_patterns) {
            out.add(numbered("palm_pattern", r, std::min(reps, p.keep_patterns), ".json"), io::pattern_to_string(pattern));
        }
    }
    std::vector<double> x(counts.begin(), counts.end());
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) {
        var += (v - mean) * (v - mean);
    }
    var = x.size() > 1 ? var / static_cast<double>(x.size() - 1) : 0.0;
    nlohmann::json summary{{"replicates", reps},
                           {"ball_radius", p.ball_radius},
                           {"count_excludes_origin", true},
                           {"mean", mean},
                           {"var", var},
                           {"frequencies", frequencies(counts)},
                           {"size_bias_cap", sampler.cap()},
                           {"cap_exceeded", sampler.cap_exceeded()}};
    out.add("summary.json", dump(summary));
    if (c.wants(Format::csv)) {
        out.add("palm_counts.csv", csv.str());
    }
}

inline void run_plot(const PlotParams& p, OutputSet& out)
{
    const auto plot = emit_plot(io::read_text_file(p.input), plot_kind_from_string(p.kind));
    out.add(p.output, plot.svg);
    if (plot.slope) {
        out.add("plot_summary.json", dump({{"kind", p.kind}, {"slope", *plot.slope}}));
    }
}

} // namespace detail

/// Runs one experiment. Nothing is written unless the computation succeeds;
/// manifest.json is written last.
inline RunManifest run(ExperimentConfig config, const RunOptions& options = {})
{
    const auto started = std::chrono::steady_clock::now();
    if (!(options.reps_scale > 0.0) || !std::isfinite(options.reps_scale)) {
        throw SchemaError("--reps-scale must be a positive number");
    }
    if (options.seed_override) {
        config.rng.seed = *options.seed_override;
        config.document["seed"] = *options.seed_override;
    }
    RunManifest manifest;
    manifest.version = version;
    manifest.command = detail::command_name(config.command);
    manifest.rng = config.rng;
    manifest.reps_scale = options.reps_scale;
    const nlohmann::json effective{{"config", config.document}, {"reps_scale", options.reps_scale}};
    manifest.config_hash = sha256_hex(effective.dump());

    detail::OutputSet out;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GenerateParams>) {
                detail::run_generate(config, p, options, out);
            } else if constexpr (std::is_same_v<P, MatchParams>) {
                detail::run_match(config, p, options, out);
            } else if constexpr (std::is_same_v<P, PercolateParams>) {
                detail::run_percolate(config, p, options, out);
            } else if constexpr (std::is_same_v<P, DiagnoseParams>) {
                detail::run_diagnose(config, p, options, out);
            } else if constexpr (std::is_same_v<P, PalmParams>) {
                detail::run_palm(config, p, options, out);
            } else {
                detail::run_plot(p, out);
            }
        },
        config.params);

    const std::string dir = options.out_dir.value_or(config.output.value_or("ppstat-out"));
    manifest.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.commit(dir, manifest);
    return manifest;
}

} // namespace ppstat::cli

#endif // PPSTAT_CLI_RUN_HPP
