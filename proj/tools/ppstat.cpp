#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ppstat/cli/config.hpp"
#include "ppstat/cli/run.hpp"
#include "ppstat/core/io.hpp"

namespace {

std::string one_line(std::string s)
{
    for (char& ch : s) {
        if (ch == '\n' || ch == '\r') {
            ch = ' ';
        }
    }
    return s;
}

int fail(int code, const char* kind, const std::string& message)
{
    std::cerr << "ppstat: error: " << kind << ": " << one_line(message) << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ppstat: point-process simulation and analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ppstat::cli::version);

    std::string config_path;
    std::string out_dir;
    int workers = 1;
    double reps_scale = 1.0;
    for (const char* name : {"generate", "match", "percolate", "diagnose", "palm", "plot"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--reps-scale", reps_scale, "replicate count multiplier")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, "usage", e.what());
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        auto config = ppstat::cli::config_from_string(ppstat::io::read_text_file(config_path));
        if (ppstat::cli::detail::command_name(config.command) != command) {
            throw ppstat::SchemaError("config command '" + std::string(ppstat::cli::detail::command_name(config.command)) +
                                      "' does not match subcommand '" + command + "'");
        }
        ppstat::cli::RunOptions options;
        if (!out_dir.empty()) {
            options.out_dir = out_dir;
        }
        options.workers = workers;
        options.reps_scale = reps_scale;
        options.seed_override = ppstat::cli::seed_from_environment();
        const auto manifest = ppstat::cli::run(std::move(config), options);
        std::cout << "ppstat: " << command << ": " << manifest.outputs.size() << " outputs, config "
                  << manifest.config_hash.substr(0, 12) << '\n';
        return 0;
    } catch (const ppstat::SchemaError& e) {
        return fail(2, "schema", e.what());
    } catch (const ppstat::IoError& e) {
        return fail(4, "io", e.what());
    } catch (const ppstat::ComputeError& e) {
        return fail(3, "compute", e.what());
    } catch (const std::exception& e) {
        return fail(3, "compute", e.what());
    }
}
