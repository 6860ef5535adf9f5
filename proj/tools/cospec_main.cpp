#include "cospec/common.hpp"
#include "cospec/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<std::string> years; // "a:b"
    std::optional<std::string> out;
    std::optional<int> threads;
};

cospec::RunConfig make_config(const GlobalFlags& flags) {
    auto cfg = cospec::RunConfig::from_json_file(flags.config_path);
    if (flags.seed)
        cfg.seed = *flags.seed;
    if (flags.samples)
        cfg.samples = *flags.samples;
    if (flags.out)
        cfg.output_dir = *flags.out;
    if (flags.threads)
        cfg.threads = *flags.threads;
    if (flags.years) {
        auto sep = flags.years->find(':');
        if (sep == std::string::npos)
            throw CLI::ValidationError("--years", "expected MIN:MAX");
        cfg.network_year_min = std::stoi(flags.years->substr(0, sep));
        cfg.network_year_max = std::stoi(flags.years->substr(sep + 1));
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Country-industry co-specialization pipeline"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Run configuration (JSON)")->required();
    app.add_option("--seed", flags.seed, "Master ensemble seed");
    app.add_option("--samples", flags.samples, "Ensemble size");
    app.add_option("--years", flags.years, "Network year range MIN:MAX");
    app.add_option("--out", flags.out, "Output directory");
    app.add_option("--threads", flags.threads, "Worker threads for per-year stages");

    auto* cmd_validate = app.add_subcommand("validate", "Check the input panel and write a report");
    auto* cmd_networks = app.add_subcommand("networks", "Write per-year RCA and network files");
    auto* cmd_zscores = app.add_subcommand("zscores", "Fit null models and write z-score files");
    auto* cmd_panel = app.add_subcommand("panel", "Estimate the configured regression models");
    auto* cmd_report = app.add_subcommand("report", "Emit the figure-data bundle and manifest");
    for (auto* cmd : {cmd_validate, cmd_networks, cmd_zscores, cmd_panel, cmd_report})
        cmd->fallthrough(); // global flags may follow the subcommand name

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1; // usage errors exit 1
    }

    try {
        cospec::Pipeline pipeline(make_config(flags));
        if (cmd_validate->parsed()) {
            auto report = pipeline.run_validate();
            std::fputs(report.to_text().c_str(), stdout);
        } else if (cmd_networks->parsed()) {
            pipeline.run_networks();
        } else if (cmd_zscores->parsed()) {
            pipeline.run_zscores();
        } else if (cmd_panel->parsed()) {
            pipeline.run_panel();
        } else if (cmd_report->parsed()) {
            pipeline.run_report();
        }
    } catch (const cospec::NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const cospec::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
