#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "smartseq/cli.hpp"
#include "smartseq/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"smartseq: multistage adaptive testing for sparse-signal support recovery"};
    app.require_subcommand(1);
    app.set_version_flag("--version", smartseq::kVersion);

    smartseq::RunConfig run;
    std::string threads = "auto";
    std::uint64_t seed = 0;
    bool seed_set = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", run.config_path, "JSON configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", run.output_dir, "output directory")->required();
        sub->add_option("--seed", seed, "64-bit seed overriding the config's seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads, "worker threads (integer or 'auto')");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run a replication sweep");
    CLI::App* calibrate = app.add_subcommand("calibrate", "calibrate oracle thresholds");
    CLI::App* ingest = app.add_subcommand("ingest", "fit an empirical null to pilot data");
    CLI::App* compare = app.add_subcommand("compare", "efficiency comparison against distilled sensing");
    CLI::App* limits = app.add_subcommand("analyze-limits", "evaluate sample-size bounds");
    for (CLI::App* sub : {simulate, calibrate, ingest, compare, limits}) add_common(sub);
    calibrate->add_flag("--approx", run.approx_only,
                        "emit the closed-form thresholds without Monte Carlo");

    CLI11_PARSE(app, argc, argv);

    if (seed_set) run.seed = seed;
    if (threads == "auto") {
        run.threads = -1;
    } else {
        try {
            run.threads = std::stoi(threads);
        } catch (const std::exception&) {
            run.threads = -1;
        }
        if (run.threads < 1) run.threads = -1;
    }
    run.command = app.get_subcommands().front()->get_name();
    return smartseq::run_command(run);
}
