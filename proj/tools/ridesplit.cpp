#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ridesplit/config.hpp"
#include "ridesplit/pipeline.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 1;
    bool overwrite = false;
};

const char* describe(const std::string& command) {
    if (command == "ingest") return "parse the order table and apply the order filters";
    if (command == "trips") return "build segments, identify pool trips, summarize rides";
    if (command == "emissions") return "per-ride and per-trip emission totals";
    if (command == "match") return "OD baselines and per-trip reduction records";
    if (command == "features") return "regression dataset with validity and IQR filters";
    if (command == "report") return "hourly, spatial, and grouped reduction tables";
    if (command == "train") return "train/test split, grid-search CV, final models";
    if (command == "explain") return "Shapley attributions and partial dependence";
    if (command == "synth") return "generate a synthetic scenario with ground truth";
    return "run every stage from ingest through explain";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ridesplitting emission-reduction pipeline"};
    app.require_subcommand(1);

    CliArgs args;
    for (const auto& name : ridesplit::pipeline_commands()) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", args.config_path,
                        "configuration file; built-in defaults apply when omitted");
        sub->add_option("--out", args.out_dir, "output directory")->required();
        sub->add_option("--seed", args.seed, "override the configured seed")
            ->each([&args](const std::string&) { args.seed_given = true; });
        sub->add_option("--workers", args.workers,
                        "worker cap, recorded in the manifest");
        sub->add_flag("--overwrite", args.overwrite,
                      "replace artifacts left by a previous run");
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const ridesplit::PipelineConfig cfg =
            args.config_path.empty() ? ridesplit::PipelineConfig{}
                                     : ridesplit::load_config(args.config_path);
        ridesplit::RunOptions opt;
        opt.out_dir = args.out_dir;
        opt.overwrite = args.overwrite;
        opt.workers = args.workers;
        if (args.seed_given) opt.seed = args.seed;
        const auto stages = ridesplit::run_pipeline(command, cfg, opt);
        for (const auto& stage : stages) {
            std::string line = stage.name + ":";
            for (const auto& [key, value] : stage.counts)
                line += " " + key + "=" + std::to_string(value);
            if (stage.counts.empty()) line += " done";
            std::puts(line.c_str());
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ridesplit: %s\n", e.what());
        return 1;
    }
}
