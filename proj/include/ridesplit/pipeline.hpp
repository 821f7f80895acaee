#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ridesplit/config.hpp"

namespace ridesplit {

struct RunOptions {
    std::string out_dir;
    bool overwrite = false;
    std::optional<std::uint64_t> seed;  // overrides the configured seed
    int workers = 1;  // recorded in the manifest; stages are single threaded
};

struct StageLog {
    std::string name;
    std::map<std::string, std::int64_t> counts;
    std::vector<std::string> artifacts;
};

// valid commands: ingest, trips, emissions, match, features, report, train,
// explain, synth, and all (every stage except synth, in dependency order)
const std::vector<std::string>& pipeline_commands();

// runs the named stage(s) into opt.out_dir and writes manifest_<command>.json;
// existing artifacts are never replaced unless opt.overwrite is set
std::vector<StageLog> run_pipeline(const std::string& command,
                                   const PipelineConfig& cfg,
                                   const RunOptions& opt);

}  // namespace ridesplit
