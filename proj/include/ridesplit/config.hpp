#ifndef RIDESPLIT_CONFIG_HPP
#define RIDESPLIT_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ridesplit/emissions.hpp"
#include "ridesplit/explain.hpp"
#include "ridesplit/features.hpp"
#include "ridesplit/gbm.hpp"
#include "ridesplit/geo.hpp"
#include "ridesplit/synth.hpp"

namespace ridesplit {

// Sectioned key = value text; '#' starts a comment anywhere on a line.
// Unknown sections or keys are errors so typos cannot silently fall back
// to defaults.
struct PipelineConfig {
    // [paths]
    std::string orders_path = "orders.csv";
    std::string fixes_path = "fixes.csv";

    // [grid]: explicit counts take precedence; otherwise the cell size
    // drives a ceiling division of the haversine spans
    double grid_min_lon = 104.04;
    double grid_min_lat = 30.65;
    double grid_max_lon = 104.12;
    double grid_max_lat = 30.72;
    int grid_n_cols = 17;
    int grid_n_rows = 17;
    double grid_cell_size_m = 500.0;

    // [filters]
    std::int64_t min_tt_s = 60;
    std::int64_t max_tt_s = 7200;
    double seg_max_t_s = 60.0;
    double seg_max_d_m = 500.0;
    double seg_max_v_ms = 50.0;
    ValidityParams validity;
    double iqr_factor = 1.5;
    std::vector<std::string> iqr_columns;  // empty selects the default set
    std::int64_t utc_offset_s = kDefaultUtcOffsetS;
    int min_substitutes = 1;

    // [copert]
    CopertParams copert = default_copert();

    // [model]
    double split_ratio = 0.8;
    std::uint64_t seed = 42;
    int cv_folds = 5;
    HyperGrid search;
    Hyperparams hp;

    // [explain]
    int shap_sample = 100;
    int shap_background = 256;
    int pdp_points = static_cast<int>(kDefaultPdpGrid);
    std::vector<std::string> pdp_features;  // empty selects all model features
    std::string pdp_pair = "overlap_rate:detour_rate";
    std::string dependence_feature = "overlap_rate";
    std::string dependence_color = "detour_rate";

    // [scenario]
    ScenarioSpec scenario;

    GridSpec grid() const;
};

// throws std::invalid_argument naming the offending key
void validate_config(const PipelineConfig& cfg);

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

// the documented default configuration; parsing it yields PipelineConfig{}
std::string default_config_text();

}  // namespace ridesplit

#endif
