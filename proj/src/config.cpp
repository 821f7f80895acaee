#include "ridesplit/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "ridesplit/io_util.hpp"

namespace ridesplit {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double need_double(std::string_view v, const std::string& key) {
    const auto d = parse_double(v);
    if (!d) throw std::invalid_argument("config: " + key + ": not a number");
    return *d;
}

std::int64_t need_int(std::string_view v, const std::string& key) {
    const auto i = parse_int(v);
    if (!i) throw std::invalid_argument("config: " + key + ": not an integer");
    return *i;
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    for (const auto f : split_fields(v, ','))
        if (const auto t = trim(f); !t.empty()) out.emplace_back(t);
    return out;
}

using Setter = std::function<void(PipelineConfig&, std::string_view,
                                  const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> m;
        const auto str = [&m](const std::string& key, std::string PipelineConfig::*f) {
            m[key] = [f](PipelineConfig& c, std::string_view v, const std::string&) {
                c.*f = std::string(v);
            };
        };
        const auto dbl = [&m](const std::string& key, double PipelineConfig::*f) {
            m[key] = [f](PipelineConfig& c, std::string_view v, const std::string& k) {
                c.*f = need_double(v, k);
            };
        };
        const auto num = [&m](const std::string& key, int PipelineConfig::*f) {
            m[key] = [f](PipelineConfig& c, std::string_view v, const std::string& k) {
                c.*f = static_cast<int>(need_int(v, k));
            };
        };

        str("paths.orders", &PipelineConfig::orders_path);
        str("paths.fixes", &PipelineConfig::fixes_path);

        dbl("grid.min_lon", &PipelineConfig::grid_min_lon);
        dbl("grid.min_lat", &PipelineConfig::grid_min_lat);
        dbl("grid.max_lon", &PipelineConfig::grid_max_lon);
        dbl("grid.max_lat", &PipelineConfig::grid_max_lat);
        num("grid.n_cols", &PipelineConfig::grid_n_cols);
        num("grid.n_rows", &PipelineConfig::grid_n_rows);
        dbl("grid.cell_size_m", &PipelineConfig::grid_cell_size_m);

        m["filters.min_tt_s"] = [](PipelineConfig& c, std::string_view v,
                                   const std::string& k) {
            c.min_tt_s = need_int(v, k);
        };
        m["filters.max_tt_s"] = [](PipelineConfig& c, std::string_view v,
                                   const std::string& k) {
            c.max_tt_s = need_int(v, k);
        };
        dbl("filters.seg_max_t_s", &PipelineConfig::seg_max_t_s);
        dbl("filters.seg_max_d_m", &PipelineConfig::seg_max_d_m);
        dbl("filters.seg_max_v_ms", &PipelineConfig::seg_max_v_ms);
        m["filters.overlap_min_d_m"] = [](PipelineConfig& c, std::string_view v,
                                          const std::string& k) {
            c.validity.min_overlap_d_m = need_double(v, k);
        };
        m["filters.overlap_min_t_s"] = [](PipelineConfig& c, std::string_view v,
                                          const std::string& k) {
            c.validity.min_overlap_t_s = need_double(v, k);
        };
        m["filters.nsr_allowed"] = [](PipelineConfig& c, std::string_view v,
                                      const std::string& k) {
            c.validity.allowed_nsr.clear();
            for (const auto& item : split_list(v))
                c.validity.allowed_nsr.insert(static_cast<int>(need_int(item, k)));
        };
        dbl("filters.iqr_factor", &PipelineConfig::iqr_factor);
        m["filters.iqr_columns"] = [](PipelineConfig& c, std::string_view v,
                                      const std::string&) {
            c.iqr_columns = split_list(v);
        };
        m["filters.utc_offset_s"] = [](PipelineConfig& c, std::string_view v,
                                       const std::string& k) {
            c.utc_offset_s = need_int(v, k);
        };
        num("filters.min_substitutes", &PipelineConfig::min_substitutes);

        m["copert.pollutant"] = [](PipelineConfig& c, std::string_view v,
                                   const std::string&) {
            c.copert.pollutant = std::string(v);
        };
        const auto cop = [&m](const std::string& key, double CopertParams::*f) {
            m["copert." + key] = [f](PipelineConfig& c, std::string_view v,
                                     const std::string& k) {
                c.copert.*f = need_double(v, k);
            };
        };
        cop("alpha", &CopertParams::alpha);
        cop("beta", &CopertParams::beta);
        cop("gamma", &CopertParams::gamma);
        cop("delta", &CopertParams::delta);
        cop("epsilon", &CopertParams::epsilon);
        cop("zeta", &CopertParams::zeta);
        cop("eta", &CopertParams::eta);
        cop("v_min_kmh", &CopertParams::v_min_kmh);
        cop("v_max_kmh", &CopertParams::v_max_kmh);

        dbl("model.split_ratio", &PipelineConfig::split_ratio);
        m["model.seed"] = [](PipelineConfig& c, std::string_view v,
                             const std::string& k) {
            c.seed = static_cast<std::uint64_t>(need_int(v, k));
        };
        num("model.cv_folds", &PipelineConfig::cv_folds);
        m["model.grid_iterations"] = [](PipelineConfig& c, std::string_view v,
                                        const std::string& k) {
            c.search.iterations.clear();
            for (const auto& item : split_list(v))
                c.search.iterations.push_back(static_cast<int>(need_int(item, k)));
        };
        m["model.grid_learning_rates"] = [](PipelineConfig& c, std::string_view v,
                                            const std::string& k) {
            c.search.learning_rates.clear();
            for (const auto& item : split_list(v))
                c.search.learning_rates.push_back(need_double(item, k));
        };
        m["model.grid_depths"] = [](PipelineConfig& c, std::string_view v,
                                    const std::string& k) {
            c.search.depths.clear();
            for (const auto& item : split_list(v))
                c.search.depths.push_back(static_cast<int>(need_int(item, k)));
        };
        m["model.n_bins"] = [](PipelineConfig& c, std::string_view v,
                               const std::string& k) {
            c.hp.n_bins = static_cast<int>(need_int(v, k));
        };
        m["model.min_samples_leaf"] = [](PipelineConfig& c, std::string_view v,
                                         const std::string& k) {
            c.hp.min_samples_leaf = static_cast<int>(need_int(v, k));
        };
        m["model.growth"] = [](PipelineConfig& c, std::string_view v,
                               const std::string&) {
            c.hp.growth = growth_from_string(std::string(v));
        };
        m["model.max_leaves"] = [](PipelineConfig& c, std::string_view v,
                                   const std::string& k) {
            c.hp.max_leaves = static_cast<int>(need_int(v, k));
        };

        num("explain.shap_sample", &PipelineConfig::shap_sample);
        num("explain.shap_background", &PipelineConfig::shap_background);
        num("explain.pdp_points", &PipelineConfig::pdp_points);
        m["explain.pdp_features"] = [](PipelineConfig& c, std::string_view v,
                                       const std::string&) {
            c.pdp_features = split_list(v);
        };
        str("explain.pdp_pair", &PipelineConfig::pdp_pair);
        str("explain.dependence_feature", &PipelineConfig::dependence_feature);
        str("explain.dependence_color", &PipelineConfig::dependence_color);

        const auto sc_int = [&m](const std::string& key, int ScenarioSpec::*f) {
            m["scenario." + key] = [f](PipelineConfig& c, std::string_view v,
                                       const std::string& k) {
                c.scenario.*f = static_cast<int>(need_int(v, k));
            };
        };
        m["scenario.seed"] = [](PipelineConfig& c, std::string_view v,
                                const std::string& k) {
            c.scenario.seed = static_cast<std::uint64_t>(need_int(v, k));
        };
        m["scenario.min_lon"] = [](PipelineConfig& c, std::string_view v,
                                   const std::string& k) {
            c.scenario.min_lon = need_double(v, k);
        };
        m["scenario.min_lat"] = [](PipelineConfig& c, std::string_view v,
                                   const std::string& k) {
            c.scenario.min_lat = need_double(v, k);
        };
        sc_int("sampling_interval_s", &ScenarioSpec::sampling_interval_s);
        sc_int("n_pool_nsr2", &ScenarioSpec::n_pool_nsr2);
        sc_int("n_pool_nsr3", &ScenarioSpec::n_pool_nsr3);
        sc_int("n_substitutes", &ScenarioSpec::n_substitutes);
        sc_int("n_singles", &ScenarioSpec::n_singles);
        sc_int("n_emission_rides", &ScenarioSpec::n_emission_rides);
        sc_int("n_calibration_rides", &ScenarioSpec::n_calibration_rides);
        m["scenario.speeds_kmh"] = [](PipelineConfig& c, std::string_view v,
                                      const std::string& k) {
            c.scenario.speeds_kmh.clear();
            for (const auto& item : split_list(v))
                c.scenario.speeds_kmh.push_back(need_double(item, k));
        };
        sc_int("min_ride_steps", &ScenarioSpec::min_ride_steps);
        sc_int("max_ride_steps", &ScenarioSpec::max_ride_steps);
        sc_int("min_overlap_steps", &ScenarioSpec::min_overlap_steps);
        sc_int("max_overlap_steps", &ScenarioSpec::max_overlap_steps);
        sc_int("max_bounces", &ScenarioSpec::max_bounces);
        m["scenario.target_noise_sigma"] = [](PipelineConfig& c, std::string_view v,
                                              const std::string& k) {
            c.scenario.target_noise_sigma = need_double(v, k);
        };
        const auto planted = [&m](const std::string& key, int PlantedCounts::*f) {
            m["scenario." + key] = [f](PipelineConfig& c, std::string_view v,
                                       const std::string& k) {
                c.scenario.planted.*f = static_cast<int>(need_int(v, k));
            };
        };
        planted("planted_too_short", &PlantedCounts::orders_too_short);
        planted("planted_too_long", &PlantedCounts::orders_too_long);
        planted("planted_out_of_region", &PlantedCounts::orders_out_of_region);
        planted("planted_seg_gap", &PlantedCounts::seg_gap);
        planted("planted_seg_jump", &PlantedCounts::seg_jump);
        planted("planted_seg_speed", &PlantedCounts::seg_speed);
        planted("planted_pool_nsr4", &PlantedCounts::pool_nsr4);
        planted("planted_pool_low_overlap_distance",
                &PlantedCounts::pool_low_overlap_distance);
        planted("planted_pool_low_overlap_time",
                &PlantedCounts::pool_low_overlap_time);
        planted("planted_iqr_outlier", &PlantedCounts::iqr_outlier);
        return m;
    }();
    return table;
}

}  // namespace

void validate_config(const PipelineConfig& c) {
    if (c.min_tt_s < 0 || c.max_tt_s < c.min_tt_s)
        throw std::invalid_argument("config: filters: need 0 <= min_tt_s <= max_tt_s");
    if (c.seg_max_t_s <= 0 || c.seg_max_d_m <= 0 || c.seg_max_v_ms <= 0)
        throw std::invalid_argument("config: filters: segment caps must be positive");
    if (c.iqr_factor <= 0)
        throw std::invalid_argument("config: filters.iqr_factor must be positive");
    if (c.min_substitutes < 1)
        throw std::invalid_argument("config: filters.min_substitutes must be >= 1");
    for (const auto& name : c.iqr_columns)
        if (!find_column(name))
            throw std::invalid_argument("config: filters.iqr_columns: unknown column " +
                                        name);
    validate_copert(c.copert);
    if (c.split_ratio <= 0.0 || c.split_ratio >= 1.0)
        throw std::invalid_argument("config: model.split_ratio must be in (0, 1)");
    if (c.cv_folds < 2)
        throw std::invalid_argument("config: model.cv_folds must be >= 2");
    if (c.search.iterations.empty() || c.search.learning_rates.empty() ||
        c.search.depths.empty())
        throw std::invalid_argument("config: model grid lists must not be empty");
    Hyperparams probe = c.hp;
    probe.iterations = c.search.iterations.front();
    probe.learning_rate = c.search.learning_rates.front();
    probe.depth = c.search.depths.front();
    validate_hyperparams(probe);
    if (c.shap_sample < 1 || c.shap_background < 1)
        throw std::invalid_argument("config: explain sample sizes must be >= 1");
    if (c.pdp_points < 2)
        throw std::invalid_argument("config: explain.pdp_points must be >= 2");
    const auto known = [](const std::string& name) {
        const auto names = model_feature_names();
        return std::find(names.begin(), names.end(), name) != names.end();
    };
    for (const auto& name : c.pdp_features)
        if (!known(name))
            throw std::invalid_argument("config: explain.pdp_features: unknown feature " +
                                        name);
    const auto colon = c.pdp_pair.find(':');
    if (colon == std::string::npos || !known(c.pdp_pair.substr(0, colon)) ||
        !known(c.pdp_pair.substr(colon + 1)))
        throw std::invalid_argument(
            "config: explain.pdp_pair must be <feature>:<feature>");
    if (!known(c.dependence_feature) || !known(c.dependence_color))
        throw std::invalid_argument(
            "config: explain dependence features must be model features");
    if (c.grid_min_lon >= c.grid_max_lon || c.grid_min_lat >= c.grid_max_lat)
        throw std::invalid_argument("config: grid bounding box is degenerate");
    if (c.grid_n_cols <= 0 && c.grid_n_rows <= 0 && c.grid_cell_size_m <= 0)
        throw std::invalid_argument("config: grid needs counts or a cell size");
}

GridSpec PipelineConfig::grid() const {
    if (grid_n_cols > 0 && grid_n_rows > 0)
        return build_grid_spec_counts(grid_min_lon, grid_min_lat, grid_max_lon,
                                      grid_max_lat, grid_n_cols, grid_n_rows);
    return build_grid_spec_cell_size(grid_min_lon, grid_min_lat, grid_max_lon,
                                     grid_max_lat, grid_cell_size_m);
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                            ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key =
            section + "." + std::string(trim(line.substr(0, eq)));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw std::invalid_argument("config: unknown key " + key);
        it->second(cfg, trim(line.substr(eq + 1)), key);
    }
    validate_config(cfg);
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

std::string default_config_text() {
    return R"(# ridesplit pipeline configuration
# values marked "study value" mirror the source study's setup; values marked
# "tool default" are artifact choices with no counterpart there

[paths]
orders = orders.csv            # input order table
fixes = fixes.csv              # input GPS fix table

[grid]
min_lon = 104.04               # study value: analysis bounding box
min_lat = 30.65
max_lon = 104.12
max_lat = 30.72
n_cols = 17                    # study value: 17x17 = 289 cells of ~500 m
n_rows = 17
cell_size_m = 500              # used only when the counts above are <= 0

[filters]
min_tt_s = 60                  # study value: orders shorter than 60 s drop
max_tt_s = 7200                # study value: orders longer than 2 h drop
seg_max_t_s = 60               # study value: segment time gap cap
seg_max_d_m = 500              # study value: segment distance cap
seg_max_v_ms = 50              # study value: segment speed cap
overlap_min_d_m = 500          # study value: shared-distance validity floor
overlap_min_t_s = 60           # study value: shared-time validity floor
nsr_allowed = 2, 3             # study value: accepted pool sizes
iqr_factor = 1.5               # study value: outlier whisker factor
# iqr_columns =                # tool default: all numeric columns except
                               # peak_hours and nsr
utc_offset_s = 28800           # study value: local clock offset (UTC+8)
min_substitutes = 1            # tool default: singles needed per baseline

[copert]
pollutant = co2                # study value: CO2 factors for petrol cars
alpha = 0.01066                # tool default: rational-curve coefficients
beta = -1.1623                 # shaped like the study's emission model
gamma = 160.55
delta = 2000
epsilon = 0
zeta = 0
eta = 1
v_min_kmh = 10                 # study value: speed clamp bounds
v_max_kmh = 130

[model]
split_ratio = 0.8              # study value: 8:2 train/test split
seed = 42                      # tool default
cv_folds = 5                   # study value: 5-fold cross validation
grid_iterations = 2000, 2500, 3000, 3500, 4000, 4500, 5000  # study value
grid_learning_rates = 0.005, 0.01, 0.05                     # study value
grid_depths = 3, 4, 5, 6, 7, 8                              # study value
n_bins = 255                   # tool default: histogram bins per feature
min_samples_leaf = 20          # tool default
growth = level_wise            # tool default: level_wise or leaf_wise
max_leaves = 0                 # tool default: 0 means 2^depth

[explain]
shap_sample = 100              # tool default: rows explained
shap_background = 256          # tool default: background rows
pdp_points = 20                # tool default: quantile grid size
# pdp_features =               # tool default: every model feature
pdp_pair = overlap_rate:detour_rate      # tool default
dependence_feature = overlap_rate        # tool default
dependence_color = detour_rate           # tool default

[scenario]
seed = 1                       # tool default: synthetic scenario shape
min_lon = 104.0
min_lat = 30.0
sampling_interval_s = 3        # study value: GPS sampling interval
n_pool_nsr2 = 10
n_pool_nsr3 = 5
n_substitutes = 3
n_singles = 20
n_emission_rides = 0
n_calibration_rides = 0
speeds_kmh = 30, 36, 45
min_ride_steps = 30
max_ride_steps = 60
min_overlap_steps = 22
max_overlap_steps = 33
max_bounces = 5
target_noise_sigma = 0.1
planted_too_short = 0
planted_too_long = 0
planted_out_of_region = 0
planted_seg_gap = 0
planted_seg_jump = 0
planted_seg_speed = 0
planted_pool_nsr4 = 0
planted_pool_low_overlap_distance = 0
planted_pool_low_overlap_time = 0
planted_iqr_outlier = 0
)";
}

}  // namespace ridesplit
