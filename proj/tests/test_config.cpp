#include <string>

#include "doctest.h"
#include "ridesplit/config.hpp"
#include "ridesplit/io_util.hpp"
#include "support.hpp"

using namespace ridesplit;

TEST_SUITE("config") {

TEST_CASE("default text parses back to the default configuration") {
    const PipelineConfig parsed = parse_config(default_config_text());
    const PipelineConfig def;

    CHECK(parsed.orders_path == def.orders_path);
    CHECK(parsed.fixes_path == def.fixes_path);
    CHECK(parsed.grid_min_lon == def.grid_min_lon);
    CHECK(parsed.grid_min_lat == def.grid_min_lat);
    CHECK(parsed.grid_max_lon == def.grid_max_lon);
    CHECK(parsed.grid_max_lat == def.grid_max_lat);
    CHECK(parsed.grid_n_cols == 17);
    CHECK(parsed.grid_n_rows == 17);
    CHECK(parsed.grid_cell_size_m == 500.0);
    CHECK(parsed.min_tt_s == 60);
    CHECK(parsed.max_tt_s == 7200);
    CHECK(parsed.seg_max_t_s == 60.0);
    CHECK(parsed.seg_max_d_m == 500.0);
    CHECK(parsed.seg_max_v_ms == 50.0);
    CHECK(parsed.validity.min_overlap_d_m == 500.0);
    CHECK(parsed.validity.min_overlap_t_s == 60.0);
    CHECK(parsed.validity.allowed_nsr == def.validity.allowed_nsr);
    CHECK(parsed.iqr_factor == 1.5);
    CHECK(parsed.iqr_columns.empty());
    CHECK(parsed.utc_offset_s == 8 * 3600);
    CHECK(parsed.min_substitutes == 1);
    CHECK(parsed.copert.alpha == def.copert.alpha);
    CHECK(parsed.copert.gamma == def.copert.gamma);
    CHECK(parsed.copert.v_min_kmh == 10.0);
    CHECK(parsed.copert.v_max_kmh == 130.0);
    CHECK(parsed.split_ratio == 0.8);
    CHECK(parsed.seed == def.seed);
    CHECK(parsed.cv_folds == 5);
    CHECK(parsed.search.iterations == def.search.iterations);
    CHECK(parsed.search.learning_rates == def.search.learning_rates);
    CHECK(parsed.search.depths == def.search.depths);
    CHECK(parsed.hp.n_bins == def.hp.n_bins);
    CHECK(parsed.hp.min_samples_leaf == def.hp.min_samples_leaf);
    CHECK(parsed.hp.growth == def.hp.growth);
    CHECK(parsed.shap_sample == def.shap_sample);
    CHECK(parsed.shap_background == 256);
    CHECK(parsed.pdp_points == 20);
    CHECK(parsed.pdp_pair == def.pdp_pair);
    CHECK(parsed.scenario.seed == def.scenario.seed);
    CHECK(parsed.scenario.n_pool_nsr2 == def.scenario.n_pool_nsr2);
    CHECK(parsed.scenario.speeds_kmh == def.scenario.speeds_kmh);
}

TEST_CASE("hyperparameter grid default enumerates 126 combinations") {
    const HyperGrid g;
    CHECK(g.iterations.size() * g.learning_rates.size() * g.depths.size() == 126);
}

TEST_CASE("unknown keys and sections are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_config("[filters]\nmin_tt = 60\n"),
                         doctest::Contains("unknown key"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("[nonsense]\nx = 1\n"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("[filters]\nmin_tt_s = abc\n"),
                         doctest::Contains("min_tt_s"), std::invalid_argument);
}

TEST_CASE("sections override defaults and comments are stripped") {
    const PipelineConfig cfg = parse_config(
        "[filters]\n"
        "min_tt_s = 30   # shorter floor\n"
        "nsr_allowed = 2, 3, 4\n"
        "[model]\n"
        "grid_iterations = 10, 20\n"
        "growth = leaf_wise\n");
    CHECK(cfg.min_tt_s == 30);
    CHECK(cfg.validity.allowed_nsr == std::set<int>{2, 3, 4});
    CHECK(cfg.search.iterations == std::vector<int>{10, 20});
    CHECK(cfg.hp.growth == Growth::leaf_wise);
}

TEST_CASE("validation names the offending key") {
    PipelineConfig cfg;
    cfg.split_ratio = 1.0;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("split_ratio"),
                         std::invalid_argument);

    cfg = PipelineConfig{};
    cfg.iqr_factor = 0.0;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("iqr_factor"),
                         std::invalid_argument);

    cfg = PipelineConfig{};
    cfg.grid_min_lon = cfg.grid_max_lon;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = PipelineConfig{};
    cfg.iqr_columns = {"no_such_column"};
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("no_such_column"),
                         std::invalid_argument);
}

TEST_CASE("copert parameters that can divide by zero are rejected at load") {
    PipelineConfig cfg;
    cfg.copert.epsilon = 0.0;
    cfg.copert.zeta = 0.0;
    cfg.copert.eta = 0.0;  // denominator identically zero
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    // denominator with a root inside the clamp range: eta + zeta*v = 0 at v=50
    cfg = PipelineConfig{};
    cfg.copert.epsilon = 0.0;
    cfg.copert.zeta = 1.0;
    cfg.copert.eta = -50.0;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
}

TEST_CASE("load_config reads a file and applies the same validation") {
    ts::TempDir tmp("config-load");
    write_text_file(tmp.path() / "ok.ini", "[model]\nseed = 9\n");
    CHECK(load_config(tmp.str("ok.ini")).seed == 9);
    write_text_file(tmp.path() / "bad.ini", "[model]\nsplit_ratio = 2\n");
    CHECK_THROWS_AS(load_config(tmp.str("bad.ini")), std::invalid_argument);
}

}  // TEST_SUITE
