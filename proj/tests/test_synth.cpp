#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ridesplit/features.hpp"
#include "ridesplit/ingest.hpp"
#include "ridesplit/io_util.hpp"
#include "ridesplit/stats.hpp"
#include "ridesplit/synth.hpp"
#include "ridesplit/trips.hpp"
#include "support.hpp"

using namespace ridesplit;

namespace {

ScenarioSpec small_spec() {
    ScenarioSpec spec;
    spec.seed = 12;
    spec.n_pool_nsr2 = 3;
    spec.n_pool_nsr3 = 2;
    spec.n_singles = 4;
    spec.n_substitutes = 3;
    return spec;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generate_scenario: byte-deterministic under the seed") {
    const auto a = generate_scenario(small_spec());
    const auto b = generate_scenario(small_spec());
    CHECK(a.orders_csv == b.orders_csv);
    CHECK(a.fixes_csv == b.fixes_csv);
    CHECK(a.ground_truth_json == b.ground_truth_json);
    CHECK(a.grid.n_cols == b.grid.n_cols);
    CHECK(a.grid.max_lon == b.grid.max_lon);

    auto other_spec = small_spec();
    other_spec.seed = 13;
    const auto c = generate_scenario(other_spec);
    CHECK(c.orders_csv != a.orders_csv);
}

TEST_CASE("generate_scenario: all-zero counts produce an empty scenario") {
    ScenarioSpec spec;
    spec.n_pool_nsr2 = 0;
    spec.n_pool_nsr3 = 0;
    spec.n_singles = 0;
    const auto res = generate_scenario(spec);
    CHECK(res.orders_csv.empty());
    CHECK(res.fixes_csv.empty());
    CHECK(res.ground_truth_json.empty());
    CHECK(res.grid.n_cols == 1);
    CHECK(res.grid.n_rows == 1);
}

TEST_CASE("ground truth: internal arithmetic holds for every trip") {
    const auto res = generate_scenario(small_spec());
    const auto root = nlohmann::json::parse(res.ground_truth_json);

    // declared counts match the emitted CSV bodies
    CHECK(root["counts"]["orders"].get<std::size_t>() ==
          ts::lines_of(res.orders_csv).size() - 1);
    CHECK(root["counts"]["fixes"].get<std::size_t>() ==
          ts::lines_of(res.fixes_csv).size() - 1);

    REQUIRE(root["trips"].size() == 5);
    for (const auto& jt : root["trips"]) {
        CHECK(jt["tt_s"].get<std::int64_t>() ==
              jt["end_ts"].get<std::int64_t>() - jt["start_ts"].get<std::int64_t>());
        CHECK(jt["c"].get<double>() == 1.0);

        double sum_median = 0.0;
        for (const auto& jr : jt["rides"]) {
            // the per-ride baseline is the sample median of its substitutes
            std::vector<double> tds;
            for (const auto& sub : jr["substitutes"])
                tds.push_back(sub["td_m"].get<double>());
            REQUIRE(tds.size() == 3);
            CHECK(ts::close_rel(jr["median_td_m"].get<double>(), median(tds), 1e-12));
            CHECK(ts::close_abs(jr["detour_m"].get<double>(),
                                jr["actual_td_m"].get<double>() -
                                    jr["median_td_m"].get<double>(),
                                1e-9));
            sum_median += jr["median_td_m"].get<double>();
        }
        CHECK(ts::close_rel(jt["sum_median_td_m"].get<double>(), sum_median, 1e-12));
        CHECK(ts::close_abs(jt["sd_m"].get<double>(),
                            sum_median - jt["td_m"].get<double>(), 1e-9));
        CHECK(jt["rides"].size() == jt["nsr"].get<std::size_t>());
    }

    // stage ledger is internally consistent
    const auto& ex = root["expected"];
    CHECK(ex["matched_trips"].get<int>() == ex["pool_trips"].get<int>());
    const int valid = ex["matched_trips"].get<int>() -
                      ex["validity_dropped_nsr"].get<int>() -
                      ex["validity_dropped_overlap_distance"].get<int>() -
                      ex["validity_dropped_overlap_time"].get<int>();
    CHECK(ex["valid_trips"].get<int>() == valid);
    CHECK(ex["final_rows"].get<int>() ==
          valid - ex["iqr_dropped_trips"].get<int>());
}

TEST_CASE("pipeline trip building reproduces the constructed overlap") {
    ScenarioSpec spec;
    spec.seed = 9;
    spec.n_pool_nsr2 = 1;
    spec.n_pool_nsr3 = 0;
    spec.n_singles = 0;
    spec.speeds_kmh = {36.0};     // 30 m steps at dt = 3
    spec.min_overlap_steps = 20;  // exactly 600 m and 60 s of co-riding
    spec.max_overlap_steps = 20;
    const auto res = generate_scenario(spec);
    const auto root = nlohmann::json::parse(res.ground_truth_json);
    REQUIRE(root["trips"].size() == 1);
    const auto& jt = root["trips"][0];
    CHECK(jt["overlap_d_m"].get<double>() == 600.0);
    CHECK(jt["overlap_t_s"].get<double>() == 60.0);

    std::istringstream oin(res.orders_csv), fin(res.fixes_csv);
    const auto orders = parse_orders(oin);
    const auto fixes = parse_fixes(fin);
    CHECK(orders.malformed == 0);
    CHECK(fixes.malformed == 0);

    const auto ident = identify_pool_trips(orders.records, fixes.records);
    REQUIRE(ident.pools.size() == 1);
    const auto& pool = ident.pools[0];
    CHECK(pool.nsr == 2);
    CHECK(pool.trip_id == jt["trip_id"].get<std::string>());
    CHECK(static_cast<double>(pool.TT) == jt["tt_s"].get<double>());
    CHECK(ts::close_rel(pool.TD, jt["td_m"].get<double>(), 1e-9));

    const auto ov = overlap_metrics(pool);
    CHECK(ts::close_rel(ov.distance_m, 600.0, 1e-9));
    CHECK(ov.time_s == 60.0);

    // substitutes for the two shared rides arrive as plain singles
    CHECK(ident.singles.size() == 6);
}

TEST_CASE("scenario validation rejects unusable specs") {
    auto expect_throw = [](auto&& mutate, const char* fragment) {
        ScenarioSpec spec;
        mutate(spec);
        CHECK_THROWS_WITH_AS(generate_scenario(spec), doctest::Contains(fragment),
                             std::invalid_argument);
    };
    expect_throw([](ScenarioSpec& s) { s.sampling_interval_s = 2; },
                 "sampling_interval_s");
    expect_throw([](ScenarioSpec& s) { s.sampling_interval_s = 7; },
                 "sampling_interval_s");
    expect_throw([](ScenarioSpec& s) { s.n_substitutes = 2; }, "odd");
    expect_throw([](ScenarioSpec& s) { s.speeds_kmh = {}; }, "speeds");
    expect_throw([](ScenarioSpec& s) { s.speeds_kmh = {5.0}; }, "[10, 130]");
    expect_throw([](ScenarioSpec& s) { s.speeds_kmh = {140.0}; }, "[10, 130]");
    expect_throw([](ScenarioSpec& s) { s.min_ride_steps = 25; }, "ride phase");
    expect_throw([](ScenarioSpec& s) { s.min_overlap_steps = 19; }, "overlap steps");
    expect_throw([](ScenarioSpec& s) { s.max_overlap_steps = 5; }, "overlap steps");
    expect_throw([](ScenarioSpec& s) { s.max_bounces = -1; }, "max_bounces");
    // 20 steps of 25 m at 30 km/h: 500 m of co-riding, under the 510 m floor
    expect_throw(
        [](ScenarioSpec& s) {
            s.speeds_kmh = {30.0};
            s.min_overlap_steps = 20;
        },
        "under the 500 m or 60 s");
}

TEST_CASE("write_scenario materializes the generated strings") {
    ts::TempDir dir;
    const auto spec = small_spec();
    write_scenario(spec, dir.path().string());
    const auto res = generate_scenario(spec);
    CHECK(read_text_file(dir.str("orders.csv")) == res.orders_csv);
    CHECK(read_text_file(dir.str("fixes.csv")) == res.fixes_csv);
    CHECK(read_text_file(dir.str("ground_truth.json")) == res.ground_truth_json);
}

TEST_CASE("make_regression: linear signal with zero-padded coefficients") {
    const auto clean = make_regression(100, 0.0, 5);
    CHECK(clean.n_rows() == 100);
    CHECK(clean.n_features() == 8);
    CHECK(clean.feature_names == model_feature_names());
    clean.check();

    for (std::size_t i = 0; i < clean.n_rows(); ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(clean.columns[j][i] >= 0.0);
            CHECK(clean.columns[j][i] < 1.0);
        }
        const double want = 3.0 * clean.columns[0][i] - 2.0 * clean.columns[1][i];
        CHECK(ts::close_abs(clean.target[i], want, 1e-12));
    }

    const auto again = make_regression(100, 0.0, 5);
    CHECK(again.columns == clean.columns);
    CHECK(again.target == clean.target);

    // noise moves the target but the design stays put
    const auto noisy = make_regression(100, 0.5, 5);
    CHECK(noisy.columns == clean.columns);
    CHECK(noisy.target != clean.target);

    const auto custom = make_regression(10, 0.0, 5, {1.0, 0.0, 0.0, 0.0, 5.0});
    for (std::size_t i = 0; i < custom.n_rows(); ++i)
        CHECK(ts::close_abs(custom.target[i],
                            custom.columns[0][i] + 5.0 * custom.columns[4][i],
                            1e-12));
}

TEST_CASE("make_regression_csv: a loadable dataset mirroring the generator") {
    ts::TempDir dir;
    const auto text = make_regression_csv(50, 0.1, 7);
    CHECK(text == make_regression_csv(50, 0.1, 7));
    const auto path = dir.str("reg.csv");
    write_text_file(path, text);

    const auto rows = read_dataset(path);
    REQUIRE(rows.size() == 50);
    const auto data = make_regression(50, 0.1, 7);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(ts::close_rel(rows[i].err, data.target[i], 1e-8));
        CHECK(ts::close_rel(rows[i].overlap_rate, data.columns[0][i], 1e-8));
        CHECK(ts::close_rel(rows[i].detour_rate, data.columns[1][i], 1e-8));
        CHECK(ts::close_rel(rows[i].ride_distance_ratio, data.columns[7][i], 1e-8));
        CHECK(rows[i].saved_distance == 0.0);
        CHECK(rows[i].overlap_distance == 0.0);
    }
}

}  // TEST_SUITE
