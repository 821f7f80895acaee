#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "ridesplit/explain.hpp"
#include "ridesplit/gbm.hpp"
#include "support.hpp"

using namespace ridesplit;

namespace {

// f(x) = base + lr * sum of single-split trees; leaves {lo, hi} on x_f <= cut
BoostedModel stump_model(std::vector<std::string> names,
                         const std::vector<std::tuple<int, double, double, double>>& stumps,
                         double base = 0.0, double lr = 1.0) {
    BoostedModel m;
    m.base_score = base;
    m.learning_rate = lr;
    m.feature_names = std::move(names);
    m.bin_edges.assign(m.feature_names.size(), {});
    for (const auto& [f, cut, lo, hi] : stumps) {
        Tree t;
        t.nodes = {{f, cut, 1, 2, 0.0},
                   {-1, 0.0, -1, -1, lo},
                   {-1, 0.0, -1, -1, hi}};
        m.trees.push_back(t);
    }
    return m;
}

Dataset background_of(std::vector<std::string> names,
                      const std::vector<std::vector<double>>& rows) {
    Dataset d;
    d.feature_names = std::move(names);
    d.columns.assign(d.feature_names.size(), {});
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) d.columns[j].push_back(r[j]);
        d.target.push_back(0.0);
    }
    return d;
}

Dataset random_data(std::size_t n, std::size_t k, std::uint64_t seed,
                    const std::function<double(const std::vector<double>&)>& f,
                    double noise = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset d;
    for (std::size_t j = 0; j < k; ++j)
        d.feature_names.push_back("x" + std::to_string(j));
    d.columns.assign(k, {});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(k);
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = u(rng);
            d.columns[j].push_back(row[j]);
        }
        d.target.push_back(f(row) + (noise > 0.0 ? noise * g(rng) : 0.0));
    }
    return d;
}

}  // namespace

TEST_SUITE("explain") {

TEST_CASE("shapley: a constant model attributes nothing") {
    auto m = stump_model({"x0", "x1"}, {});
    m.base_score = 5.0;
    const auto bg = background_of({"x0", "x1"}, {{0.0, 0.0}, {1.0, -1.0}});
    const auto ex = shapley_exact(m, {2.0, 3.0}, bg);
    CHECK(ex.phi0 == 5.0);
    CHECK(ex.prediction == 5.0);
    REQUIRE(ex.phi.size() == 2);
    CHECK(ex.phi[0] == 0.0);
    CHECK(ex.phi[1] == 0.0);
}

TEST_CASE("shapley: single stump splits its effect exactly") {
    // f = 10 iff x0 > 0; background {-1, +1} makes phi0 = 5
    const auto m = stump_model({"x0", "x1"}, {{0, 0.0, 0.0, 10.0}});
    const auto bg = background_of({"x0", "x1"}, {{-1.0, 4.0}, {1.0, -4.0}});

    const auto hi = shapley_exact(m, {1.0, 0.0}, bg);
    CHECK(hi.phi0 == 5.0);
    CHECK(hi.prediction == 10.0);
    CHECK(hi.phi[0] == 5.0);
    CHECK(hi.phi[1] == 0.0);  // untouched by the model: exactly zero

    const auto lo = shapley_exact(m, {-1.0, 0.0}, bg);
    CHECK(lo.phi[0] == -5.0);
    CHECK(lo.phi[1] == 0.0);
    CHECK(lo.prediction == 0.0);
}

TEST_CASE("shapley: symmetric features receive equal attribution") {
    // f = g(x0) + g(x1) with identical stumps and an exchangeable background
    const auto m = stump_model({"x0", "x1"},
                               {{0, 0.0, 0.0, 10.0}, {1, 0.0, 0.0, 10.0}});
    const auto bg = background_of({"x0", "x1"}, {{-1.0, -1.0}, {1.0, 1.0}});
    const auto ex = shapley_exact(m, {1.0, 1.0}, bg);
    CHECK(ex.phi0 == 10.0);
    CHECK(ex.prediction == 20.0);
    CHECK(ex.phi[0] == ex.phi[1]);
    CHECK(ts::close_abs(ex.phi[0], 5.0, 1e-12));
}

TEST_CASE("shapley: local accuracy on a trained model") {
    const auto data = random_data(200, 4, 71, [](const auto& r) {
        return r[0] * r[1] + std::sin(r[2]) - 0.5 * r[3];
    }, 0.1);
    Hyperparams hp;
    hp.iterations = 30;
    hp.depth = 3;
    hp.min_samples_leaf = 5;
    const auto model = train_gbm(data, hp);

    Dataset bg = data;
    for (auto& c : bg.columns) c.resize(16);
    bg.target.resize(16);

    for (std::size_t i = 0; i < 25; ++i) {
        const auto row = data.row(i * 7);
        const auto ex = shapley_exact(model, row, bg);
        double sum = ex.phi0;
        for (double p : ex.phi) sum += p;
        CHECK(ts::close_abs(sum, ex.prediction, 1e-8));
        CHECK(ex.prediction == model.predict_row(row));
    }
}

TEST_CASE("shapley: matches the subset-enumeration oracle") {
    const auto data = random_data(150, 3, 73, [](const auto& r) {
        return 2.0 * r[0] - r[1] * r[2];
    }, 0.2);
    Hyperparams hp;
    hp.iterations = 25;
    hp.depth = 3;
    hp.min_samples_leaf = 5;
    const auto model = train_gbm(data, hp);

    Dataset bg = data;
    for (auto& c : bg.columns) c.resize(12);
    bg.target.resize(12);
    const auto bg_rows = ts::rows_of(bg);
    const auto f = ts::model_fn(model);

    for (std::size_t i = 0; i < 30; ++i) {
        const auto row = data.row(i * 4 + 1);
        const auto ex = shapley_exact(model, row, bg);
        const auto oracle = ts::shap_oracle(f, row, bg_rows);
        CHECK(ts::close_abs(ex.phi0, oracle.phi0, 1e-9));
        REQUIRE(ex.phi.size() == oracle.phi.size());
        for (std::size_t j = 0; j < ex.phi.size(); ++j)
            CHECK(ts::close_abs(ex.phi[j], oracle.phi[j], 1e-9));
    }
}

TEST_CASE("shapley: input validation") {
    const auto m = stump_model({"x0", "x1"}, {{0, 0.0, 0.0, 1.0}});
    const auto bg = background_of({"x0", "x1"}, {{0.0, 0.0}});
    CHECK_THROWS_AS(shapley_exact(m, {1.0}, bg), std::invalid_argument);
    CHECK_THROWS_AS(shapley_exact(m, {1.0, 2.0}, background_of({"x0"}, {{0.0}})),
                    std::invalid_argument);
    CHECK_THROWS_AS(shapley_exact(m, {1.0, 2.0}, background_of({"x0", "x1"}, {})),
                    std::invalid_argument);

    std::vector<std::string> many;
    for (int j = 0; j < 17; ++j) many.push_back("f" + std::to_string(j));
    BoostedModel wide;
    wide.feature_names = many;
    wide.bin_edges.assign(17, {});
    Dataset wide_bg;
    wide_bg.feature_names = many;
    wide_bg.columns.assign(17, {0.0});
    wide_bg.target = {0.0};
    CHECK_THROWS_AS(shapley_exact(wide, std::vector<double>(17, 0.0), wide_bg),
                    std::invalid_argument);
}

TEST_CASE("importance: mean absolute attribution, sorted with stable ties") {
    Explanation e1;
    e1.phi = {1.0, -3.0, 0.0};
    Explanation e2;
    e2.phi = {-2.0, 1.0, 0.0};
    const auto imp = shap_importance({e1, e2});
    REQUIRE(imp.size() == 3);
    CHECK(imp[0].feature == 1);
    CHECK(imp[0].importance == 2.0);
    CHECK(imp[1].feature == 0);
    CHECK(imp[1].importance == 1.5);
    CHECK(imp[2].feature == 2);
    CHECK(imp[2].importance == 0.0);

    Explanation tie;
    tie.phi = {1.0, 1.0};
    const auto stable = shap_importance({tie});
    CHECK(stable[0].feature == 0);
    CHECK(stable[1].feature == 1);

    CHECK_THROWS_AS(shap_importance({}), std::invalid_argument);
    Explanation ragged;
    ragged.phi = {1.0};
    CHECK_THROWS_AS(shap_importance({tie, ragged}), std::invalid_argument);
}

TEST_CASE("importance: the dominant signal ranks first on a trained model") {
    const auto data = random_data(400, 4, 79, [](const auto& r) {
        return 10.0 * r[0] + 3.0 * r[1];
    }, 0.2);
    Hyperparams hp;
    hp.iterations = 60;
    hp.depth = 3;
    hp.min_samples_leaf = 5;
    const auto model = train_gbm(data, hp);

    Dataset bg = data;
    for (auto& c : bg.columns) c.resize(20);
    bg.target.resize(20);

    std::vector<Explanation> exps;
    for (std::size_t i = 0; i < 40; ++i)
        exps.push_back(shapley_exact(model, data.row(i * 3), bg));
    const auto imp = shap_importance(exps);
    CHECK(imp[0].feature == 0);
    CHECK(imp[1].feature == 1);
    CHECK(imp[1].importance > imp[2].importance);
}

TEST_CASE("quantile_grid: exact small grids") {
    CHECK(quantile_grid({1.0, 2.0, 3.0, 4.0, 5.0}, 5) ==
          std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(quantile_grid({5.0, 1.0, 3.0, 2.0, 4.0}, 2) == std::vector<double>{1.0, 5.0});
    CHECK(quantile_grid({0.0, 10.0}, 3) == std::vector<double>{0.0, 5.0, 10.0});
    CHECK(quantile_grid({4.0, 4.0, 4.0}, 7) == std::vector<double>{4.0});
    CHECK_THROWS_AS(quantile_grid({}, 5), std::invalid_argument);
    CHECK_THROWS_AS(quantile_grid({1.0}, 1), std::invalid_argument);
}

TEST_CASE("pdp: matches the brute-force oracle in one and two dimensions") {
    const auto data = random_data(80, 3, 83, [](const auto& r) {
        return r[0] * r[1] - std::cos(r[2]);
    }, 0.1);
    Hyperparams hp;
    hp.iterations = 20;
    hp.depth = 3;
    hp.min_samples_leaf = 4;
    const auto model = train_gbm(data, hp);
    const auto f = ts::model_fn(model);
    const auto refs = ts::rows_of(data);

    for (std::size_t feature = 0; feature < 3; ++feature) {
        const auto res = pdp(model, data, {feature}, {}, 10);
        const auto want = ts::pdp1_oracle(f, refs, feature, res.grids[0]);
        REQUIRE(res.values.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(ts::close_abs(res.values[i], want[i], 1e-12));
        std::size_t total = 0;
        for (std::size_t c : res.histogram) total += c;
        CHECK(total == data.n_rows());
    }

    const auto res2 = pdp(model, data, {0, 1}, {}, 6);
    const auto want2 =
        ts::pdp2_oracle(f, refs, 0, 1, res2.grids[0], res2.grids[1]);
    REQUIRE(res2.values.size() == want2.size());
    REQUIRE(res2.values.size() == res2.grids[0].size() * res2.grids[1].size());
    for (std::size_t i = 0; i < want2.size(); ++i)
        CHECK(ts::close_abs(res2.values[i], want2[i], 1e-12));
    std::size_t total2 = 0;
    for (std::size_t c : res2.histogram) total2 += c;
    CHECK(total2 == data.n_rows());
}

TEST_CASE("pdp: constant models are flat, single-feature models are echoed") {
    const auto bg = background_of({"x0", "x1"},
                                  {{-2.0, 1.0}, {0.0, 2.0}, {2.0, 3.0}, {4.0, 4.0}});
    auto flat = stump_model({"x0", "x1"}, {});
    flat.base_score = 3.25;
    const auto res = pdp(flat, bg, {0}, {}, 5);
    for (double v : res.values) CHECK(v == 3.25);

    // a model reading only x0 turns the PDP into the model curve itself
    const auto m = stump_model({"x0", "x1"}, {{0, 0.5, -1.0, 1.0}});
    const auto curve = pdp(m, bg, {0}, {{-1.0, 0.0, 1.0, 2.0}});
    REQUIRE(curve.grids[0] == std::vector<double>{-1.0, 0.0, 1.0, 2.0});
    CHECK(curve.values == std::vector<double>{-1.0, -1.0, 1.0, 1.0});
}

TEST_CASE("pdp: custom grids and validation") {
    const auto bg = background_of({"x0", "x1"}, {{0.0, 0.0}, {1.0, 1.0}});
    const auto m = stump_model({"x0", "x1"}, {{0, 0.0, 0.0, 4.0}});

    const auto res = pdp(m, bg, {0, 1}, {{-1.0, 1.0}, {0.0, 0.5, 1.0}});
    CHECK(res.values.size() == 6);
    CHECK(res.histogram.size() == 6);

    CHECK_THROWS_AS(pdp(m, bg, {}), std::invalid_argument);
    CHECK_THROWS_AS(pdp(m, bg, {0, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(pdp(m, bg, {7}), std::invalid_argument);
    CHECK_THROWS_AS(pdp(m, bg, {0, 1}, {{1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(pdp(m, background_of({"x0", "x1"}, {}), {0}), std::invalid_argument);
}

TEST_CASE("shap_dependence: per-sample echo of value and attribution") {
    const auto rows = background_of({"x0", "x1"}, {{1.0, 10.0}, {2.0, 20.0}});
    Explanation e1;
    e1.phi = {0.5, -0.5};
    Explanation e2;
    e2.phi = {1.5, -1.5};
    const auto dep = shap_dependence({e1, e2}, rows, 0, 1);
    REQUIRE(dep.size() == 2);
    CHECK(dep[0].x_j == 1.0);
    CHECK(dep[0].phi_j == 0.5);
    CHECK(dep[0].x_h == 10.0);
    CHECK(dep[1].x_j == 2.0);
    CHECK(dep[1].phi_j == 1.5);
    CHECK(dep[1].x_h == 20.0);

    CHECK_THROWS_AS(shap_dependence({e1}, rows, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(shap_dependence({e1, e2}, rows, 5, 1), std::invalid_argument);
}

}  // TEST_SUITE
