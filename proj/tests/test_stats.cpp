#include <random>
#include <vector>

#include "doctest.h"
#include "ridesplit/stats.hpp"
#include "support.hpp"

using namespace ridesplit;

TEST_SUITE("stats") {

TEST_CASE("quantile: interpolation on {1..10, 100}") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100};
    CHECK(quantile(v, 0.25) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(quantile(v, 0.75) == doctest::Approx(8.5).epsilon(1e-12));
    // whisker bounds at factor 1.5 follow directly
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    CHECK(quantile(v, 0.25) - 1.5 * iqr == doctest::Approx(-4.0).epsilon(1e-12));
    CHECK(quantile(v, 0.75) + 1.5 * iqr == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("quantile: endpoints and single element") {
    const std::vector<double> v{5.0, 1.0, 3.0};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 5.0);
    CHECK(quantile({42.0}, 0.5) == 42.0);
}

TEST_CASE("quantile: matches the order-statistic oracle on random input") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(1 + trial % 37);
        for (auto& x : v) x = u(rng);
        for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0})
            CHECK(ts::close_rel(quantile(v, p), ts::quantile_oracle(v, p), 1e-12));
    }
}

TEST_CASE("median: odd and even counts") {
    CHECK(median({2.0, 3.0, 10.0}) == 3.0);
    CHECK(median({2.0, 4.0}) == 3.0);
    CHECK(median({7.0}) == 7.0);
}

TEST_CASE("mean: small exact cases") {
    CHECK(mean({1.0, 2.0, 3.0}) == 2.0);
    CHECK(mean({-4.0, 4.0}) == 0.0);
}

TEST_CASE("pearson: exact correlations and the constant guard") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y = x;
    auto r = pearson(x, y);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(1.0).epsilon(1e-12));

    for (auto& v : y) v = -v;
    r = pearson(x, y);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(-1.0).epsilon(1e-12));

    CHECK_FALSE(pearson(x, {2, 2, 2, 2, 2}).has_value());
}

TEST_CASE("pearson: independent noise stays near zero") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(10000), y(10000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = g(rng);
        y[i] = g(rng);
    }
    const auto r = pearson(x, y);
    REQUIRE(r.has_value());
    CHECK(std::fabs(*r) < 0.05);
}

}  // TEST_SUITE
