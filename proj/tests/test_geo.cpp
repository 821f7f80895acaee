#include <cmath>
#include <random>

#include "doctest.h"
#include "ridesplit/geo.hpp"
#include "support.hpp"

using namespace ridesplit;

TEST_SUITE("geo") {

TEST_CASE("haversine: identical points are zero") {
    const GeoPoint p{104.04, 30.65};
    CHECK(haversine_distance(p, p) == 0.0);
}

TEST_CASE("haversine: one-hundredth degree of latitude") {
    const GeoPoint a{104.04, 30.65};
    const GeoPoint b{104.04, 30.66};
    const double d = haversine_distance(a, b);
    // frozen closed form R*dphi, computed before the implementation existed
    CHECK(ts::close_abs(d, 1111.9508023353, 1e-4));
    CHECK(ts::close_rel(d, ts::lat_distance_m(0.01), 1e-9));
    CHECK(ts::close_abs(d, 1111.9, 1.0));
}

TEST_CASE("haversine: one-hundredth degree of longitude at 30.65 N") {
    const GeoPoint a{104.04, 30.65};
    const GeoPoint b{104.05, 30.65};
    const double d = haversine_distance(a, b);
    CHECK(ts::close_abs(d, 956.6084693453, 1e-4));
    CHECK(ts::close_rel(d, ts::lon_distance_m(0.01, 30.65), 1e-9));
    CHECK(d > 956.0);
    CHECK(d < 957.0);
}

TEST_CASE("haversine: symmetry and identity over random pairs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lon(104.04, 104.12);
    std::uniform_real_distribution<double> lat(30.65, 30.72);
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint a{lon(rng), lat(rng)};
        const GeoPoint b{lon(rng), lat(rng)};
        CHECK(haversine_distance(a, b) == haversine_distance(b, a));
        CHECK(haversine_distance(a, a) <= 1e-9);
        if (a.lon != b.lon || a.lat != b.lat)
            CHECK(haversine_distance(a, b) > 0.0);
    }
}

TEST_CASE("haversine: triangle inequality over random triples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lon(104.04, 104.12);
    std::uniform_real_distribution<double> lat(30.65, 30.72);
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint a{lon(rng), lat(rng)};
        const GeoPoint b{lon(rng), lat(rng)};
        const GeoPoint c{lon(rng), lat(rng)};
        const double ac = haversine_distance(a, c);
        const double detour = haversine_distance(a, b) + haversine_distance(b, c);
        CHECK(ac <= detour * (1.0 + 1e-6) + 1e-9);
    }
}

TEST_CASE("grid from counts: study box is 17x17 = 289 cells") {
    const GridSpec g = build_grid_spec_counts(104.04, 30.65, 104.12, 30.72, 17, 17);
    CHECK(g.n_cols == 17);
    CHECK(g.n_rows == 17);
    CHECK(g.cell_count() == 289);
}

TEST_CASE("grid from cell size: exact division yields 2x2") {
    // box with haversine spans one micron under 1000 m so the ceiling
    // division cannot round 2.0 up through floating noise
    const double min_lon = 104.04, min_lat = 30.65;
    const double span = 1000.0 * (1.0 - 1e-9);
    const double max_lat = min_lat + ts::lat_deg_for_m(span);
    const double max_lon = min_lon + ts::lon_deg_for_m(span, min_lat);
    const GridSpec g =
        build_grid_spec_cell_size(min_lon, min_lat, max_lon, max_lat, 500.0);
    CHECK(g.n_cols == 2);
    CHECK(g.n_rows == 2);
}

TEST_CASE("grid from cell size: study box at 500 m") {
    const GridSpec g =
        build_grid_spec_cell_size(104.04, 30.65, 104.12, 30.72, 500.0);
    // frozen counts from the haversine span oracle: spans 7650.1 x 7783.7 m
    CHECK(g.n_cols == 16);
    CHECK(g.n_rows == 16);
    const double width = haversine_distance({104.04, 30.65}, {104.12, 30.65});
    const double height = haversine_distance({104.04, 30.65}, {104.04, 30.72});
    CHECK(g.n_cols == static_cast<int>(std::ceil(width / 500.0)));
    CHECK(g.n_rows == static_cast<int>(std::ceil(height / 500.0)));
}

TEST_CASE("assign_grid: corners, center, and out-of-box points") {
    const GridSpec g = build_grid_spec_counts(104.04, 30.65, 104.12, 30.72, 17, 17);

    const auto lower = assign_grid({104.04, 30.65}, g);
    REQUIRE(lower.has_value());
    CHECK(*lower == GridIndex{0, 0});

    const auto center = assign_grid({(104.04 + 104.12) / 2.0, (30.65 + 30.72) / 2.0}, g);
    REQUIRE(center.has_value());
    CHECK(*center == GridIndex{8, 8});

    // closed upper edge: boundary points belong to the last cell
    const auto upper = assign_grid({104.12, 30.72}, g);
    REQUIRE(upper.has_value());
    CHECK(*upper == GridIndex{16, 16});

    CHECK_FALSE(assign_grid({104.03, 30.66}, g).has_value());
    CHECK_FALSE(assign_grid({104.05, 30.73}, g).has_value());
}

TEST_CASE("assign_grid: total partition and interior stability") {
    const GridSpec g = build_grid_spec_counts(104.04, 30.65, 104.12, 30.72, 17, 17);
    const double cw = (g.max_lon - g.min_lon) / g.n_cols;
    const double ch = (g.max_lat - g.min_lat) / g.n_rows;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        const GeoPoint p{g.min_lon + u(rng) * (g.max_lon - g.min_lon),
                         g.min_lat + u(rng) * (g.max_lat - g.min_lat)};
        const auto idx = assign_grid(p, g);
        REQUIRE(idx.has_value());
        CHECK(idx->col >= 0);
        CHECK(idx->col < g.n_cols);
        CHECK(idx->row >= 0);
        CHECK(idx->row < g.n_rows);
        if (i % 100 == 0) {
            // nudge toward the cell center; the index must not change
            const double cx = g.min_lon + (idx->col + 0.5) * cw;
            const double cy = g.min_lat + (idx->row + 0.5) * ch;
            const GeoPoint q{p.lon + (cx - p.lon) * 1e-3, p.lat + (cy - p.lat) * 1e-3};
            const auto idx2 = assign_grid(q, g);
            REQUIRE(idx2.has_value());
            CHECK(*idx2 == *idx);
        }
    }
}

TEST_CASE("od_key: distinct pairs get distinct keys") {
    const GridSpec g = build_grid_spec_counts(104.04, 30.65, 104.12, 30.72, 17, 17);
    CHECK(od_key({0, 0}, {1, 0}, g) != od_key({1, 0}, {0, 0}, g));
    CHECK(od_key({2, 3}, {4, 5}, g) == od_key({2, 3}, {4, 5}, g));
}

}  // TEST_SUITE
