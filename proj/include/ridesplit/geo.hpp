#ifndef RIDESPLIT_GEO_HPP
#define RIDESPLIT_GEO_HPP

#include <cstdint>
#include <optional>

namespace ridesplit {

// Mean Earth radius shared by the implementation and every distance oracle.
inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoPoint {
    double lon = 0.0;  // degrees, GCJ-02
    double lat = 0.0;  // degrees, GCJ-02

    bool valid() const {
        return lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0;
    }
};

/// Great-circle distance in meters on a sphere of radius `radius_m`.
double haversine_distance(const GeoPoint& a, const GeoPoint& b,
                          double radius_m = kEarthRadiusM);

struct GridIndex {
    int col = 0;
    int row = 0;

    bool operator==(const GridIndex&) const = default;
};

struct GridSpec {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;
    int n_cols = 1;
    int n_rows = 1;

    int cell_count() const { return n_cols * n_rows; }
    bool contains(const GeoPoint& p) const {
        return p.lon >= min_lon && p.lon <= max_lon &&
               p.lat >= min_lat && p.lat <= max_lat;
    }
};

/// Grid from explicit column/row counts.
GridSpec build_grid_spec_counts(double min_lon, double min_lat,
                                double max_lon, double max_lat,
                                int n_cols, int n_rows);

/// Grid from a target cell size: spans are measured by haversine at the bbox
/// mid-latitude and counts are ceil(span / cell_size).
GridSpec build_grid_spec_cell_size(double min_lon, double min_lat,
                                   double max_lon, double max_lat,
                                   double cell_size_m);

/// Linear binning of a point into the grid. Points on the max lon/lat edge
/// belong to the last cell; out-of-box points yield nullopt.
std::optional<GridIndex> assign_grid(const GeoPoint& p, const GridSpec& spec);

/// Stable key for hashing an (origin, destination) cell pair.
inline std::uint64_t od_key(const GridIndex& o, const GridIndex& d,
                            const GridSpec& spec) {
    const std::uint64_t cells = static_cast<std::uint64_t>(spec.cell_count());
    const std::uint64_t oi = static_cast<std::uint64_t>(o.row) * spec.n_cols + o.col;
    const std::uint64_t di = static_cast<std::uint64_t>(d.row) * spec.n_cols + d.col;
    return oi * cells + di;
}

}  // namespace ridesplit

#endif
