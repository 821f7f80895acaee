#include "ridesplit/geo.hpp"

#include <cmath>
#include <stdexcept>

namespace ridesplit {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b, double radius_m) {
    const double lat1 = a.lat * kDegToRad;
    const double lat2 = b.lat * kDegToRad;
    const double dlat = (b.lat - a.lat) * kDegToRad;
    const double dlon = (b.lon - a.lon) * kDegToRad;
    const double sl = std::sin(dlat / 2.0);
    const double so = std::sin(dlon / 2.0);
    const double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
    return 2.0 * radius_m * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {
void check_bbox(double min_lon, double min_lat, double max_lon, double max_lat) {
    if (!(min_lon < max_lon) || !(min_lat < max_lat))
        throw std::invalid_argument("grid: degenerate bounding box");
}
}  // namespace

GridSpec build_grid_spec_counts(double min_lon, double min_lat,
                                double max_lon, double max_lat,
                                int n_cols, int n_rows) {
    check_bbox(min_lon, min_lat, max_lon, max_lat);
    if (n_cols < 1 || n_rows < 1)
        throw std::invalid_argument("grid: counts must be >= 1");
    return GridSpec{min_lon, min_lat, max_lon, max_lat, n_cols, n_rows};
}

GridSpec build_grid_spec_cell_size(double min_lon, double min_lat,
                                   double max_lon, double max_lat,
                                   double cell_size_m) {
    check_bbox(min_lon, min_lat, max_lon, max_lat);
    if (!(cell_size_m > 0.0))
        throw std::invalid_argument("grid: cell size must be positive");
    const double mid_lat = 0.5 * (min_lat + max_lat);
    const double span_lon =
        haversine_distance({min_lon, mid_lat}, {max_lon, mid_lat});
    const double span_lat =
        haversine_distance({min_lon, min_lat}, {min_lon, max_lat});
    const int n_cols = static_cast<int>(std::ceil(span_lon / cell_size_m));
    const int n_rows = static_cast<int>(std::ceil(span_lat / cell_size_m));
    return GridSpec{min_lon, min_lat, max_lon, max_lat,
                    std::max(1, n_cols), std::max(1, n_rows)};
}

std::optional<GridIndex> assign_grid(const GeoPoint& p, const GridSpec& spec) {
    if (!spec.contains(p)) return std::nullopt;
    const double fx = (p.lon - spec.min_lon) / (spec.max_lon - spec.min_lon);
    const double fy = (p.lat - spec.min_lat) / (spec.max_lat - spec.min_lat);
    int col = static_cast<int>(fx * spec.n_cols);
    int row = static_cast<int>(fy * spec.n_rows);
    // closed upper edge: lon == max_lon / lat == max_lat map to the last cell
    if (col >= spec.n_cols) col = spec.n_cols - 1;
    if (row >= spec.n_rows) row = spec.n_rows - 1;
    return GridIndex{col, row};
}

}  // namespace ridesplit
