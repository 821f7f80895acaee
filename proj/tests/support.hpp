#pragma once

// Shared oracles and builders for the test suites. Every oracle re-derives
// its quantity from first principles (closed forms, exhaustive enumeration,
// normal equations) so agreement with the library is evidence, not tautology.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ridesplit/gbm.hpp"
#include "ridesplit/geo.hpp"
#include "ridesplit/ingest.hpp"
#include "ridesplit/trips.hpp"

namespace ts {

constexpr double kPi = 3.14159265358979323846;

inline bool close_abs(double a, double b, double tol) {
    return std::fabs(a - b) <= tol;
}

inline bool close_rel(double a, double b, double tol) {
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= tol * std::max(scale, 1e-300);
}

// ---------------------------------------------------------------------------
// geodesy

// pure-latitude displacement lies on a meridian great circle: d = R * dphi
inline double lat_distance_m(double dlat_deg) {
    return ridesplit::kEarthRadiusM * dlat_deg * kPi / 180.0;
}

inline double lat_deg_for_m(double meters) {
    return meters / ridesplit::kEarthRadiusM * 180.0 / kPi;
}

// pure-longitude displacement: chord angle 2*asin(cos(lat)*sin(dlon/2))
inline double lon_distance_m(double dlon_deg, double lat_deg) {
    const double lam = dlon_deg * kPi / 180.0;
    const double phi = lat_deg * kPi / 180.0;
    return 2.0 * ridesplit::kEarthRadiusM *
           std::asin(std::cos(phi) * std::sin(lam / 2.0));
}

// longitude increment whose haversine length at this latitude is exactly d
inline double lon_deg_for_m(double meters, double lat_deg) {
    const double phi = lat_deg * kPi / 180.0;
    const double half = std::sin(meters / (2.0 * ridesplit::kEarthRadiusM));
    return 2.0 * std::asin(half / std::cos(phi)) * 180.0 / kPi;
}

// ---------------------------------------------------------------------------
// order statistics

// linear interpolation between order statistics at h = (n-1)p
inline double quantile_oracle(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile_oracle: empty");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// interval coverage

// total seconds covered by two or more of the given [start, end] intervals,
// computed by an event sweep independent of the library's window merging
inline double coverage2_s(std::vector<std::pair<double, double>> intervals) {
    std::vector<std::pair<double, int>> events;
    for (const auto& [a, b] : intervals) {
        events.push_back({a, +1});
        events.push_back({b, -1});
    }
    std::sort(events.begin(), events.end());
    double covered = 0.0;
    int depth = 0;
    double prev = 0.0;
    for (const auto& [t, e] : events) {
        if (depth >= 2) covered += t - prev;
        depth += e;
        prev = t;
    }
    return covered;
}

// ---------------------------------------------------------------------------
// regression trees

struct SplitOracle {
    bool found = false;
    double gain = 0.0;
    int feature = -1;
    double cut = 0.0;  // rows with value <= cut go left
};

// exhaustive best squared-loss split over every feature and every boundary
// between adjacent distinct values; same gain scale as the histogram search
inline SplitOracle best_split_oracle(const ridesplit::Dataset& d,
                                     const std::vector<double>& resid,
                                     int min_leaf, double min_gain = 1e-12) {
    const std::size_t n = d.n_rows();
    double total = 0.0;
    for (double r : resid) total += r;
    const double parent = total * total / static_cast<double>(n);

    SplitOracle best;
    for (std::size_t f = 0; f < d.n_features(); ++f) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return d.columns[f][a] < d.columns[f][b];
        });
        double sum_l = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            sum_l += resid[order[k]];
            const double x0 = d.columns[f][order[k]];
            const double x1 = d.columns[f][order[k + 1]];
            if (x0 == x1) continue;  // not a boundary
            const auto n_l = static_cast<double>(k + 1);
            const auto n_r = static_cast<double>(n - k - 1);
            if (n_l < min_leaf || n_r < min_leaf) continue;
            const double sum_r = total - sum_l;
            const double gain = sum_l * sum_l / n_l + sum_r * sum_r / n_r - parent;
            if (gain <= min_gain) continue;
            if (!best.found || gain > best.gain) {
                best.found = true;
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.cut = x0 + (x1 - x0) / 2.0;
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Shapley values

using ModelFn = std::function<double(const std::vector<double>&)>;

struct ShapOracle {
    double phi0 = 0.0;
    std::vector<double> phi;
};

/// exact interventional Shapley attribution by full subset enumeration:
// v(S) averages the model over background rows with S taken from `row`
inline ShapOracle shap_oracle(const ModelFn& f, const std::vector<double>& row,
                              const std::vector<std::vector<double>>& background) {
    const std::size_t nf = row.size();
    if (nf > 20) throw std::invalid_argument("shap_oracle: too many features");
    const std::size_t n_sets = std::size_t{1} << nf;

    std::vector<double> value(n_sets, 0.0);
    std::vector<double> merged(nf);
    for (std::size_t mask = 0; mask < n_sets; ++mask) {
        double acc = 0.0;
        for (const auto& b : background) {
            for (std::size_t j = 0; j < nf; ++j)
                merged[j] = (mask >> j) & 1 ? row[j] : b[j];
            acc += f(merged);
        }
        value[mask] = acc / static_cast<double>(background.size());
    }

    std::vector<double> fact(nf + 1, 1.0);
    for (std::size_t k = 1; k <= nf; ++k)
        fact[k] = fact[k - 1] * static_cast<double>(k);

    ShapOracle out;
    out.phi0 = value[0];
    out.phi.assign(nf, 0.0);
    for (std::size_t j = 0; j < nf; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        for (std::size_t mask = 0; mask < n_sets; ++mask) {
            if (mask & bit) continue;
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            const double w =
                fact[s] * fact[nf - s - 1] / fact[nf];
            out.phi[j] += w * (value[mask | bit] - value[mask]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// partial dependence

// brute-force empirical marginal effect: plain double loop, no binning
inline std::vector<double> pdp1_oracle(const ModelFn& f,
                                       const std::vector<std::vector<double>>& refs,
                                       std::size_t feature,
                                       const std::vector<double>& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) {
        double acc = 0.0;
        for (auto row : refs) {
            row[feature] = g;
            acc += f(row);
        }
        out.push_back(acc / static_cast<double>(refs.size()));
    }
    return out;
}

inline std::vector<double> pdp2_oracle(const ModelFn& f,
                                       const std::vector<std::vector<double>>& refs,
                                       std::size_t fa, std::size_t fb,
                                       const std::vector<double>& ga,
                                       const std::vector<double>& gb) {
    std::vector<double> out;
    out.reserve(ga.size() * gb.size());
    for (double a : ga) {
        for (double b : gb) {
            double acc = 0.0;
            for (auto row : refs) {
                row[fa] = a;
                row[fb] = b;
                acc += f(row);
            }
            out.push_back(acc / static_cast<double>(refs.size()));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// least squares

// normal equations (X'X) b = X'y with an intercept column, solved by
// Gaussian elimination with partial pivoting; independent of Eigen
struct OlsOracle {
    double intercept = 0.0;
    std::vector<double> coef;
};

inline OlsOracle ols_oracle(const std::vector<std::vector<double>>& columns,
                            const std::vector<double>& y) {
    const std::size_t n = y.size();
    const std::size_t p = columns.size() + 1;
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    const auto x_at = [&](std::size_t i, std::size_t j) {
        return j == 0 ? 1.0 : columns[j - 1][i];
    };
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < p; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += x_at(i, j) * x_at(i, k);
            a[j][k] = s;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x_at(i, j) * y[i];
        a[j][p] = s;
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[pivot][c])) pivot = r;
        std::swap(a[c], a[pivot]);
        if (std::fabs(a[c][c]) < 1e-12)
            throw std::runtime_error("ols_oracle: singular system");
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double m = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= m * a[c][k];
        }
    }
    OlsOracle out;
    out.intercept = a[0][p] / a[0][0];
    out.coef.resize(p - 1);
    for (std::size_t j = 1; j < p; ++j) out.coef[j - 1] = a[j][p] / a[j][j];
    return out;
}

// ---------------------------------------------------------------------------
// builders

// hand-made segment with consistent (t, d, v)
inline ridesplit::Segment seg(std::int64_t start, std::int64_t end, double d) {
    ridesplit::Segment s;
    s.start_ts = start;
    s.end_ts = end;
    s.t = static_cast<double>(end - start);
    s.d = d;
    s.v = s.t > 0.0 ? d / s.t : 0.0;
    return s;
}

// contiguous chain of equal segments covering [start, start + n*dt]
inline std::vector<ridesplit::Segment> seg_chain(std::int64_t start, int n,
                                                 std::int64_t dt, double d) {
    std::vector<ridesplit::Segment> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(seg(start + i * dt, start + (i + 1) * dt, d));
    return out;
}

inline ridesplit::RideOrder order(std::string id, std::int64_t start,
                                  std::int64_t end, ridesplit::GeoPoint pickup = {},
                                  ridesplit::GeoPoint dropoff = {}) {
    ridesplit::RideOrder o;
    o.order_id = std::move(id);
    o.start_ts = start;
    o.end_ts = end;
    o.pickup = pickup;
    o.dropoff = dropoff;
    return o;
}

// constant-longitude walk north with one fix per sampling step; every
// step's haversine length is exactly step_m
struct LatticeRide {
    ridesplit::RideOrder order;
    std::vector<ridesplit::GpsFix> fixes;
};

inline LatticeRide lattice_ride(const std::string& driver, const std::string& oid,
                                double lon, double lat0, std::int64_t start_ts,
                                int steps, std::int64_t dt_s, double step_m) {
    LatticeRide out;
    const double dlat = lat_deg_for_m(step_m);
    for (int k = 0; k <= steps; ++k) {
        ridesplit::GpsFix fx;
        fx.driver_id = driver;
        fx.order_id = oid;
        fx.ts = start_ts + static_cast<std::int64_t>(k) * dt_s;
        fx.pos = {lon, lat0 + k * dlat};
        out.fixes.push_back(fx);
    }
    out.order = order(oid, start_ts, start_ts + steps * dt_s, {lon, lat0},
                      {lon, lat0 + steps * dlat});
    return out;
}

// unique scratch directory removed on destruction
class TempDir {
   public:
    explicit TempDir(const std::string& tag = "scratch") {
        const auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto p = base / (tag + "-" + std::to_string(counter_++));
            std::error_code ec;
            if (std::filesystem::create_directory(p, ec)) {
                path_ = p;
                return;
            }
        }
        throw std::runtime_error("TempDir: cannot create scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& name = "") const {
        return name.empty() ? path_.string() : (path_ / name).string();
    }

   private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

// model evaluated through the library's own prediction path
inline ModelFn model_fn(const ridesplit::BoostedModel& m) {
    return [&m](const std::vector<double>& row) { return m.predict_row(row); };
}

// column-major dataset to row-major sample list, as the oracles expect
inline std::vector<std::vector<double>> rows_of(const ridesplit::Dataset& d) {
    std::vector<std::vector<double>> rows;
    rows.reserve(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) rows.push_back(d.row(i));
    return rows;
}

}  // namespace ts
