#include "ridesplit/features.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ridesplit/io_util.hpp"
#include "ridesplit/stats.hpp"

namespace ridesplit {

const std::vector<TripColumn>& trip_columns() {
    static const std::vector<TripColumn> cols = {
        {"saved_distance", &TripRecord::saved_distance},
        {"emission_reduction", &TripRecord::emission_reduction},
        {"erp", &TripRecord::erp},
        {"err", &TripRecord::err},
        {"overlap_distance", &TripRecord::overlap_distance},
        {"overlap_rate", &TripRecord::overlap_rate},
        {"detour_distance", &TripRecord::detour_distance},
        {"detour_rate", &TripRecord::detour_rate},
        {"nsr", &TripRecord::nsr},
        {"peak_hours", &TripRecord::peak_hours},
        {"avg_speed", &TripRecord::avg_speed},
        {"actual_trip_distance", &TripRecord::actual_trip_distance},
        {"min_ride_distance", &TripRecord::min_ride_distance},
        {"max_ride_distance", &TripRecord::max_ride_distance},
        {"total_ride_distance", &TripRecord::total_ride_distance},
        {"ride_distance_gap", &TripRecord::ride_distance_gap},
        {"ride_distance_ratio", &TripRecord::ride_distance_ratio},
    };
    return cols;
}

const TripColumn* find_column(std::string_view name) {
    for (const auto& c : trip_columns())
        if (c.name == name) return &c;
    return nullptr;
}

const std::vector<std::string>& model_feature_names() {
    static const std::vector<std::string> names = {
        "overlap_rate",   "detour_rate",       "nsr",
        "peak_hours",     "avg_speed",         "actual_trip_distance",
        "ride_distance_gap", "ride_distance_ratio",
    };
    return names;
}

const std::vector<std::string>& default_iqr_columns() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& c : trip_columns()) {
            if (c.name == "peak_hours" || c.name == "nsr") continue;
            out.emplace_back(c.name);
        }
        return out;
    }();
    return names;
}

namespace {

struct Window {
    std::int64_t start;
    std::int64_t end;
};

// union of the time covered by >= 2 member ride intervals
std::vector<Window> coverage2_windows(const PoolTrip& trip) {
    struct Event {
        std::int64_t ts;
        int delta;
    };
    std::vector<Event> events;
    events.reserve(trip.rides.size() * 2);
    for (const auto& r : trip.rides) {
        events.push_back({r.order.start_ts, +1});
        events.push_back({r.order.end_ts, -1});
    }
    // starts before ends at equal timestamps, so touching rides register
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.ts != b.ts) return a.ts < b.ts;
        return a.delta > b.delta;
    });
    std::vector<Window> windows;
    int coverage = 0;
    std::int64_t opened = 0;
    for (const auto& e : events) {
        const int next = coverage + e.delta;
        if (coverage < 2 && next >= 2) {
            opened = e.ts;
        } else if (coverage >= 2 && next < 2) {
            if (!windows.empty() && windows.back().end == opened)
                windows.back().end = e.ts;
            else
                windows.push_back({opened, e.ts});
        }
        coverage = next;
    }
    return windows;
}

}  // namespace

OverlapMetrics overlap_metrics(const PoolTrip& trip) {
    const auto windows = coverage2_windows(trip);
    OverlapMetrics m;
    for (const auto& w : windows) m.time_s += static_cast<double>(w.end - w.start);
    double d = 0.0;
    for (const auto& s : trip.segments) {
        for (const auto& w : windows) {
            if (s.start_ts >= w.start && s.end_ts <= w.end) {
                d += s.d;
                break;
            }
        }
    }
    m.distance_m = d * trip.C;
    m.rate = trip.TD > 0.0 ? m.distance_m / trip.TD : 0.0;
    return m;
}

DetourMetrics detour_metrics(const PoolTrip& trip, const ReductionRecord& reduction) {
    if (reduction.baselines.size() != trip.rides.size())
        throw std::invalid_argument("detour_metrics: baseline count mismatch");
    DetourMetrics m;
    for (std::size_t n = 0; n < trip.rides.size(); ++n) {
        const auto& ride = trip.rides[n];
        const auto& base = reduction.baselines[n];
        if (base.order_id != ride.order.order_id)
            throw std::invalid_argument("detour_metrics: baseline order mismatch");
        double d = 0.0;
        for (const auto& s : trip.segments)
            if (s.start_ts >= ride.order.start_ts && s.end_ts <= ride.order.end_ts)
                d += s.d;
        m.distance_m += d * trip.C - base.median_td_m;
    }
    m.rate = trip.TD > 0.0 ? m.distance_m / trip.TD : 0.0;
    return m;
}

bool is_peak_hour(std::int64_t ts, std::int64_t utc_offset_s) {
    const std::int64_t local = ts + utc_offset_s;
    std::int64_t day = local / 86400;
    std::int64_t tod = local % 86400;
    if (tod < 0) {
        tod += 86400;
        day -= 1;
    }
    const int dow = static_cast<int>(((day + 4) % 7 + 7) % 7);  // 0 = Sunday
    if (dow == 0 || dow == 6) return false;
    const int hour = static_cast<int>(tod / 3600);
    return (hour >= 7 && hour < 9) || (hour >= 17 && hour < 20);
}

TripRecord build_record(const PoolTrip& trip, const ReductionRecord& reduction,
                        std::int64_t utc_offset_s) {
    TripRecord r;
    r.trip_id = trip.trip_id;
    r.saved_distance = reduction.sd_m / 1000.0;
    r.emission_reduction = reduction.er_g;
    r.erp = reduction.erp * 100.0;
    r.err = reduction.err_g_per_km;

    const auto ov = overlap_metrics(trip);
    r.overlap_distance = ov.distance_m / 1000.0;
    r.overlap_rate = ov.rate;
    r.overlap_time_s = ov.time_s;

    const auto dt = detour_metrics(trip, reduction);
    r.detour_distance = dt.distance_m / 1000.0;
    r.detour_rate = dt.rate;

    r.nsr = static_cast<double>(trip.nsr);
    r.peak_hours = is_peak_hour(trip.start_ts, utc_offset_s) ? 1.0 : 0.0;
    r.avg_speed = trip.TT > 0.0 ? (trip.TD / trip.TT) * 3.6 : 0.0;
    r.actual_trip_distance = trip.TD / 1000.0;

    double mn = 0.0, mx = 0.0, total = 0.0;
    for (std::size_t i = 0; i < reduction.baselines.size(); ++i) {
        const double km = reduction.baselines[i].median_td_m / 1000.0;
        total += km;
        if (i == 0) {
            mn = mx = km;
        } else {
            mn = std::min(mn, km);
            mx = std::max(mx, km);
        }
    }
    r.min_ride_distance = mn;
    r.max_ride_distance = mx;
    r.total_ride_distance = total;
    r.ride_distance_gap = mx - mn;
    r.ride_distance_ratio = mx > 0.0 ? mn / mx : 0.0;
    return r;
}

std::vector<TripRecord> validity_filter(const std::vector<TripRecord>& records,
                                        const ValidityParams& params,
                                        ValidityStats* stats) {
    std::vector<TripRecord> kept;
    kept.reserve(records.size());
    for (const auto& r : records) {
        if (r.overlap_distance * 1000.0 < params.min_overlap_d_m) {
            if (stats) ++stats->dropped_overlap_d;
        } else if (r.overlap_time_s < params.min_overlap_t_s) {
            if (stats) ++stats->dropped_overlap_t;
        } else if (!params.allowed_nsr.count(static_cast<int>(r.nsr))) {
            if (stats) ++stats->dropped_nsr;
        } else {
            kept.push_back(r);
        }
    }
    return kept;
}

IqrResult iqr_filter(const std::vector<TripRecord>& records, double factor,
                     const std::vector<std::string>& columns) {
    IqrResult result;
    if (records.size() < 4) {
        result.kept = records;
        result.skipped_small_sample = true;
        return result;
    }
    struct Bounds {
        double TripRecord::* member;
        double lo;
        double hi;
    };
    std::vector<Bounds> bounds;
    bounds.reserve(columns.size());
    for (const auto& name : columns) {
        const TripColumn* col = find_column(name);
        if (!col) throw std::invalid_argument("iqr_filter: unknown column " + name);
        std::vector<double> values;
        values.reserve(records.size());
        for (const auto& r : records) values.push_back(r.*(col->member));
        std::sort(values.begin(), values.end());
        const double q1 = quantile_sorted(values, 0.25);
        const double q3 = quantile_sorted(values, 0.75);
        const double iqr = q3 - q1;
        bounds.push_back({col->member, q1 - factor * iqr, q3 + factor * iqr});
    }
    for (const auto& r : records) {
        bool out = false;
        for (const auto& b : bounds) {
            const double v = r.*(b.member);
            if (v < b.lo || v > b.hi) {
                out = true;
                break;
            }
        }
        if (out)
            ++result.dropped;
        else
            result.kept.push_back(r);
    }
    return result;
}

std::vector<std::vector<std::optional<double>>> correlation_matrix(
    const std::vector<TripRecord>& records, const std::vector<std::string>& columns) {
    std::vector<std::vector<double>> data(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const TripColumn* col = find_column(columns[j]);
        if (!col)
            throw std::invalid_argument("correlation_matrix: unknown column " + columns[j]);
        data[j].reserve(records.size());
        for (const auto& r : records) data[j].push_back(r.*(col->member));
    }
    const std::size_t k = columns.size();
    std::vector<std::vector<std::optional<double>>> m(
        k, std::vector<std::optional<double>>(k));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            auto r = pearson(data[a], data[b]);
            m[a][b] = r;
            m[b][a] = r;
        }
    }
    return m;
}

std::string dataset_header() {
    std::string h = "trip_id";
    for (const auto& c : trip_columns()) {
        h += ',';
        h += c.name;
    }
    return h;
}

std::string dataset_to_csv(const std::vector<TripRecord>& records) {
    std::ostringstream os;
    os << dataset_header() << '\n';
    for (const auto& r : records) {
        os << r.trip_id;
        for (const auto& c : trip_columns()) os << ',' << format_g9(r.*(c.member));
        os << '\n';
    }
    return os.str();
}

void write_dataset(const std::vector<TripRecord>& records, const std::string& path) {
    write_text_file(path, dataset_to_csv(records));
}

std::vector<TripRecord> read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("dataset is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != dataset_header())
        throw std::runtime_error("dataset header mismatch in " + path);
    std::vector<TripRecord> records;
    const auto& cols = trip_columns();
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line, ',');
        if (fields.size() != cols.size() + 1)
            throw std::runtime_error("dataset row has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(cols.size() + 1));
        TripRecord r;
        r.trip_id = std::string(fields[0]);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto value = parse_double(fields[j + 1]);
            if (!value)
                throw std::runtime_error("dataset: bad number in column " +
                                         std::string(cols[j].name));
            r.*(cols[j].member) = *value;
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace ridesplit
