#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ridesplit/matching.hpp"
#include "ridesplit/trips.hpp"

namespace ridesplit {

// one regression row: four targets plus the trip-level variable set;
// distances in km, emissions in grams, erp in percent
struct TripRecord {
    std::string trip_id;
    double saved_distance = 0.0;
    double emission_reduction = 0.0;
    double erp = 0.0;
    double err = 0.0;
    double overlap_distance = 0.0;
    double overlap_rate = 0.0;
    double detour_distance = 0.0;
    double detour_rate = 0.0;
    double nsr = 0.0;
    double peak_hours = 0.0;
    double avg_speed = 0.0;
    double actual_trip_distance = 0.0;
    double min_ride_distance = 0.0;
    double max_ride_distance = 0.0;
    double total_ride_distance = 0.0;
    double ride_distance_gap = 0.0;
    double ride_distance_ratio = 0.0;
    // used by the validity filter only; not a dataset column
    double overlap_time_s = 0.0;
};

struct TripColumn {
    std::string_view name;
    double TripRecord::* member;
};

// targets first, then the variable set, matching the dataset header order
const std::vector<TripColumn>& trip_columns();
const TripColumn* find_column(std::string_view name);

// model inputs for the determinant analysis
const std::vector<std::string>& model_feature_names();
// default IQR columns: every numeric column except peak_hours and nsr
const std::vector<std::string>& default_iqr_columns();

struct OverlapMetrics {
    double distance_m = 0.0;
    double rate = 0.0;
    double time_s = 0.0;
};

// coverage>=2 windows over member ride intervals; a deduplicated segment
// counts iff it lies entirely inside one window; distance scaled by C_s
OverlapMetrics overlap_metrics(const PoolTrip& trip);

struct DetourMetrics {
    double distance_m = 0.0;
    double rate = 0.0;
};

// actual per-ride distance: C_s times the deduplicated segments inside the
// ride's own interval; baselines must list every member ride
DetourMetrics detour_metrics(const PoolTrip& trip, const ReductionRecord& reduction);

constexpr std::int64_t kDefaultUtcOffsetS = 8 * 3600;

bool is_peak_hour(std::int64_t ts, std::int64_t utc_offset_s);

TripRecord build_record(const PoolTrip& trip, const ReductionRecord& reduction,
                        std::int64_t utc_offset_s = kDefaultUtcOffsetS);

struct ValidityParams {
    double min_overlap_d_m = 500.0;
    double min_overlap_t_s = 60.0;
    std::set<int> allowed_nsr = {2, 3};
};

struct ValidityStats {
    std::size_t dropped_overlap_d = 0;
    std::size_t dropped_overlap_t = 0;
    std::size_t dropped_nsr = 0;
    std::size_t total() const {
        return dropped_overlap_d + dropped_overlap_t + dropped_nsr;
    }
};

std::vector<TripRecord> validity_filter(const std::vector<TripRecord>& records,
                                        const ValidityParams& params = {},
                                        ValidityStats* stats = nullptr);

struct IqrResult {
    std::vector<TripRecord> kept;
    std::size_t dropped = 0;
    bool skipped_small_sample = false;
};

// drop a record iff any listed column falls outside [Q1 - f*IQR, Q3 + f*IQR];
// fewer than 4 records leaves the input untouched
IqrResult iqr_filter(const std::vector<TripRecord>& records, double factor = 1.5,
                     const std::vector<std::string>& columns = default_iqr_columns());

// Pearson matrix; nullopt where either column is constant
std::vector<std::vector<std::optional<double>>> correlation_matrix(
    const std::vector<TripRecord>& records, const std::vector<std::string>& columns);

std::string dataset_header();
std::string dataset_to_csv(const std::vector<TripRecord>& records);
void write_dataset(const std::vector<TripRecord>& records, const std::string& path);
std::vector<TripRecord> read_dataset(const std::string& path);

}  // namespace ridesplit
