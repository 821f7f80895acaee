#ifndef RIDESPLIT_TRIPS_HPP
#define RIDESPLIT_TRIPS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ridesplit/ingest.hpp"

namespace ridesplit {

struct Segment {
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    double t = 0.0;  // seconds, end - start
    double d = 0.0;  // meters
    double v = 0.0;  // m/s

    bool operator==(const Segment&) const = default;
};

struct SegmentFilterLimits {
    double max_t_s = 60.0;
    double max_d_m = 500.0;
    double max_v_mps = 50.0;
};

struct SegmentFilterStats {
    std::size_t dropped_t = 0;  // counted in this order: t, then d, then v
    std::size_t dropped_d = 0;
    std::size_t dropped_v = 0;

    std::size_t total() const { return dropped_t + dropped_d + dropped_v; }
};

/// Consecutive-fix segments for one order. Fixes are sorted by timestamp and
/// duplicated timestamps keep the first fix. Fewer than two usable fixes
/// yields an empty list (the ride is excluded downstream).
std::vector<Segment> build_segments(std::vector<GpsFix> fixes);

std::vector<Segment> filter_segments(const std::vector<Segment>& segments,
                                     const SegmentFilterLimits& limits = {},
                                     SegmentFilterStats* stats = nullptr);

struct RideTrajectory {
    RideOrder order;
    std::string driver_id;
    std::vector<Segment> segments;  // kept segments within the ride's span
    double T = 0.0;   // trajectory duration, seconds
    double D = 0.0;   // trajectory distance, meters
    double C = 1.0;   // calibration = TT / T
    double TD = 0.0;  // calibrated trip distance, meters
};

struct PoolTrip {
    std::string trip_id;
    std::string driver_id;
    std::vector<RideTrajectory> rides;
    std::vector<Segment> segments;  // union over rides, deduplicated
    int nsr = 0;
    std::int64_t start_ts = 0;  // first pickup
    std::int64_t end_ts = 0;    // last dropoff
    double TT = 0.0;            // end_ts - start_ts
    double T = 0.0;
    double D = 0.0;
    double C = 1.0;
    double TD = 0.0;
};

/// TT from the order, T and D from the kept segments, C = TT/T, TD = D*C.
/// Throws on T <= 0 (callers exclude such rides before summarizing).
RideTrajectory summarize_ride(const RideOrder& order, std::string driver_id,
                              std::vector<Segment> kept_segments);

/// Pool totals over the union of member segments, each physical segment
/// counted once (deduplicated by (start_ts, end_ts) within the driver).
PoolTrip summarize_pool(std::string trip_id, std::vector<RideTrajectory> rides);

struct PoolIdentification {
    std::vector<RideTrajectory> singles;
    std::vector<PoolTrip> pools;
    std::size_t excluded_no_fixes = 0;
    std::size_t excluded_empty_trajectory = 0;
};

/// Groups orders by driver (driver ids come from the fix table), builds and
/// filters per-order segments, and splits the orders of each driver into
/// single rides and pool trips. Two orders of one driver belong to the same
/// pool trip when their time intervals overlap by at least min_overlap_s;
/// pool membership is the transitive closure of that relation.
PoolIdentification identify_pool_trips(const std::vector<RideOrder>& orders,
                                       const std::vector<GpsFix>& fixes,
                                       const SegmentFilterLimits& limits = {},
                                       std::int64_t min_overlap_s = 1,
                                       SegmentFilterStats* seg_stats = nullptr);

}  // namespace ridesplit

#endif
