#include "ridesplit/trips.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "ridesplit/geo.hpp"

namespace ridesplit {

std::vector<Segment> build_segments(std::vector<GpsFix> fixes) {
    std::sort(fixes.begin(), fixes.end(),
              [](const GpsFix& a, const GpsFix& b) { return a.ts < b.ts; });
    // equal timestamps keep the first fix; zero-t segments would break v = d/t
    fixes.erase(std::unique(fixes.begin(), fixes.end(),
                            [](const GpsFix& a, const GpsFix& b) {
                                return a.ts == b.ts;
                            }),
                fixes.end());
    std::vector<Segment> out;
    if (fixes.size() < 2) return out;
    out.reserve(fixes.size() - 1);
    for (std::size_t i = 1; i < fixes.size(); ++i) {
        Segment s;
        s.start_ts = fixes[i - 1].ts;
        s.end_ts = fixes[i].ts;
        s.t = static_cast<double>(s.end_ts - s.start_ts);
        s.d = haversine_distance(fixes[i - 1].pos, fixes[i].pos);
        s.v = s.d / s.t;
        out.push_back(s);
    }
    return out;
}

std::vector<Segment> filter_segments(const std::vector<Segment>& segments,
                                     const SegmentFilterLimits& limits,
                                     SegmentFilterStats* stats) {
    std::vector<Segment> kept;
    kept.reserve(segments.size());
    for (const auto& s : segments) {
        if (s.t > limits.max_t_s) {
            if (stats) ++stats->dropped_t;
        } else if (s.d > limits.max_d_m) {
            if (stats) ++stats->dropped_d;
        } else if (s.v > limits.max_v_mps) {
            if (stats) ++stats->dropped_v;
        } else {
            kept.push_back(s);
        }
    }
    return kept;
}

RideTrajectory summarize_ride(const RideOrder& order, std::string driver_id,
                              std::vector<Segment> kept_segments) {
    RideTrajectory r;
    r.order = order;
    r.driver_id = std::move(driver_id);
    r.segments = std::move(kept_segments);
    for (const auto& s : r.segments) {
        r.T += s.t;
        r.D += s.d;
    }
    if (!(r.T > 0.0))
        throw std::invalid_argument("summarize_ride: degenerate trajectory (T <= 0)");
    r.C = static_cast<double>(order.trip_time_s()) / r.T;
    r.TD = r.D * r.C;
    return r;
}

PoolTrip summarize_pool(std::string trip_id, std::vector<RideTrajectory> rides) {
    if (rides.size() < 2)
        throw std::invalid_argument("summarize_pool: needs at least two rides");
    PoolTrip p;
    p.trip_id = std::move(trip_id);
    p.driver_id = rides.front().driver_id;
    p.nsr = static_cast<int>(rides.size());
    p.start_ts = rides.front().order.start_ts;
    p.end_ts = rides.front().order.end_ts;
    for (const auto& r : rides) {
        p.start_ts = std::min(p.start_ts, r.order.start_ts);
        p.end_ts = std::max(p.end_ts, r.order.end_ts);
    }
    p.TT = static_cast<double>(p.end_ts - p.start_ts);

    // union of member segments; one physical segment per (start, end)
    std::vector<Segment> all;
    for (const auto& r : rides)
        all.insert(all.end(), r.segments.begin(), r.segments.end());
    std::sort(all.begin(), all.end(), [](const Segment& a, const Segment& b) {
        if (a.start_ts != b.start_ts) return a.start_ts < b.start_ts;
        if (a.end_ts != b.end_ts) return a.end_ts < b.end_ts;
        return a.d < b.d;
    });
    all.erase(std::unique(all.begin(), all.end(),
                          [](const Segment& a, const Segment& b) {
                              return a.start_ts == b.start_ts && a.end_ts == b.end_ts;
                          }),
              all.end());
    p.segments = std::move(all);
    for (const auto& s : p.segments) {
        p.T += s.t;
        p.D += s.d;
    }
    if (!(p.T > 0.0))
        throw std::invalid_argument("summarize_pool: degenerate trajectory (T <= 0)");
    p.C = p.TT / p.T;
    p.TD = p.D * p.C;
    p.rides = std::move(rides);
    return p;
}

PoolIdentification identify_pool_trips(const std::vector<RideOrder>& orders,
                                       const std::vector<GpsFix>& fixes,
                                       const SegmentFilterLimits& limits,
                                       std::int64_t min_overlap_s,
                                       SegmentFilterStats* seg_stats) {
    PoolIdentification result;

    std::unordered_map<std::string, std::vector<GpsFix>> fixes_by_order;
    std::unordered_map<std::string, std::string> driver_of_order;
    for (const auto& g : fixes) {
        fixes_by_order[g.order_id].push_back(g);
        driver_of_order.emplace(g.order_id, g.driver_id);
    }

    // driver -> rides, in a sorted map so output order is reproducible
    std::map<std::string, std::vector<RideTrajectory>> by_driver;
    for (const auto& o : orders) {
        const auto drv = driver_of_order.find(o.order_id);
        if (drv == driver_of_order.end()) {
            ++result.excluded_no_fixes;
            continue;
        }
        auto segs = filter_segments(build_segments(fixes_by_order[o.order_id]),
                                    limits, seg_stats);
        double total_t = 0.0;
        for (const auto& s : segs) total_t += s.t;
        if (segs.empty() || !(total_t > 0.0)) {
            ++result.excluded_empty_trajectory;
            continue;
        }
        by_driver[drv->second].push_back(
            summarize_ride(o, drv->second, std::move(segs)));
    }

    for (auto& [driver, rides] : by_driver) {
        std::sort(rides.begin(), rides.end(),
                  [](const RideTrajectory& a, const RideTrajectory& b) {
                      if (a.order.start_ts != b.order.start_ts)
                          return a.order.start_ts < b.order.start_ts;
                      return a.order.order_id < b.order.order_id;
                  });
        // sweep: a ride joins the open component iff it overlaps the
        // component envelope by >= min_overlap_s, which for start-sorted
        // intervals is equivalent to overlapping some member
        std::size_t pool_seq = 0;
        std::vector<RideTrajectory> component;
        std::int64_t env_end = 0;
        auto flush = [&]() {
            if (component.empty()) return;
            if (component.size() == 1) {
                result.singles.push_back(std::move(component.front()));
            } else {
                result.pools.push_back(summarize_pool(
                    driver + "#" + std::to_string(pool_seq++), std::move(component)));
            }
            component.clear();
        };
        for (auto& ride : rides) {
            if (!component.empty()) {
                const std::int64_t overlap =
                    std::min(env_end, ride.order.end_ts) - ride.order.start_ts;
                if (overlap < min_overlap_s) flush();
            }
            env_end = component.empty() ? ride.order.end_ts
                                        : std::max(env_end, ride.order.end_ts);
            component.push_back(std::move(ride));
        }
        flush();
    }
    return result;
}

}  // namespace ridesplit
