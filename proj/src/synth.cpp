#include "ridesplit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ridesplit/emissions.hpp"
#include "ridesplit/features.hpp"
#include "ridesplit/ingest.hpp"
#include "ridesplit/io_util.hpp"
#include "ridesplit/rng.hpp"

namespace ridesplit {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRowHeightDeg = 0.005;
// 2020-02-01 00:00 UTC; trips drawn over two weeks cover every weekday and hour
constexpr std::int64_t kBaseTs = 1580515200;
constexpr std::int64_t kTsSpanS = 14 * 86400;

// Longitude increment whose haversine distance at this latitude is exactly
// step_m, so distances along a lattice row are integer multiples of the step.
double step_lon_deg(double step_m, double lat_deg) {
    const double half = std::sin(step_m / (2.0 * kEarthRadiusM));
    const double arg = half / std::cos(lat_deg * kPi / 180.0);
    return 2.0 * std::asin(arg) * 180.0 / kPi;
}

// Out-and-back excursion block: `pairs` east/west step pairs starting at a
// lattice step. Net displacement over the block is zero; path length is not.
struct Block {
    int start = 0;
    int pairs = 0;
    int end() const { return start + 2 * pairs; }
};

struct SubPlan {
    int j = 0;  // excursion pairs prepended to the direct path
    std::int64_t start_ts = 0;
};

struct RidePlan {
    int start = 0;  // lattice steps relative to the trip origin
    int end = 0;
    Block block;
    int j_med = 0;
    int j_spread = 1;
    std::vector<SubPlan> subs;
    int duration() const { return end - start; }
};

struct TripPlan {
    int nsr = 2;
    int variant = 0;            // layout family within the occupancy level
    std::vector<int> seg;       // phase lengths; semantics depend on variant
    std::vector<int> raw_bounces;
    double v_kmh = 30.0;
    std::int64_t start_ts = 0;
    std::string planted;
    std::vector<RidePlan> rides;
    std::vector<std::pair<int, int>> windows;  // step intervals, coverage >= 2
    int total_steps = 0;
};

// Phase lengths -> ride intervals and shared windows. Windows are pairwise
// disjoint by construction, so their union length is the sum of lengths.
void expand_layout(TripPlan& t) {
    const auto& s = t.seg;
    const auto keep_subs = [&](std::size_t n) {
        std::vector<RidePlan> rides(n);
        for (std::size_t i = 0; i < n && i < t.rides.size(); ++i) {
            rides[i].j_med = t.rides[i].j_med;
            rides[i].j_spread = t.rides[i].j_spread;
            rides[i].subs = t.rides[i].subs;
        }
        t.rides = std::move(rides);
    };
    if (t.nsr == 2) {
        const int pre = s[0], w = s[1], post = s[2];
        const int e = pre + w + post;
        keep_subs(2);
        if (t.variant == 0) {  // sequential: second ride boards mid-way
            t.rides[0].start = 0;
            t.rides[0].end = pre + w;
            t.rides[1].start = pre;
            t.rides[1].end = e;
        } else {  // nested: second ride inside the first
            t.rides[0].start = 0;
            t.rides[0].end = e;
            t.rides[1].start = pre;
            t.rides[1].end = pre + w;
        }
        t.windows = {{pre, pre + w}};
        t.total_steps = e;
    } else if (t.nsr == 3 && t.variant == 0) {
        // one spanning ride, two separate shared windows
        const int g1 = s[0], w2 = s[1], g2 = s[2], w3 = s[3], g3 = s[4];
        const int e = g1 + w2 + g2 + w3 + g3;
        const int a3 = g1 + w2 + g2;
        keep_subs(3);
        t.rides[0].start = 0;
        t.rides[0].end = e;
        t.rides[1].start = g1;
        t.rides[1].end = g1 + w2;
        t.rides[2].start = a3;
        t.rides[2].end = a3 + w3;
        t.windows = {{g1, g1 + w2}, {a3, a3 + w3}};
        t.total_steps = e;
    } else if (t.nsr == 3) {
        // chained: pairwise overlaps merge into one coverage window
        const int p1 = s[0], w12 = s[1], w123 = s[2], w23 = s[3], p3 = s[4];
        const int e = p1 + w12 + w123 + w23 + p3;
        keep_subs(3);
        t.rides[0].start = 0;
        t.rides[0].end = p1 + w12 + w123;
        t.rides[1].start = p1;
        t.rides[1].end = p1 + w12 + w123 + w23;
        t.rides[2].start = p1 + w12;
        t.rides[2].end = e;
        t.windows = {{p1, p1 + w12 + w123 + w23}};
        t.total_steps = e;
    } else {
        // occupancy 4: spanning ride plus three sequential windows
        const int g1 = s[0], w2 = s[1], g2 = s[2], w3 = s[3];
        const int g3 = s[4], w4 = s[5], g4 = s[6];
        const int e = g1 + w2 + g2 + w3 + g3 + w4 + g4;
        const int a2 = g1, a3 = g1 + w2 + g2, a4 = a3 + w3 + g3;
        keep_subs(4);
        t.rides[0].start = 0;
        t.rides[0].end = e;
        t.rides[1].start = a2;
        t.rides[1].end = a2 + w2;
        t.rides[2].start = a3;
        t.rides[2].end = a3 + w3;
        t.rides[3].start = a4;
        t.rides[3].end = a4 + w4;
        t.windows = {{a2, a2 + w2}, {a3, a3 + w3}, {a4, a4 + w4}};
        t.total_steps = e;
    }
}

// Phase each ride's excursion block lives in: a solo stretch for the spanning
// ride, the ride's own window (or solo tail) otherwise. Phases never collide.
std::vector<std::pair<int, int>> block_phases(const TripPlan& t) {
    const auto& s = t.seg;
    if (t.nsr == 2) {
        const int pre = s[0], w = s[1], post = s[2];
        if (t.variant == 0) return {{0, pre}, {pre + w, pre + w + post}};
        return {{0, pre}, {pre, pre + w}};
    }
    if (t.nsr == 3 && t.variant == 0)
        return {{0, s[0]}, t.windows[0], t.windows[1]};
    if (t.nsr == 3) {
        const int p1 = s[0], w12 = s[1];
        return {{0, p1}, {p1, p1 + w12}, {t.total_steps - s[4], t.total_steps}};
    }
    return {{0, s[0]}, t.windows[0], t.windows[1], t.windows[2]};
}

// Direct distance of every ride must stay >= 20 steps so each substitute
// (direct path plus j >= 0 excursion pairs) reaches the 60 s trip-time
// floor at the coarsest 3 s sampling interval.
constexpr int kMinDirectSteps = 20;

void place_blocks(TripPlan& t) {
    const auto phases = block_phases(t);
    int inner_inside_first = 0;
    for (std::size_t n = 1; n < t.rides.size(); ++n) {
        RidePlan& r = t.rides[n];
        const auto [lo, hi] = phases[n];
        const int cap = std::min({t.raw_bounces[n], (hi - lo - 4) / 2,
                                  (r.duration() - kMinDirectSteps - 4) / 2});
        r.block.start = lo + 2;
        r.block.pairs = std::max(0, cap);
        if (r.block.start >= t.rides[0].start && r.block.end() <= t.rides[0].end)
            inner_inside_first += r.block.pairs;
    }
    RidePlan& r0 = t.rides[0];
    const auto [lo, hi] = phases[0];
    const int cap =
        std::min({t.raw_bounces[0], (hi - lo - 4) / 2,
                  (r0.duration() - kMinDirectSteps - 4) / 2 - inner_inside_first});
    r0.block.start = lo + 2;
    r0.block.pairs = std::max(0, cap);
}

// Eastward position index after each step; excursion pairs step out and back.
std::vector<int> build_net(int total_steps, const std::vector<Block>& blocks) {
    std::vector<int> net(static_cast<std::size_t>(total_steps) + 1, 0);
    std::size_t bi = 0;
    for (int k = 0; k < total_steps; ++k) {
        while (bi < blocks.size() && k >= blocks[bi].end()) ++bi;
        int dir = 1;
        if (bi < blocks.size() && k >= blocks[bi].start && k < blocks[bi].end())
            dir = ((k - blocks[bi].start) % 2 == 0) ? 1 : -1;
        net[static_cast<std::size_t>(k) + 1] = net[k] + dir;
    }
    return net;
}

std::vector<int> trip_net(const TripPlan& t) {
    std::vector<Block> blocks;
    for (const auto& r : t.rides)
        if (r.block.pairs > 0) blocks.push_back(r.block);
    std::sort(blocks.begin(), blocks.end(),
              [](const Block& a, const Block& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < blocks.size(); ++i)
        if (blocks[i].start < blocks[i - 1].end())
            throw std::logic_error("synth: excursion blocks overlap");
    return build_net(t.total_steps, blocks);
}

// Shrinks excursions until every ride keeps the direct-distance floor. The
// placement caps already guarantee it; this is the enforcement of record.
void enforce_direct_floor(TripPlan& t) {
    for (int pass = 0; pass < 8; ++pass) {
        const auto net = trip_net(t);
        bool ok = true;
        for (auto& r : t.rides) {
            int deficit = kMinDirectSteps - (net[r.end] - net[r.start]);
            if (deficit <= 0) continue;
            ok = false;
            int cut = std::min((deficit + 1) / 2, r.block.pairs);
            r.block.pairs -= cut;
            deficit -= 2 * cut;
            if (deficit > 0) {
                for (auto& o : t.rides) {
                    if (&o == &r || o.block.pairs == 0) continue;
                    if (o.block.start < r.start || o.block.end() > r.end) continue;
                    cut = std::min((deficit + 1) / 2, o.block.pairs);
                    o.block.pairs -= cut;
                    deficit -= 2 * cut;
                    if (deficit <= 0) break;
                }
            }
        }
        if (ok) return;
    }
    const auto net = trip_net(t);
    for (const auto& r : t.rides)
        if (net[r.end] - net[r.start] < kMinDirectSteps)
            throw std::logic_error("synth: cannot satisfy direct-distance floor");
}

// Phase to widen when rides i < j land on the same origin/destination cell
// pair; widening separates ride j's pickup from ride i's.
int bump_phase(const TripPlan& t, int j) {
    if (t.nsr == 2) return 0;
    if (t.nsr == 3 && t.variant == 0) return j == 1 ? 0 : 2;
    if (t.nsr == 3) return j == 1 ? 0 : 1;
    return 2 * (j - 1);
}

std::string format_id(char prefix, int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%06d", prefix, n);
    return buf;
}

struct Emitter {
    std::vector<RideOrder> orders;
    std::vector<GpsFix> fixes;
    int order_seq = 0;
    int driver_seq = 0;

    std::string next_order() { return format_id('o', order_seq++); }
    std::string next_driver() { return format_id('d', driver_seq++); }
};

}  // namespace

SynthResult generate_scenario(const ScenarioSpec& spec) {
    const int dt = spec.sampling_interval_s;
    // dt >= 3 keeps every ride and substitute above the 60 s trip-time floor
    // with the step budgets below; dt <= 6 keeps segments under the gap rule
    if (dt < 3 || dt > 6)
        throw std::invalid_argument("synth: sampling_interval_s must be in [3, 6]");
    if (spec.n_substitutes < 1 || spec.n_substitutes % 2 == 0)
        throw std::invalid_argument("synth: n_substitutes must be odd");
    if (spec.speeds_kmh.empty())
        throw std::invalid_argument("synth: speeds_kmh must not be empty");
    for (double v : spec.speeds_kmh)
        if (v < 10.0 || v > 130.0)
            throw std::invalid_argument("synth: speeds_kmh must lie in [10, 130]");
    if (spec.min_ride_steps < 26 || spec.max_ride_steps < spec.min_ride_steps)
        throw std::invalid_argument(
            "synth: ride phase steps must satisfy 26 <= min <= max");
    if (spec.min_overlap_steps < kMinDirectSteps ||
        spec.max_overlap_steps < spec.min_overlap_steps)
        throw std::invalid_argument(
            "synth: overlap steps must satisfy 20 <= min <= max");
    if (spec.max_bounces < 0)
        throw std::invalid_argument("synth: max_bounces must be >= 0");
    // clean pools must clear the 500 m / 60 s shared-riding floors at the
    // slowest configured speed; the 10 m margin keeps rounding on the keep side
    const double v_slowest =
        *std::min_element(spec.speeds_kmh.begin(), spec.speeds_kmh.end());
    if (spec.min_overlap_steps * (v_slowest / 3.6 * dt) < 510.0 ||
        spec.min_overlap_steps * dt < 60)
        throw std::invalid_argument(
            "synth: min_overlap_steps leaves clean pools under the 500 m or "
            "60 s shared-riding floor at the slowest speed");

    Rng rng(spec.seed);
    const auto& pl = spec.planted;

    // phase 1: plan every entity; all randomness happens here, in fixed order
    std::vector<TripPlan> trips;
    const int n_pools =
        spec.n_pool_nsr2 + spec.n_pool_nsr3 + pl.pool_level();

    const auto draw_ride_meta = [&](RidePlan& r) {
        r.j_med = static_cast<int>(rng.range(0, 3));
        r.j_spread = static_cast<int>(rng.range(1, 2));
        const int m = (spec.n_substitutes - 1) / 2;
        r.subs.clear();
        for (int i = m; i >= 1; --i)
            r.subs.push_back({std::max(0, r.j_med - i * r.j_spread), 0});
        r.subs.push_back({r.j_med, 0});
        for (int i = 1; i <= m; ++i) r.subs.push_back({r.j_med + i * r.j_spread, 0});
        for (auto& sp : r.subs)
            sp.start_ts = kBaseTs + static_cast<std::int64_t>(
                                        rng.below(static_cast<std::uint64_t>(kTsSpanS)));
    };

    const auto dur = [&] {
        return static_cast<int>(rng.range(spec.min_ride_steps, spec.max_ride_steps));
    };
    const auto win = [&] {
        return static_cast<int>(
            rng.range(spec.min_overlap_steps, spec.max_overlap_steps));
    };
    const auto finish_plan = [&](TripPlan& t, std::size_t n_rides) {
        t.raw_bounces.clear();
        for (std::size_t i = 0; i < n_rides; ++i)
            t.raw_bounces.push_back(static_cast<int>(rng.range(0, spec.max_bounces)));
        t.rides.resize(n_rides);
        for (auto& r : t.rides) draw_ride_meta(r);
        t.v_kmh = spec.speeds_kmh[trips.size() % spec.speeds_kmh.size()];
        t.start_ts = kBaseTs + static_cast<std::int64_t>(
                                   rng.below(static_cast<std::uint64_t>(kTsSpanS)));
    };

    for (int i = 0; i < spec.n_pool_nsr2; ++i) {
        TripPlan t;
        t.nsr = 2;
        t.variant = i % 2;
        t.seg = {dur(), win(), dur()};
        finish_plan(t, 2);
        trips.push_back(std::move(t));
    }
    for (int i = 0; i < spec.n_pool_nsr3; ++i) {
        TripPlan t;
        t.nsr = 3;
        t.variant = i % 2;
        if (t.variant == 0)
            t.seg = {dur(), win(), static_cast<int>(rng.range(8, 16)), win(),
                     static_cast<int>(rng.range(8, spec.max_ride_steps))};
        else
            t.seg = {dur(), static_cast<int>(rng.range(12, 20)),
                     static_cast<int>(rng.range(8, 16)),
                     static_cast<int>(rng.range(12, 20)),
                     static_cast<int>(rng.range(10, spec.max_ride_steps))};
        finish_plan(t, 3);
        trips.push_back(std::move(t));
    }
    for (int i = 0; i < pl.pool_nsr4; ++i) {
        TripPlan t;
        t.nsr = 4;
        t.variant = 0;
        t.planted = "nsr";
        t.seg = {dur(), win(), static_cast<int>(rng.range(8, 16)), win(),
                 static_cast<int>(rng.range(8, 16)), win(),
                 static_cast<int>(rng.range(8, spec.max_ride_steps))};
        finish_plan(t, 4);
        trips.push_back(std::move(t));
    }
    for (int i = 0; i < pl.pool_low_overlap_distance; ++i) {
        // at 36 km/h a step covers 10*dt meters, so a window under 50/dt
        // steps keeps the shared distance below 500 m; distance is checked
        // before time, so this trip always lands in the distance tally
        TripPlan t;
        t.nsr = 2;
        t.variant = 0;
        t.seg = {dur(), std::max(2, 40 / dt), dur()};
        finish_plan(t, 2);
        t.v_kmh = 36.0;
        t.planted = "overlap_distance";
        trips.push_back(std::move(t));
    }
    for (int i = 0; i < pl.pool_low_overlap_time; ++i) {
        // 59/dt steps put the window at 54..57 s < 60 while the distance,
        // at least 540 m at 36 km/h, clears the 500 m check ahead of it
        TripPlan t;
        t.nsr = 2;
        t.variant = 0;
        t.seg = {dur(), 59 / dt, dur()};
        finish_plan(t, 2);
        t.v_kmh = 36.0;
        t.planted = "overlap_time";
        trips.push_back(std::move(t));
    }
    for (int i = 0; i < pl.iqr_outlier; ++i) {
        // valid trip whose detour dwarfs the population: 40 excursion pairs
        TripPlan t;
        t.nsr = 2;
        t.variant = 0;
        t.seg = {2 * 40 + 8, win(), dur()};
        finish_plan(t, 2);
        t.raw_bounces = {40, 0};
        t.planted = "iqr";
        trips.push_back(std::move(t));
    }
    if (static_cast<int>(trips.size()) != n_pools)
        throw std::logic_error("synth: pool plan count mismatch");

    struct SinglePlan {
        std::string kind;
        double v_kmh = 36.0;
        int steps = 0;
        int bounce_pairs = 0;
        std::int64_t gap_s = 0;   // stop inserted mid-ride, dropped as a segment
        int jump_steps = 0;       // teleport inserted mid-ride
        std::int64_t start_ts = 0;
        std::int64_t tt_override = 0;  // order-level plants fake their span
        bool out_of_region = false;
    };
    std::vector<SinglePlan> singles;
    int speed_cursor = 0;
    const auto next_speed = [&] {
        return spec.speeds_kmh[speed_cursor++ % spec.speeds_kmh.size()];
    };
    const auto draw_ts = [&] {
        return kBaseTs +
               static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(kTsSpanS)));
    };

    for (int i = 0; i < spec.n_singles; ++i) {
        SinglePlan s;
        s.kind = "plain";
        s.v_kmh = next_speed();
        s.steps = static_cast<int>(
            rng.range(spec.min_ride_steps, 2 * spec.max_ride_steps));
        const int cap = std::min({static_cast<int>(rng.range(0, spec.max_bounces)),
                                  (s.steps - 4) / 2,
                                  (s.steps - kMinDirectSteps - 4) / 2});
        s.bounce_pairs = std::max(0, cap);
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < spec.n_emission_rides; ++i) {
        SinglePlan s;
        s.kind = "emission";
        s.v_kmh = rng.uniform(20.0, 100.0);
        s.steps = static_cast<int>(rng.range(60, 150));
        if (i % 2 == 1) s.gap_s = rng.range(63, 300);
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < spec.n_calibration_rides; ++i) {
        SinglePlan s;
        s.kind = "calibration";
        s.v_kmh = next_speed();
        s.steps = static_cast<int>(rng.range(100, 200));
        if (i % 2 == 1) s.gap_s = rng.range(63, 600);
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < pl.seg_gap; ++i) {
        SinglePlan s;
        s.kind = "seg_gap";
        s.v_kmh = next_speed();
        s.steps = static_cast<int>(rng.range(spec.min_ride_steps, spec.max_ride_steps));
        s.gap_s = 90;
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < pl.seg_jump; ++i) {
        SinglePlan s;
        s.kind = "seg_jump";
        s.v_kmh = next_speed();
        s.steps = static_cast<int>(rng.range(spec.min_ride_steps, spec.max_ride_steps));
        const double step_m = s.v_kmh / 3.6 * dt;
        s.jump_steps = static_cast<int>(500.0 / step_m) + 1;  // d > 500 rules
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < pl.seg_speed; ++i) {
        SinglePlan s;
        s.kind = "seg_speed";
        s.v_kmh = next_speed();
        s.steps = static_cast<int>(rng.range(spec.min_ride_steps, spec.max_ride_steps));
        const double step_m = s.v_kmh / 3.6 * dt;
        // one segment above 50 m/s yet short of the distance rule; the hop
        // lands jump_steps + 1 step lengths from the previous fix
        s.jump_steps = static_cast<int>(50.0 * dt / step_m) + 1;
        if ((s.jump_steps + 1) * step_m > 500.0)
            throw std::logic_error("synth: speed plant collides with distance rule");
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < pl.orders_too_short; ++i) {
        SinglePlan s;
        s.kind = "too_short";
        s.v_kmh = next_speed();
        s.steps = std::max(2, 48 / dt);  // span < 60 s
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < pl.orders_too_long; ++i) {
        SinglePlan s;
        s.kind = "too_long";
        s.v_kmh = next_speed();
        s.steps = 3;
        s.tt_override = 7203;  // span > 7200 s
        s.start_ts = draw_ts();
        singles.push_back(s);
    }
    for (int i = 0; i < pl.orders_out_of_region; ++i) {
        SinglePlan s;
        s.kind = "out_of_region";
        s.v_kmh = next_speed();
        s.steps = 40;
        s.out_of_region = true;
        s.start_ts = draw_ts();
        singles.push_back(s);
    }

    // phase 2: size the region; every entity gets one constant-latitude lane
    const int lanes = n_pools + static_cast<int>(singles.size());
    if (lanes == 0) {
        // all counts zero: three empty files and a degenerate one-cell grid
        SynthResult out;
        out.grid = build_grid_spec_counts(spec.min_lon, spec.min_lat,
                                          spec.min_lon + kRowHeightDeg,
                                          spec.min_lat + kRowHeightDeg, 1, 1);
        return out;
    }
    const double max_lat = spec.min_lat + lanes * kRowHeightDeg;
    if (max_lat > 84.0)
        throw std::invalid_argument("synth: too many entities for the latitude span");

    int max_steps = 0;
    for (const auto& t : trips) {
        int total = 0;
        for (int s : t.seg) total += s;
        max_steps = std::max(max_steps, total);
    }
    for (const auto& s : singles)
        max_steps = std::max(max_steps, s.steps + s.jump_steps);
    max_steps += 240;  // headroom for cell-collision widening

    double s_max = 0.0;
    for (double v : spec.speeds_kmh) s_max = std::max(s_max, v);
    s_max = std::max(s_max, 36.0);
    if (spec.n_emission_rides > 0) s_max = std::max(s_max, 100.0);
    s_max = s_max / 3.6 * dt;

    const double span_deg =
        0.002 + (max_steps + 40) * step_lon_deg(s_max, max_lat);
    const int n_cols = std::max(
        8, static_cast<int>(std::ceil((max_steps + 40) * s_max / 200.0)));
    const GridSpec grid = build_grid_spec_counts(
        spec.min_lon, spec.min_lat, spec.min_lon + span_deg, max_lat, n_cols, lanes);

    // phase 3: geometry and emission; no randomness from here on
    Emitter em;
    nlohmann::json gt_trips = nlohmann::json::array();
    nlohmann::json gt_singles = nlohmann::json::array();
    int lane = 0;
    std::int64_t seg_t_drops = 0, seg_d_drops = 0, seg_v_drops = 0;

    // records rebuilt from the constructed closed forms; feeding them through
    // the validity and whisker filters yields the expected drop bookkeeping,
    // including incidental whisker losses among clean trips
    const CopertParams copert = default_copert();
    std::vector<TripRecord> sim_records;
    std::vector<std::string> sim_planted;

    for (auto& t : trips) {
        const double lat = spec.min_lat + (lane + 0.5) * kRowHeightDeg;
        const double step_m = t.v_kmh / 3.6 * dt;
        const double dlam = step_lon_deg(step_m, lat);
        const double lon0 = spec.min_lon + 0.001;

        std::vector<int> net;
        for (int attempt = 0;; ++attempt) {
            expand_layout(t);
            place_blocks(t);
            enforce_direct_floor(t);
            net = trip_net(t);

            std::vector<std::pair<GridIndex, GridIndex>> od;
            for (const auto& r : t.rides) {
                const GeoPoint p{lon0 + net[r.start] * dlam, lat};
                const GeoPoint q{lon0 + net[r.end] * dlam, lat};
                const auto pc = assign_grid(p, grid);
                const auto qc = assign_grid(q, grid);
                if (!pc || !qc)
                    throw std::logic_error("synth: ride endpoint left the region");
                od.push_back({*pc, *qc});
            }
            int ci = -1, cj = -1;
            for (std::size_t i = 0; i < od.size() && ci < 0; ++i)
                for (std::size_t j = i + 1; j < od.size(); ++j)
                    if (od[i] == od[j]) {
                        ci = static_cast<int>(i);
                        cj = static_cast<int>(j);
                        break;
                    }
            if (ci < 0) break;
            if (attempt >= 50)
                throw std::runtime_error(
                    "synth: could not separate ride cell pairs within a trip");
            t.seg[bump_phase(t, cj)] += 4;
        }

        const auto pos = [&](int k) { return GeoPoint{lon0 + net[k] * dlam, lat}; };
        const std::string driver = em.next_driver();

        nlohmann::json jt;
        jt["trip_id"] = driver + "#0";
        jt["driver_id"] = driver;
        jt["nsr"] = t.nsr;
        jt["v_kmh"] = t.v_kmh;
        jt["start_ts"] = t.start_ts;
        jt["end_ts"] = t.start_ts + static_cast<std::int64_t>(t.total_steps) * dt;
        jt["tt_s"] = static_cast<std::int64_t>(t.total_steps) * dt;
        jt["c"] = 1.0;
        jt["td_m"] = t.total_steps * step_m;
        double union_steps = 0;
        nlohmann::json jwins = nlohmann::json::array();
        for (const auto& [a, b] : t.windows) {
            union_steps += b - a;
            jwins.push_back({t.start_ts + static_cast<std::int64_t>(a) * dt,
                             t.start_ts + static_cast<std::int64_t>(b) * dt});
        }
        jt["windows"] = jwins;
        jt["overlap_d_m"] = union_steps * step_m;
        jt["overlap_t_s"] = union_steps * dt;
        jt["planted"] = t.planted;
        jt["expect_valid"] = t.planted.empty() || t.planted == "iqr";
        jt["expect_iqr_drop"] = t.planted == "iqr";

        double sum_median = 0.0;
        double sum_median_e = 0.0;
        double sum_detour = 0.0;
        double ride_min_km = 0.0, ride_max_km = 0.0, ride_total_km = 0.0;
        const double ef_g_per_km = emission_factor(t.v_kmh, copert);
        nlohmann::json jrides = nlohmann::json::array();
        for (const auto& r : t.rides) {
            const std::string oid = em.next_order();
            const std::int64_t ts0 = t.start_ts + static_cast<std::int64_t>(r.start) * dt;
            const std::int64_t ts1 = t.start_ts + static_cast<std::int64_t>(r.end) * dt;
            em.orders.push_back({oid, ts0, ts1, pos(r.start), pos(r.end)});
            for (int k = r.start; k <= r.end; ++k)
                em.fixes.push_back(
                    {driver, oid, t.start_ts + static_cast<std::int64_t>(k) * dt, pos(k)});

            const int direct = net[r.end] - net[r.start];
            const double actual = r.duration() * step_m;
            const double median = (direct + 2 * r.j_med) * step_m;
            sum_median += median;
            sum_median_e += ef_g_per_km * (median / 1000.0);
            sum_detour += actual - median;
            const double median_km = median / 1000.0;
            ride_total_km += median_km;
            if (jrides.empty()) {
                ride_min_km = ride_max_km = median_km;
            } else {
                ride_min_km = std::min(ride_min_km, median_km);
                ride_max_km = std::max(ride_max_km, median_km);
            }

            nlohmann::json jr;
            jr["order_id"] = oid;
            jr["start_ts"] = ts0;
            jr["end_ts"] = ts1;
            jr["tt_s"] = ts1 - ts0;
            jr["actual_td_m"] = actual;
            jr["direct_m"] = direct * step_m;
            jr["median_td_m"] = median;
            jr["detour_m"] = actual - median;
            nlohmann::json jsubs = nlohmann::json::array();
            for (const auto& sub : r.subs) {
                const std::string sid = em.next_order();
                const std::string sdrv = em.next_driver();
                const int steps = direct + 2 * sub.j;
                // substitute positions reuse the host ride's lattice indices,
                // so its endpoints are bit-identical to the ride's
                em.orders.push_back({sid, sub.start_ts,
                                     sub.start_ts + static_cast<std::int64_t>(steps) * dt,
                                     pos(r.start), pos(r.end)});
                int rel = 0;  // excursions first, then the direct run east
                for (int k = 0; k <= steps; ++k) {
                    em.fixes.push_back(
                        {sdrv, sid, sub.start_ts + static_cast<std::int64_t>(k) * dt,
                         GeoPoint{lon0 + (net[r.start] + rel) * dlam, lat}});
                    if (k < steps) {
                        if (k < 2 * sub.j)
                            rel += (k % 2 == 0) ? 1 : -1;
                        else
                            ++rel;
                    }
                }
                jsubs.push_back({{"order_id", sid},
                                 {"td_m", steps * step_m},
                                 {"tt_s", static_cast<std::int64_t>(steps) * dt}});
            }
            jr["substitutes"] = jsubs;
            jrides.push_back(std::move(jr));
        }
        jt["rides"] = jrides;
        jt["sum_median_td_m"] = sum_median;
        jt["sd_m"] = sum_median - t.total_steps * step_m;
        gt_trips.push_back(std::move(jt));

        const double td_m = t.total_steps * step_m;
        const double tt_s = static_cast<double>(t.total_steps) * dt;
        const double e_shared = ef_g_per_km * (td_m / 1000.0);
        const double er = sum_median_e - e_shared;
        const double overlap_d = union_steps * step_m;
        TripRecord rec;
        rec.trip_id = driver + "#0";
        rec.saved_distance = (sum_median - td_m) / 1000.0;
        rec.emission_reduction = er;
        rec.erp = sum_median_e > 0.0 ? er / sum_median_e * 100.0 : 0.0;
        rec.err = td_m > 0.0 ? er / (td_m / 1000.0) : 0.0;
        rec.overlap_distance = overlap_d / 1000.0;
        rec.overlap_rate = td_m > 0.0 ? overlap_d / td_m : 0.0;
        rec.overlap_time_s = union_steps * dt;
        rec.detour_distance = sum_detour / 1000.0;
        rec.detour_rate = td_m > 0.0 ? sum_detour / td_m : 0.0;
        rec.nsr = static_cast<double>(t.nsr);
        rec.peak_hours = is_peak_hour(t.start_ts, kDefaultUtcOffsetS) ? 1.0 : 0.0;
        rec.avg_speed = (td_m / tt_s) * 3.6;
        rec.actual_trip_distance = td_m / 1000.0;
        rec.min_ride_distance = ride_min_km;
        rec.max_ride_distance = ride_max_km;
        rec.total_ride_distance = ride_total_km;
        rec.ride_distance_gap = ride_max_km - ride_min_km;
        rec.ride_distance_ratio = ride_max_km > 0.0 ? ride_min_km / ride_max_km : 0.0;
        sim_records.push_back(std::move(rec));
        sim_planted.push_back(t.planted);
        ++lane;
    }

    for (const auto& s : singles) {
        const double lat = spec.min_lat + (lane + 0.5) * kRowHeightDeg;
        const double step_m = s.v_kmh / 3.6 * dt;
        const double dlam = step_lon_deg(step_m, lat);
        const double lon0 =
            s.out_of_region ? spec.min_lon - 0.05 : spec.min_lon + 0.001;
        const std::string driver = em.next_driver();
        const std::string oid = em.next_order();

        nlohmann::json js;
        js["order_id"] = oid;
        js["driver_id"] = driver;
        js["kind"] = s.kind;
        js["v_kmh"] = s.v_kmh;

        if (s.tt_override > 0) {
            // order-level span plant: geometry is irrelevant, the order dies
            // at the trip-time filter before any segment is built
            std::vector<std::int64_t> ts;
            for (int k = 0; k <= s.steps; ++k)
                ts.push_back(s.start_ts + k * s.tt_override / s.steps);
            for (int k = 0; k <= s.steps; ++k)
                em.fixes.push_back(
                    {driver, oid, ts[k], GeoPoint{lon0 + k * dlam, lat}});
            em.orders.push_back({oid, ts.front(), ts.back(),
                                 GeoPoint{lon0, lat},
                                 GeoPoint{lon0 + s.steps * dlam, lat}});
            js["tt_s"] = s.tt_override;
            gt_singles.push_back(std::move(js));
            ++lane;
            continue;
        }

        // lattice walk with optional single stop (dropped gap) or teleport
        const int mid = s.steps / 2;
        std::vector<int> net(static_cast<std::size_t>(s.steps) + 1, 0);
        std::vector<Block> blocks;
        if (s.bounce_pairs > 0) blocks.push_back({2, s.bounce_pairs});
        net = build_net(s.steps, blocks);
        if (s.jump_steps > 0)
            for (int k = mid + 1; k <= s.steps; ++k) net[k] += s.jump_steps;

        std::int64_t shift = 0;
        for (int k = 0; k <= s.steps; ++k) {
            em.fixes.push_back({driver, oid,
                                s.start_ts + static_cast<std::int64_t>(k) * dt + shift,
                                GeoPoint{lon0 + net[k] * dlam, lat}});
            if (s.gap_s > 0 && k == mid) {
                shift = s.gap_s;  // stopped: same position again after the gap
                em.fixes.push_back({driver, oid,
                                    s.start_ts + static_cast<std::int64_t>(k) * dt + shift,
                                    GeoPoint{lon0 + net[k] * dlam, lat}});
            }
        }
        const std::int64_t tt = static_cast<std::int64_t>(s.steps) * dt + s.gap_s;
        em.orders.push_back({oid, s.start_ts, s.start_ts + tt,
                             GeoPoint{lon0 + net[0] * dlam, lat},
                             GeoPoint{lon0 + net[s.steps] * dlam, lat}});

        if (s.gap_s > 0) ++seg_t_drops;
        if (s.kind == "seg_jump") ++seg_d_drops;
        if (s.kind == "seg_speed") ++seg_v_drops;

        js["steps"] = s.steps;
        js["tt_s"] = tt;
        js["gap_s"] = s.gap_s;
        // every lattice step covers one step length; stops and teleports are
        // dropped segments, so kept distance is steps minus the teleport hop
        const int kept_steps = s.steps - (s.jump_steps > 0 ? 1 : 0);
        js["d_m"] = kept_steps * step_m;
        js["t_s"] = static_cast<std::int64_t>(kept_steps) * dt;
        js["c"] = (static_cast<double>(tt)) / (static_cast<double>(kept_steps) * dt);
        js["td_m"] = kept_steps * step_m * (static_cast<double>(tt) /
                                            (static_cast<double>(kept_steps) * dt));
        gt_singles.push_back(std::move(js));
        ++lane;
    }

    // run the constructed records through the validity and whisker filters so
    // the expected counts cover incidental whisker losses among clean trips,
    // not just the planted violations
    ValidityStats sim_validity;
    const auto sim_valid = validity_filter(sim_records, {}, &sim_validity);
    if (static_cast<int>(sim_validity.dropped_nsr) != pl.pool_nsr4 ||
        static_cast<int>(sim_validity.dropped_overlap_d) !=
            pl.pool_low_overlap_distance ||
        static_cast<int>(sim_validity.dropped_overlap_t) !=
            pl.pool_low_overlap_time)
        throw std::logic_error(
            "synth: validity accounting diverged from the plant plan");
    const IqrResult sim_iqr = iqr_filter(sim_valid, 1.5, default_iqr_columns());
    std::set<std::string> sim_kept_ids;
    for (const auto& r : sim_iqr.kept) sim_kept_ids.insert(r.trip_id);
    std::set<std::string> sim_iqr_dropped;
    for (const auto& r : sim_valid)
        if (!sim_kept_ids.count(r.trip_id)) sim_iqr_dropped.insert(r.trip_id);
    for (std::size_t i = 0; i < sim_records.size(); ++i)
        if (sim_planted[i] == "iqr" &&
            !sim_iqr_dropped.count(sim_records[i].trip_id))
            throw std::logic_error(
                "synth: a planted outlier survived the whisker filter");
    for (auto& jt : gt_trips)
        jt["expect_iqr_drop"] =
            sim_iqr_dropped.count(jt["trip_id"].get<std::string>()) > 0;

    // ledger of what the pipeline must drop, planted and incidental alike
    nlohmann::json expected;
    expected["dropped_too_short"] = pl.orders_too_short;
    expected["dropped_too_long"] = pl.orders_too_long;
    expected["dropped_out_of_region"] = pl.orders_out_of_region;
    expected["seg_dropped_t"] = seg_t_drops;
    expected["seg_dropped_d"] = seg_d_drops;
    expected["seg_dropped_v"] = seg_v_drops;
    expected["pool_trips"] = n_pools;
    int pool_orders = 0;
    for (const auto& t : trips) pool_orders += t.nsr;
    expected["single_rides"] =
        static_cast<int>(em.orders.size()) - pool_orders - pl.order_level();
    expected["matched_trips"] = n_pools;
    expected["validity_dropped_nsr"] = pl.pool_nsr4;
    expected["validity_dropped_overlap_distance"] = pl.pool_low_overlap_distance;
    expected["validity_dropped_overlap_time"] = pl.pool_low_overlap_time;
    expected["valid_trips"] = sim_valid.size();
    expected["iqr_dropped_trips"] = sim_iqr_dropped.size();
    expected["final_rows"] = sim_iqr.kept.size();

    nlohmann::json root;
    root["format"] = "synth-ground-truth";
    root["version"] = 1;
    root["seed"] = spec.seed;
    root["sampling_interval_s"] = dt;
    root["grid"] = {{"min_lon", grid.min_lon}, {"min_lat", grid.min_lat},
                    {"max_lon", grid.max_lon}, {"max_lat", grid.max_lat},
                    {"n_cols", grid.n_cols},   {"n_rows", grid.n_rows}};
    root["counts"] = {{"orders", em.orders.size()},
                      {"fixes", em.fixes.size()},
                      {"pool_trips", n_pools},
                      {"singles", singles.size()}};
    root["expected"] = expected;
    root["trips"] = std::move(gt_trips);
    root["singles"] = std::move(gt_singles);

    SynthResult out;
    out.grid = grid;
    out.orders_csv = serialize_orders(em.orders);
    out.fixes_csv = serialize_fixes(em.fixes);
    out.ground_truth_json = root.dump(1);
    out.ground_truth_json.push_back('\n');
    return out;
}

void write_scenario(const ScenarioSpec& spec, const std::string& dir) {
    const SynthResult res = generate_scenario(spec);
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_text_file(base / "orders.csv", res.orders_csv);
    write_text_file(base / "fixes.csv", res.fixes_csv);
    write_text_file(base / "ground_truth.json", res.ground_truth_json);
}

Dataset make_regression(std::size_t n, double noise_sigma, std::uint64_t seed,
                        std::vector<double> coeffs) {
    Dataset d;
    d.feature_names = model_feature_names();
    const std::size_t nf = d.feature_names.size();
    coeffs.resize(nf, 0.0);
    d.columns.assign(nf, {});
    for (auto& c : d.columns) c.reserve(n);
    d.target.reserve(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < nf; ++j) {
            const double x = rng.uniform01();
            d.columns[j].push_back(x);
            y += coeffs[j] * x;
        }
        if (noise_sigma > 0.0) y += rng.normal(0.0, noise_sigma);
        d.target.push_back(y);
    }
    return d;
}

std::string make_regression_csv(std::size_t n, double noise_sigma,
                                std::uint64_t seed, std::vector<double> coeffs) {
    const Dataset d = make_regression(n, noise_sigma, seed, std::move(coeffs));
    std::vector<TripRecord> records(n);
    const auto names = model_feature_names();
    for (std::size_t i = 0; i < n; ++i) {
        TripRecord& r = records[i];
        char buf[32];
        std::snprintf(buf, sizeof(buf), "s%06zu", i);
        r.trip_id = buf;
        for (std::size_t j = 0; j < names.size(); ++j) {
            const TripColumn* col = find_column(names[j]);
            if (!col) throw std::logic_error("make_regression_csv: unknown column");
            r.*(col->member) = d.columns[j][i];
        }
        r.err = d.target[i];
    }
    return dataset_to_csv(records);
}

}  // namespace ridesplit
