#include "ridesplit/ingest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ridesplit/io_util.hpp"

namespace ridesplit {

namespace {

// Coordinates serialize in the shortest form that parses back to the same
// double, so a write/read cycle preserves every distance bit-exactly.
std::string format_coord(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

template <typename T, typename RowFn>
ParseResult<T> parse_stream(std::istream& in, const ParseOptions& opt,
                            std::size_t n_cols, RowFn row_fn) {
    if (in.fail()) throw std::runtime_error("ingest: unreadable source");
    ParseResult<T> result;
    std::string line;
    bool first = true;
    while (next_line(in, line)) {
        if (first && opt.has_header) {
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        ++result.total_rows;
        const auto fields = split_fields(line, opt.delimiter);
        if (fields.size() != n_cols || !row_fn(fields, result.records)) {
            ++result.malformed;
        }
    }
    if (in.bad()) throw std::runtime_error("ingest: I/O error while reading");
    if (result.total_rows > 0) {
        const double frac = static_cast<double>(result.malformed) /
                            static_cast<double>(result.total_rows);
        if (frac > opt.max_malformed_fraction) {
            std::ostringstream msg;
            msg << "ingest: " << result.malformed << " of " << result.total_rows
                << " rows malformed; this does not look like the expected table";
            throw std::runtime_error(msg.str());
        }
    }
    return result;
}

}  // namespace

ParseResult<RideOrder> parse_orders(std::istream& in, const ParseOptions& opt) {
    return parse_stream<RideOrder>(
        in, opt, 7,
        [](const std::vector<std::string_view>& f, std::vector<RideOrder>& out) {
            const auto start = parse_int(f[1]);
            const auto end = parse_int(f[2]);
            const auto plon = parse_double(f[3]);
            const auto plat = parse_double(f[4]);
            const auto dlon = parse_double(f[5]);
            const auto dlat = parse_double(f[6]);
            if (f[0].empty() || !start || !end || !plon || !plat || !dlon || !dlat)
                return false;
            RideOrder o{std::string(f[0]), *start, *end,
                        GeoPoint{*plon, *plat}, GeoPoint{*dlon, *dlat}};
            if (o.start_ts >= o.end_ts) return false;
            if (!o.pickup.valid() || !o.dropoff.valid()) return false;
            out.push_back(std::move(o));
            return true;
        });
}

ParseResult<GpsFix> parse_fixes(std::istream& in, const ParseOptions& opt) {
    return parse_stream<GpsFix>(
        in, opt, 5,
        [](const std::vector<std::string_view>& f, std::vector<GpsFix>& out) {
            const auto ts = parse_int(f[2]);
            const auto lon = parse_double(f[3]);
            const auto lat = parse_double(f[4]);
            if (f[0].empty() || f[1].empty() || !ts || !lon || !lat) return false;
            GpsFix g{std::string(f[0]), std::string(f[1]), *ts, GeoPoint{*lon, *lat}};
            if (!g.pos.valid()) return false;
            out.push_back(std::move(g));
            return true;
        });
}

namespace {
std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return in;
}
}  // namespace

ParseResult<RideOrder> parse_orders_file(const std::string& path,
                                         const ParseOptions& opt) {
    auto in = open_or_throw(path);
    return parse_orders(in, opt);
}

ParseResult<GpsFix> parse_fixes_file(const std::string& path, const ParseOptions& opt) {
    auto in = open_or_throw(path);
    return parse_fixes(in, opt);
}

OrderFilterResult filter_orders(const std::vector<RideOrder>& orders,
                                const GridSpec& spec, std::int64_t min_tt_s,
                                std::int64_t max_tt_s) {
    OrderFilterResult r;
    r.kept.reserve(orders.size());
    for (const auto& o : orders) {
        const std::int64_t tt = o.trip_time_s();
        if (tt < min_tt_s) {
            ++r.dropped_too_short;
        } else if (tt > max_tt_s) {
            ++r.dropped_too_long;
        } else if (!assign_grid(o.pickup, spec) || !assign_grid(o.dropoff, spec)) {
            ++r.dropped_out_of_region;
        } else {
            r.kept.push_back(o);
        }
    }
    return r;
}

std::string serialize_orders(const std::vector<RideOrder>& orders, char delimiter,
                             bool header) {
    CsvWriter w(delimiter);
    if (header)
        w.header({"order_id", "start_ts", "end_ts", "pickup_lon", "pickup_lat",
                  "dropoff_lon", "dropoff_lat"});
    for (const auto& o : orders) {
        w.field(o.order_id)
            .field(o.start_ts)
            .field(o.end_ts)
            .field(format_coord(o.pickup.lon))
            .field(format_coord(o.pickup.lat))
            .field(format_coord(o.dropoff.lon))
            .field(format_coord(o.dropoff.lat));
        w.end_row();
    }
    return w.str();
}

std::string serialize_fixes(const std::vector<GpsFix>& fixes, char delimiter,
                            bool header) {
    CsvWriter w(delimiter);
    if (header) w.header({"driver_id", "order_id", "ts", "lon", "lat"});
    for (const auto& g : fixes) {
        w.field(g.driver_id)
            .field(g.order_id)
            .field(g.ts)
            .field(format_coord(g.pos.lon))
            .field(format_coord(g.pos.lat));
        w.end_row();
    }
    return w.str();
}

}  // namespace ridesplit
