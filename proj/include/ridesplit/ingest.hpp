#ifndef RIDESPLIT_INGEST_HPP
#define RIDESPLIT_INGEST_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "ridesplit/geo.hpp"

namespace ridesplit {

struct RideOrder {
    std::string order_id;
    std::int64_t start_ts = 0;  // unix seconds
    std::int64_t end_ts = 0;    // unix seconds
    GeoPoint pickup;
    GeoPoint dropoff;

    std::int64_t trip_time_s() const { return end_ts - start_ts; }
};

struct GpsFix {
    std::string driver_id;
    std::string order_id;
    std::int64_t ts = 0;  // unix seconds
    GeoPoint pos;
};

struct ParseOptions {
    char delimiter = ',';
    bool has_header = true;
    // above this malformed fraction the file is treated as the wrong format
    double max_malformed_fraction = 0.5;
};

template <typename T>
struct ParseResult {
    std::vector<T> records;
    std::size_t malformed = 0;
    std::size_t total_rows = 0;
};

/// Columns: order id, start ts, end ts, pickup lon, pickup lat,
/// dropoff lon, dropoff lat.
ParseResult<RideOrder> parse_orders(std::istream& in, const ParseOptions& opt = {});
ParseResult<RideOrder> parse_orders_file(const std::string& path,
                                         const ParseOptions& opt = {});

/// Columns: driver id, order id, ts, lon, lat.
ParseResult<GpsFix> parse_fixes(std::istream& in, const ParseOptions& opt = {});
ParseResult<GpsFix> parse_fixes_file(const std::string& path,
                                     const ParseOptions& opt = {});

struct OrderFilterResult {
    std::vector<RideOrder> kept;
    std::size_t dropped_too_short = 0;
    std::size_t dropped_too_long = 0;
    std::size_t dropped_out_of_region = 0;

    std::size_t dropped_total() const {
        return dropped_too_short + dropped_too_long + dropped_out_of_region;
    }
};

/// Keeps orders with min_tt <= TT <= max_tt and both endpoints inside the grid.
OrderFilterResult filter_orders(const std::vector<RideOrder>& orders,
                                const GridSpec& spec,
                                std::int64_t min_tt_s = 60,
                                std::int64_t max_tt_s = 7200);

/// One serialized row per record, matching the parser's column layout.
std::string serialize_orders(const std::vector<RideOrder>& orders,
                             char delimiter = ',', bool header = true);
std::string serialize_fixes(const std::vector<GpsFix>& fixes,
                            char delimiter = ',', bool header = true);

}  // namespace ridesplit

#endif
