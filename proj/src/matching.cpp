#include "ridesplit/matching.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "ridesplit/io_util.hpp"
#include "ridesplit/stats.hpp"

namespace ridesplit {

std::size_t OdKeyHash::operator()(const OdKey& k) const noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint64_t part :
         {static_cast<std::uint64_t>(k.origin.col), static_cast<std::uint64_t>(k.origin.row),
          static_cast<std::uint64_t>(k.destination.col),
          static_cast<std::uint64_t>(k.destination.row)}) {
        h ^= part;
        h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
}

void BaselineTable::put(const OdKey& key, BaselineEntry entry) {
    entries_[key] = entry;
}

std::optional<BaselineEntry> BaselineTable::lookup(const OdKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void BaselineTable::save(std::ostream& os) const {
    using Row = std::tuple<int, int, int, int>;
    std::map<Row, const BaselineEntry*> sorted;
    for (const auto& [k, v] : entries_)
        sorted[{k.origin.col, k.origin.row, k.destination.col, k.destination.row}] = &v;
    os << "o_col,o_row,d_col,d_row,median_td_m,median_e_g,n\n";
    for (const auto& [row, entry] : sorted) {
        os << std::get<0>(row) << ',' << std::get<1>(row) << ','
           << std::get<2>(row) << ',' << std::get<3>(row) << ','
           << format_g9(entry->median_td_m) << ',' << format_g9(entry->median_e_g)
           << ',' << entry->n_singles << '\n';
    }
}

void BaselineTable::save_file(const std::string& path) const {
    std::ostringstream os;
    save(os);
    write_text_file(path, os.str());
}

BaselineTable BaselineTable::load(std::istream& is) {
    BaselineTable table;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            continue;
        }
        auto fields = split_fields(line, ',');
        if (fields.size() != 7)
            throw std::runtime_error("baseline table: expected 7 columns, got " +
                                     std::to_string(fields.size()));
        const auto need_i = [&](std::size_t idx) {
            const auto v = parse_int(fields[idx]);
            if (!v) throw std::runtime_error("baseline table: bad integer field");
            return *v;
        };
        const auto need_d = [&](std::size_t idx) {
            const auto v = parse_double(fields[idx]);
            if (!v) throw std::runtime_error("baseline table: bad number field");
            return *v;
        };
        OdKey key;
        key.origin.col = static_cast<int>(need_i(0));
        key.origin.row = static_cast<int>(need_i(1));
        key.destination.col = static_cast<int>(need_i(2));
        key.destination.row = static_cast<int>(need_i(3));
        BaselineEntry entry;
        entry.median_td_m = need_d(4);
        entry.median_e_g = need_d(5);
        entry.n_singles = static_cast<std::size_t>(need_i(6));
        table.put(key, entry);
    }
    return table;
}

BaselineTable BaselineTable::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open baseline table: " + path);
    return load(is);
}

BaselineTable build_baselines(const std::vector<RideTrajectory>& singles,
                              const std::vector<double>& emissions,
                              const GridSpec& spec,
                              std::size_t min_substitutes) {
    if (singles.size() != emissions.size())
        throw std::invalid_argument("build_baselines: rides and emissions differ in length");
    struct Samples {
        std::vector<double> td;
        std::vector<double> e;
    };
    std::unordered_map<OdKey, Samples, OdKeyHash> groups;
    for (std::size_t i = 0; i < singles.size(); ++i) {
        const auto& ride = singles[i];
        auto o = assign_grid(ride.order.pickup, spec);
        auto d = assign_grid(ride.order.dropoff, spec);
        if (!o || !d) continue;
        auto& g = groups[OdKey{*o, *d}];
        g.td.push_back(ride.TD);
        g.e.push_back(emissions[i]);
    }
    BaselineTable table;
    for (auto& [key, samples] : groups) {
        if (samples.td.size() < std::max<std::size_t>(min_substitutes, 1)) continue;
        BaselineEntry entry;
        entry.median_td_m = median(samples.td);
        entry.median_e_g = median(samples.e);
        entry.n_singles = samples.td.size();
        table.put(key, entry);
    }
    return table;
}

std::optional<ReductionRecord> reduce_trip(const PoolTrip& trip,
                                           double pool_emission_g,
                                           const BaselineTable& table,
                                           const GridSpec& spec) {
    ReductionRecord rec;
    rec.trip_id = trip.trip_id;
    double sum_td = 0.0;
    double sum_e = 0.0;
    for (const auto& ride : trip.rides) {
        auto o = assign_grid(ride.order.pickup, spec);
        auto d = assign_grid(ride.order.dropoff, spec);
        if (!o || !d) return std::nullopt;
        OdKey key{*o, *d};
        auto entry = table.lookup(key);
        if (!entry) return std::nullopt;
        rec.baselines.push_back(
            {ride.order.order_id, key, entry->median_td_m, entry->median_e_g});
        sum_td += entry->median_td_m;
        sum_e += entry->median_e_g;
    }
    rec.sd_m = sum_td - trip.TD;
    rec.er_g = sum_e - pool_emission_g;
    rec.erp = sum_e != 0.0 ? rec.er_g / sum_e : 0.0;
    rec.err_g_per_km = trip.TD != 0.0 ? rec.er_g / (trip.TD / 1000.0) : 0.0;
    return rec;
}

ReductionResult reduce_trips(const std::vector<PoolTrip>& trips,
                             const std::vector<double>& pool_emissions,
                             const BaselineTable& table, const GridSpec& spec) {
    if (trips.size() != pool_emissions.size())
        throw std::invalid_argument("reduce_trips: trips and emissions differ in length");
    ReductionResult result;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        bool off_grid = false;
        for (const auto& ride : trips[i].rides) {
            if (!assign_grid(ride.order.pickup, spec) ||
                !assign_grid(ride.order.dropoff, spec)) {
                off_grid = true;
                break;
            }
        }
        if (off_grid) {
            ++result.off_grid_trips;
            continue;
        }
        auto rec = reduce_trip(trips[i], pool_emissions[i], table, spec);
        if (rec)
            result.records.push_back(std::move(*rec));
        else
            ++result.unmatched_trips;
    }
    return result;
}

}  // namespace ridesplit
