#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ridesplit/geo.hpp"
#include "ridesplit/trips.hpp"

namespace ridesplit {

struct BaselineEntry {
    double median_td_m = 0.0;
    double median_e_g = 0.0;
    std::size_t n_singles = 0;
};

struct OdKey {
    GridIndex origin;
    GridIndex destination;
    bool operator==(const OdKey&) const = default;
};

struct OdKeyHash {
    std::size_t operator()(const OdKey& k) const noexcept;
};

class BaselineTable {
   public:
    void put(const OdKey& key, BaselineEntry entry);
    std::optional<BaselineEntry> lookup(const OdKey& key) const;
    std::size_t size() const { return entries_.size(); }

    // delimited text, sorted by key so exports are reproducible
    void save(std::ostream& os) const;
    void save_file(const std::string& path) const;
    static BaselineTable load(std::istream& is);
    static BaselineTable load_file(const std::string& path);

   private:
    std::unordered_map<OdKey, BaselineEntry, OdKeyHash> entries_;
};

// per ride that went into a reduction: the baseline it was matched to
struct RideBaseline {
    std::string order_id;
    OdKey key;
    double median_td_m = 0.0;
    double median_e_g = 0.0;
};

struct ReductionRecord {
    std::string trip_id;
    double sd_m = 0.0;       // saved distance
    double er_g = 0.0;       // emission reduction
    double erp = 0.0;        // reduction as a fraction of the substituted total
    double err_g_per_km = 0.0;
    std::vector<RideBaseline> baselines;
};

// rides outside the grid or with empty baseline OD pairs cannot be reduced
struct ReductionResult {
    std::vector<ReductionRecord> records;
    std::size_t unmatched_trips = 0;
    std::size_t off_grid_trips = 0;
};

// median TD / median E per OD pair over single rides; rides whose endpoints
// fall outside the grid are skipped (counted by the caller via off-grid totals)
BaselineTable build_baselines(const std::vector<RideTrajectory>& singles,
                              const std::vector<double>& emissions,
                              const GridSpec& spec,
                              std::size_t min_substitutes = 1);

std::optional<ReductionRecord> reduce_trip(const PoolTrip& trip,
                                           double pool_emission_g,
                                           const BaselineTable& table,
                                           const GridSpec& spec);

ReductionResult reduce_trips(const std::vector<PoolTrip>& trips,
                             const std::vector<double>& pool_emissions,
                             const BaselineTable& table, const GridSpec& spec);

}  // namespace ridesplit
