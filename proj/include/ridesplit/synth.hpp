#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridesplit/gbm.hpp"
#include "ridesplit/geo.hpp"

namespace ridesplit {

// one deliberately invalid record per count, used to test filter bookkeeping
struct PlantedCounts {
    int orders_too_short = 0;
    int orders_too_long = 0;
    int orders_out_of_region = 0;
    int seg_gap = 0;    // dropped by the segment t rule
    int seg_jump = 0;   // dropped by the d rule
    int seg_speed = 0;  // dropped by the v rule
    int pool_nsr4 = 0;
    int pool_low_overlap_distance = 0;
    int pool_low_overlap_time = 0;
    int iqr_outlier = 0;

    int order_level() const {
        return orders_too_short + orders_too_long + orders_out_of_region;
    }
    int segment_level() const { return seg_gap + seg_jump + seg_speed; }
    int pool_level() const {
        return pool_nsr4 + pool_low_overlap_distance + pool_low_overlap_time +
               iqr_outlier;
    }
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    double min_lon = 104.0;
    double min_lat = 30.0;
    int sampling_interval_s = 3;

    int n_pool_nsr2 = 10;
    int n_pool_nsr3 = 5;
    int n_substitutes = 3;  // per shared ride, odd so the median is a sample
    int n_singles = 20;     // plain standalone single rides
    int n_emission_rides = 0;     // randomized (v, D, C) rides
    int n_calibration_rides = 0;  // half clean, half with a known dropped gap

    std::vector<double> speeds_kmh = {30.0, 36.0, 45.0};
    int min_ride_steps = 30;     // per-ride duration floor, lattice steps
    int max_ride_steps = 60;     // single-occupancy phase cap per ride
    int min_overlap_steps = 22;  // co-riding window length range
    int max_overlap_steps = 33;
    int max_bounces = 5;  // out-and-back excursions per ride, drives detours

    double target_noise_sigma = 0.1;  // forwarded to the regression generator

    PlantedCounts planted;
};

struct SynthResult {
    std::string orders_csv;
    std::string fixes_csv;
    std::string ground_truth_json;
    GridSpec grid;
};

// deterministic under spec.seed; ground truth carries the constructed
// overlap/detour/baseline/calibration values for every generated entity
SynthResult generate_scenario(const ScenarioSpec& spec);

// writes orders.csv, fixes.csv, ground_truth.json into dir
void write_scenario(const ScenarioSpec& spec, const std::string& dir);

// y = sum(coeffs * x) + N(0, sigma), x ~ U[0,1); eight features named after
// the model variables so the modeling stages run on it unchanged
Dataset make_regression(std::size_t n, double noise_sigma, std::uint64_t seed,
                        std::vector<double> coeffs = {3.0, -2.0});

// same rows shaped as a dataset file: err carries the target, the eight
// model features carry x, every other column is zero
std::string make_regression_csv(std::size_t n, double noise_sigma,
                                std::uint64_t seed,
                                std::vector<double> coeffs = {3.0, -2.0});

}  // namespace ridesplit
