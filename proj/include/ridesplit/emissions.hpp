#pragma once

#include <string>

#include "ridesplit/trips.hpp"

namespace ridesplit {

struct CopertParams {
    std::string pollutant = "co2";
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;
    double zeta = 0.0;
    double eta = 1.0;
    double v_min_kmh = 10.0;
    double v_max_kmh = 130.0;
};

// throws std::invalid_argument when v_min <= 0, v_min > v_max, or the
// denominator can reach zero inside [v_min, v_max]
void validate_copert(const CopertParams& p);

// petrol-car CO2 curve shipped as the working default; positive and
// denominator-safe over the whole clamp range
CopertParams default_copert();

// g/km at v clamped into [v_min, v_max]
double emission_factor(double v_kmh, const CopertParams& p);

// grams for one filtered segment: EF(v) * d, speed taken from the segment
double segment_emission(const Segment& seg, const CopertParams& p);

// grams: calibration coefficient times the sum of segment emissions
double ride_emission(const RideTrajectory& ride, const CopertParams& p);
double pool_emission(const PoolTrip& trip, const CopertParams& p);

}  // namespace ridesplit
