#include "ridesplit/emissions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ridesplit {

namespace {

double denominator(double v, const CopertParams& p) {
    return p.epsilon * v * v + p.zeta * v + p.eta;
}

}  // namespace

void validate_copert(const CopertParams& p) {
    if (!(p.v_min_kmh > 0.0))
        throw std::invalid_argument("copert: v_min must be positive");
    if (!(p.v_min_kmh <= p.v_max_kmh))
        throw std::invalid_argument("copert: v_min must not exceed v_max");
    // denominator is quadratic in v; a sign change or zero anywhere on the
    // clamp interval invalidates the parameter set
    const double lo = denominator(p.v_min_kmh, p);
    const double hi = denominator(p.v_max_kmh, p);
    bool bad = lo == 0.0 || hi == 0.0 || (lo > 0.0) != (hi > 0.0);
    if (!bad && p.epsilon != 0.0) {
        const double vertex = -p.zeta / (2.0 * p.epsilon);
        if (vertex >= p.v_min_kmh && vertex <= p.v_max_kmh) {
            const double dv = denominator(vertex, p);
            bad = dv == 0.0 || (dv > 0.0) != (lo > 0.0);
        }
    }
    if (bad)
        throw std::invalid_argument(
            "copert: denominator reaches zero on [" +
            std::to_string(p.v_min_kmh) + ", " + std::to_string(p.v_max_kmh) +
            "] km/h");
}

CopertParams default_copert() {
    CopertParams p;
    p.alpha = 0.01066;
    p.beta = -1.1623;
    p.gamma = 160.55;
    p.delta = 2000.0;
    return p;
}

double emission_factor(double v_kmh, const CopertParams& p) {
    const double v = std::clamp(v_kmh, p.v_min_kmh, p.v_max_kmh);
    const double num = p.alpha * v * v + p.beta * v + p.gamma + p.delta / v;
    return num / denominator(v, p);
}

double segment_emission(const Segment& seg, const CopertParams& p) {
    const double v_kmh = seg.v * 3.6;
    const double d_km = seg.d / 1000.0;
    return emission_factor(v_kmh, p) * d_km;
}

double ride_emission(const RideTrajectory& ride, const CopertParams& p) {
    double sum = 0.0;
    for (const auto& s : ride.segments) sum += segment_emission(s, p);
    return ride.C * sum;
}

double pool_emission(const PoolTrip& trip, const CopertParams& p) {
    double sum = 0.0;
    for (const auto& s : trip.segments) sum += segment_emission(s, p);
    return trip.C * sum;
}

}  // namespace ridesplit
