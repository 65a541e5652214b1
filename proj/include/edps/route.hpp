#pragma once

#include <stdexcept>
#include <vector>

namespace edps {

struct TrafficLight {
    double position_m = 0.0;
    double green_s = 0.0;
    double yellow_s = 0.0;
    double red_s = 0.0;
    double phase_offset_s = 0.0;

    double cycle() const { return green_s + yellow_s + red_s; }
};

struct Route {
    // (distance_m, slope_rad), strictly increasing in distance, first sample at 0.
    std::vector<std::pair<double, double>> samples;
    double total_length = 0.0;
    std::vector<TrafficLight> lights;  // sorted by position

    void validate() const;
};

/// Linear interpolation of slope at distance d, clamped to the sampled range.
double slope_at(const Route& route, double d);

}  // namespace edps
