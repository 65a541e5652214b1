#include "edps/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace edps {

VehicleParams default_vehicle() {
    VehicleParams p;
    p.effective_mass = 1580.0;
    p.wheel_radius = 0.31;
    p.final_drive = 4.19;
    p.rolling_c0 = 120.0;
    p.rolling_c1 = 1.9;
    p.aero_c2 = 0.42;

    p.gear_map.breakpoints = {0.0, 5.0, 10.0, 16.0, 22.0, 30.0};
    p.gear_map.values = {4.21, 2.64, 1.80, 1.39, 1.00, 0.77};

    // Generator torque: constant -170 N*m up to base speed, then power-limited.
    p.torque_limit_map.x = {0.0, 300.0, 1500.0, 2500.0, 3500.0, 5000.0, 7000.0};
    p.torque_limit_map.y = {0.0, -170.0, -170.0, -170.0, -121.4, -85.0, -60.7};

    p.validate();
    return p;
}

Route synth_route(std::uint64_t seed, double length_m, int n_lights) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

    // Band-limited slope: a handful of long-wavelength harmonics.
    struct Harmonic {
        double wavelength, amplitude, phi;
    };
    std::vector<Harmonic> harmonics;
    for (double wavelength : {4200.0, 2300.0, 1100.0, 600.0, 260.0})
        harmonics.push_back({wavelength, 0.004 * std::sqrt(wavelength / 600.0), phase(rng)});

    Route route;
    route.total_length = length_m;
    const double step = 10.0;
    for (double d = 0.0; d <= length_m + 0.5 * step; d += step) {
        double s = 0.0;
        for (const Harmonic& h : harmonics)
            s += h.amplitude * std::sin(2.0 * M_PI * d / h.wavelength + h.phi);
        route.samples.emplace_back(std::min(d, length_m), std::clamp(s, -0.035, 0.035));
    }

    std::uniform_real_distribution<double> offset(0.0, 25.0);
    double first = 300.0;
    double spacing = (length_m - 500.0 - first) / std::max(1, n_lights - 1);
    for (int i = 0; i < n_lights; ++i) {
        TrafficLight l;
        l.position_m = first + spacing * i;
        l.green_s = 12.0;
        l.yellow_s = 3.0;
        l.red_s = 10.0;
        l.phase_offset_s = offset(rng);
        route.lights.push_back(l);
    }

    route.validate();
    return route;
}

}  // namespace edps
