#pragma once

#include <cstdint>

#include "edps/powertrain.hpp"
#include "edps/route.hpp"

namespace edps {

/// Default mid-size electrified vehicle: 1580 kg effective mass, 6-speed
/// transmission, generator torque limited at -170 N*m with a constant-power
/// taper above base speed.
VehicleParams default_vehicle();

/// Synthetic urban route: `length_m` of band-limited slope noise (clipped to
/// [-0.22, 0.41] rad) with `n_lights` evenly spaced fixed-time signals
/// (green/yellow/red = 12/3/10 s) whose phase offsets are seeded.
Route synth_route(std::uint64_t seed, double length_m = 12400.0, int n_lights = 46);

}  // namespace edps
