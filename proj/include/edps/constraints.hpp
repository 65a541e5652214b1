#pragma once

#include <functional>
#include <vector>

#include "edps/powertrain.hpp"

namespace edps {

struct StageBounds {
    int k = 0;
    double v_lo = 0.0;    // m/s
    double v_hi = 0.0;    // m/s
    double d_lo = 0.0;    // m
    double d_hi = 0.0;    // m
    double v_load = 0.0;  // m/s
    double v_ref = 0.0;   // m/s
    double d_ref = 0.0;   // m
    double beta = 1.0;
    double rho_bar = 0.0;  // rad
    bool degenerate = false;  // interval collapsed and recovered at midpoint
};

struct ReferenceSpeed {
    std::vector<double> v_ref;  // length n, affine from v_1a down to v_f0
    double v_1a = 0.0;
};

struct LoadBound {
    std::vector<double> v_load;  // length n + 1, v_load[0] = v_i0
    bool route_clamped = false;  // slope lookup ran past the route slice
};

struct NdInterval {
    int lo = 0;
    int hi = 0;
    bool fallback = false;  // slope-adapted interval was empty
};

using SlopeFn = std::function<double(double)>;  // distance (m) -> slope (rad)

/// Affine reference speed line through (v_1a, v_f0), adjusted so the
/// rectangle sum approximates d_res. Throws std::invalid_argument when the
/// remaining distance is too short for any decreasing line (v_1a < v_f0).
ReferenceSpeed reference_speed(double v_i0, double v_f0, double d_res, int n, double dt);

/// Upper speed bound sequence driven by the road load along the reference
/// trajectory: v_load(k+1) = v_load(k) - F_Load(v_ref(k), rho_ref(k))/M * dt.
LoadBound load_adjusted_bound(const VehicleParams& params, const std::vector<double>& v_ref,
                              const SlopeFn& slope, double v_i0, double dt);

/// Distance-factor-adjusted bounds for one stage. d_next is the trajectory's
/// remaining-distance coordinate at step k+1; beta = d_ref_next / d_next,
/// clamped to beta_clamp before use.
StageBounds stage_bounds(double v_ref_k, double v_load_next, double d_ref_next, double d_next,
                         int k, double v_f0, double dt,
                         std::pair<double, double> beta_clamp = {0.5, 2.0});

/// Slope-adaptive deceleration-time interval: [max(n, nd_min), nd_max] when
/// the mean slope is uphill (rho_bar >= 0), [nd_min, min(n, nd_max)] when
/// downhill. An empty intersection falls back to [nd_min, nd_max], flagged.
NdInterval slope_adaptive_nd(int nd_min, int nd_max, int n, double rho_bar);

}  // namespace edps
