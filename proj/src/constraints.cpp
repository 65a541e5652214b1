#include "edps/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edps {

ReferenceSpeed reference_speed(double v_i0, double v_f0, double d_res, int n, double dt) {
    if (n < 2) throw std::invalid_argument("reference_speed: need n >= 2");
    if (d_res <= 0.0) throw std::invalid_argument("reference_speed: need d_res > 0");

    ReferenceSpeed out;
    out.v_1a = (2.0 * d_res - (v_i0 + v_f0 * (n - 1)) * dt) / (n * dt);
    if (out.v_1a < v_f0)
        throw std::invalid_argument("reference_speed: remaining distance too short for a decreasing line");

    out.v_ref.resize(static_cast<std::size_t>(n));
    double incr = (v_f0 - out.v_1a) / (n - 1);
    for (int k = 0; k < n; ++k)
        out.v_ref[static_cast<std::size_t>(k)] = out.v_1a + incr * k;
    return out;
}

LoadBound load_adjusted_bound(const VehicleParams& params, const std::vector<double>& v_ref,
                              const SlopeFn& slope, double v_i0, double dt) {
    LoadBound out;
    out.v_load.resize(v_ref.size() + 1);
    out.v_load[0] = v_i0;
    double dist = 0.0;
    for (std::size_t k = 0; k < v_ref.size(); ++k) {
        dist += dt * v_ref[k];
        double rho = slope(dist);
        auto [alpha, beta] = road_load(params, v_ref[k], rho);
        out.v_load[k + 1] = out.v_load[k] - (alpha + beta) / params.effective_mass * dt;
    }
    return out;
}

StageBounds stage_bounds(double v_ref_k, double v_load_next, double d_ref_next, double d_next,
                         int k, double v_f0, double dt, std::pair<double, double> beta_clamp) {
    if (d_next <= 0.0) throw std::invalid_argument("stage_bounds: need d_next > 0");

    StageBounds b;
    b.k = k;
    b.v_ref = v_ref_k;
    b.v_load = v_load_next;
    b.d_ref = d_ref_next;
    double beta_raw = d_ref_next / d_next;
    b.beta = std::clamp(beta_raw, beta_clamp.first, beta_clamp.second);

    b.v_lo = std::max(v_f0, v_f0 * b.beta);
    b.v_hi = std::min(v_load_next, v_load_next * b.beta);
    if (b.v_lo > b.v_hi) {
        double mid = 0.5 * (b.v_lo + b.v_hi);
        b.v_lo = b.v_hi = mid;
        b.degenerate = true;
    }
    // One backward distance update from d_next: faster speeds leave less
    // distance behind them.
    b.d_lo = std::max(0.0, d_next - b.v_hi * dt);
    b.d_hi = std::max(0.0, d_next - b.v_lo * dt);
    return b;
}

NdInterval slope_adaptive_nd(int nd_min, int nd_max, int n, double rho_bar) {
    if (nd_min > nd_max) throw std::invalid_argument("slope_adaptive_nd: need nd_min <= nd_max");

    NdInterval out;
    if (rho_bar >= 0.0) {
        out.lo = std::max(n, nd_min);
        out.hi = nd_max;
    } else {
        out.lo = nd_min;
        out.hi = std::min(n, nd_max);
    }
    out.lo = std::max(out.lo, 1);
    if (out.lo > out.hi) {
        out.lo = nd_min;
        out.hi = nd_max;
        out.fallback = true;
    }
    return out;
}

}  // namespace edps
