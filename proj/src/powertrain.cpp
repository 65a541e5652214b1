#include "edps/powertrain.hpp"

#include <algorithm>
#include <cmath>

namespace edps {

double StepMap::operator()(double x) const {
    // upper_bound gives the first breakpoint strictly greater than x, so a
    // query exactly at a breakpoint picks the interval starting there.
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    if (it == breakpoints.begin()) return values.front();
    return values[static_cast<std::size_t>(std::distance(breakpoints.begin(), it)) - 1];
}

double LinearMap::operator()(double xq) const {
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    std::size_t i = static_cast<std::size_t>(std::distance(x.begin(), it));
    double t = (xq - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + t * (y[i] - y[i - 1]);
}

void VehicleParams::validate() const {
    if (effective_mass <= 0.0) throw std::invalid_argument("effective_mass must be > 0");
    if (wheel_radius <= 0.0) throw std::invalid_argument("wheel_radius must be > 0");
    if (final_drive <= 0.0) throw std::invalid_argument("final_drive must be > 0");
    if (gear_map.breakpoints.empty() || gear_map.breakpoints.size() != gear_map.values.size())
        throw std::invalid_argument("gear_map must be non-empty with matching lengths");
    for (std::size_t i = 1; i < gear_map.breakpoints.size(); ++i)
        if (gear_map.breakpoints[i] <= gear_map.breakpoints[i - 1])
            throw std::invalid_argument("gear_map breakpoints must be strictly increasing");
    for (double g : gear_map.values)
        if (g <= 0.0) throw std::invalid_argument("gear ratios must be > 0");
    if (torque_limit_map.x.empty() || torque_limit_map.x.size() != torque_limit_map.y.size())
        throw std::invalid_argument("torque_limit_map must be non-empty with matching lengths");
    for (std::size_t i = 1; i < torque_limit_map.x.size(); ++i)
        if (torque_limit_map.x[i] <= torque_limit_map.x[i - 1])
            throw std::invalid_argument("torque_limit_map breakpoints must be strictly increasing");
    for (double t : torque_limit_map.y)
        if (t > 0.0) throw std::invalid_argument("torque_limit_map values must be <= 0 (generator mode)");
}

double gear_ratio(const VehicleParams& params, double v) {
    return params.gear_map(v);
}

double motor_speed(const VehicleParams& params, double v) {
    return gear_ratio(params, v) * params.final_drive * v / (params.rpm_coeff * params.wheel_radius);
}

double regen_limit_force(const VehicleParams& params, double v) {
    double t_lmt = params.torque_limit_map(motor_speed(params, v));
    return t_lmt * gear_ratio(params, v) * params.final_drive / params.wheel_radius;
}

std::pair<double, double> road_load(const VehicleParams& params, double v, double slope) {
    double alpha = params.rolling_c0 * std::cos(slope) + params.rolling_c1 * v + params.aero_c2 * v * v;
    double beta = params.effective_mass * kGravity * std::sin(slope);
    return {alpha, beta};
}

RegenResult regen_power(const VehicleParams& params, double v, double a_d, double slope) {
    if (a_d > 0.0) throw std::invalid_argument("regen_power handles braking only (a_d <= 0)");

    RegenResult out;
    ForceBreakdown& f = out.forces;
    auto [alpha, beta] = road_load(params, v, slope);
    f.f_load_alpha = alpha;
    f.f_load_beta = beta;
    f.f_act = params.effective_mass * a_d;
    f.f_brk = f.f_load_alpha + f.f_load_beta + f.f_act;
    f.f_lmt = regen_limit_force(params, v);
    // Positive F_Brk (road load exceeds braking demand) recuperates nothing.
    f.f_rgn = std::min(0.0, std::max(f.f_brk, f.f_lmt));
    f.f_frc = std::min(0.0, f.f_brk - f.f_rgn);
    out.p_rgn = f.f_rgn * v;
    return out;
}

}  // namespace edps
