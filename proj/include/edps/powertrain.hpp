#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace edps {

inline constexpr double kGravity = 9.81;       // m/s^2
inline constexpr double kRpmCoeff = 2.0 * 3.14159265358979323846 / 60.0;

/// Piecewise-constant lookup: half-open intervals [x_i, x_{i+1}),
/// rightmost value used beyond the last breakpoint.
struct StepMap {
    std::vector<double> breakpoints;  // strictly increasing
    std::vector<double> values;       // same length as breakpoints

    double operator()(double x) const;
};

/// Piecewise-linear lookup, clamped to end values outside the sampled range.
struct LinearMap {
    std::vector<double> x;  // strictly increasing
    std::vector<double> y;

    double operator()(double xq) const;
};

struct VehicleParams {
    double effective_mass = 0.0;  // kg, curb weight plus rotating inertia
    double wheel_radius = 0.0;    // m
    double final_drive = 0.0;     // dimensionless
    double rolling_c0 = 0.0;      // N
    double rolling_c1 = 0.0;      // N*s/m
    double aero_c2 = 0.0;         // N*s^2/m^2
    double rpm_coeff = kRpmCoeff; // rad/s per RPM

    StepMap gear_map;            // speed (m/s) -> gear ratio
    LinearMap torque_limit_map;  // motor speed (RPM) -> generator torque limit (N*m, <= 0)

    void validate() const;
};

struct ForceBreakdown {
    double f_brk = 0.0;        // N, total braking force
    double f_load_alpha = 0.0; // N, rolling + aero
    double f_load_beta = 0.0;  // N, grade
    double f_act = 0.0;        // N, M*a_d
    double f_lmt = 0.0;        // N, <= 0, powertrain regen limit
    double f_rgn = 0.0;        // N, <= 0, effective regenerative force
    double f_frc = 0.0;        // N, <= 0, friction residual
};

struct RegenResult {
    double p_rgn = 0.0;  // W, <= 0
    ForceBreakdown forces;
};

double gear_ratio(const VehicleParams& params, double v);

/// Motor rotation speed in RPM for road speed v.
double motor_speed(const VehicleParams& params, double v);

/// Regenerative force limit F_Lmt(v) = T_Lmt(omega(v)) * g_i(v) * g_f / r_w, <= 0.
double regen_limit_force(const VehicleParams& params, double v);

/// Road load split into (alpha, beta): alpha = C0*cos(rho) + C1*v + C2*v^2,
/// beta = M*g*sin(rho). Positive values resist forward motion.
std::pair<double, double> road_load(const VehicleParams& params, double v, double slope);

/// Regenerative power and force breakdown at speed v, deceleration a_d <= 0,
/// road slope in radians. Throws std::invalid_argument for a_d > 0.
RegenResult regen_power(const VehicleParams& params, double v, double a_d, double slope);

}  // namespace edps
