#include "edps/decel_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edps {

namespace {

constexpr double kMinP = -0.5;
constexpr double kPSingular = 1e-6;  // |p| below this is numerically degenerate
constexpr double kScaleLo = 0.9;
constexpr double kScaleHi = 1.1;

void check_p_domain(double p) {
    if (!(p > kMinP) || std::abs(p) < kPSingular)
        throw std::domain_error("shape exponent p must satisfy p > -0.5, p != 0");
}

}  // namespace

double phi_of_p(double p) {
    check_p_domain(p);
    return (2.0 * p * p + 15.0 * p + 19.0) / (3.0 * (p + 3.0) * (2.0 * p + 3.0));
}

std::optional<double> p_from_phi(double phi) {
    // phi*3(p+3)(2p+3) = 2p^2 + 15p + 19, cleared into a quadratic in p.
    double a = 6.0 * phi - 2.0;
    double b = 27.0 * phi - 15.0;
    double c = 27.0 * phi - 19.0;

    double best = std::numeric_limits<double>::quiet_NaN();
    auto consider = [&](double root) {
        if (!(root > kMinP) || std::abs(root) < kPSingular) return;
        if (std::isnan(best) || root > best) best = root;
    };

    if (std::abs(a) < 1e-14) {
        if (std::abs(b) > 1e-14) consider(-c / b);
    } else {
        double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return std::nullopt;
        double sq = std::sqrt(disc);
        consider((-b + sq) / (2.0 * a));
        consider((-b - sq) / (2.0 * a));
    }
    if (std::isnan(best)) return std::nullopt;
    if (std::abs(phi_of_p(best) - phi) > 1e-9) return std::nullopt;
    return best;
}

ShapeParams shape_params(double p) {
    check_p_domain(p);
    ShapeParams sp;
    sp.p = p;
    double theta_m_p = (p > 0.0) ? 1.0 / (2.0 * p + 1.0)
                                 : (-2.0 * p + 1.0) / (2.0 * p + 1.0);
    sp.theta_m = std::pow(theta_m_p, 1.0 / p);
    double one_minus = 1.0 - theta_m_p;
    sp.r = 1.0 / (sp.theta_m * one_minus * one_minus);
    sp.q = p * p / ((2.0 * p + 2.0) * (p + 2.0));
    sp.s = 1.0 / 6.0 - 2.0 / ((p + 2.0) * (p + 3.0)) + 1.0 / ((2.0 * p + 2.0) * (2.0 * p + 3.0));
    sp.phi = sp.s / sp.q;
    return sp;
}

double shape_accel(const ShapeParams& sp, double theta) {
    if (theta < 0.0 || theta > 1.0) return 0.0;
    double tp = std::pow(theta, sp.p);
    double om = 1.0 - tp;
    return sp.r * sp.alpha * theta * om * om;
}

std::optional<DecelCurve> build_curve(double v_i, double v_f, int n_d, int n_total,
                                      double dt, double d_res, double w,
                                      const std::vector<double>& remaining_d) {
    if (!(v_f >= 0.0 && v_f < v_i)) throw std::invalid_argument("require 0 <= v_f < v_i");
    if (n_d < 1 || n_total < 1) throw std::invalid_argument("require n_d >= 1, n_total >= 1");
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("require w in [0, 1]");
    if (d_res <= 0.0) throw std::invalid_argument("require d_res > 0");
    if (static_cast<int>(remaining_d.size()) != n_total)
        throw std::invalid_argument("remaining_d must have length n_total");

    double t_d = n_d * dt;
    // With n_d < n_total the profile cruises at v_f after the deceleration
    // phase, so only the remainder of d_res is covered while decelerating.
    double d_decel = d_res - v_f * (n_total - n_d) * dt;
    if (d_decel <= 0.0) return std::nullopt;
    double phi = (v_i - d_decel / t_d) / (v_i - v_f);
    auto p = p_from_phi(phi);
    if (!p) return std::nullopt;

    DecelCurve curve;
    curve.n_total = n_total;
    curve.n_d = n_d;
    curve.dt = dt;
    curve.w = w;
    curve.d_res = d_res;
    curve.shape = shape_params(*p);
    curve.shape.a_bar = (v_f - v_i) / t_d;
    curve.shape.alpha = curve.shape.a_bar / (curve.shape.r * curve.shape.q);

    const ShapeParams& sp = curve.shape;
    curve.values.resize(static_cast<std::size_t>(n_total));
    double raw_sum = 0.0;
    for (int k = 0; k < n_total; ++k) {
        double a_p = shape_accel(sp, (k + 1.0) / n_d);
        double a_pl = shape_accel(sp, (n_total - k) / static_cast<double>(n_d));
        double delta = std::clamp(w * remaining_d[static_cast<std::size_t>(k)] / d_res, 0.0, 1.0);
        double a = (1.0 - delta) * a_p + delta * a_pl;
        curve.values[static_cast<std::size_t>(k)] = a;
        raw_sum += a * dt;
    }
    if (!(raw_sum < 0.0)) return std::nullopt;

    curve.scale = (v_f - v_i) / raw_sum;
    if (curve.scale < kScaleLo || curve.scale > kScaleHi) return std::nullopt;
    for (double& a : curve.values) a *= curve.scale;
    return curve;
}

bool curve_bounds(const DecelCurve& curve_min, const DecelCurve& curve,
                  const DecelCurve& curve_max) {
    if (curve_min.n_total != curve.n_total || curve_max.n_total != curve.n_total ||
        curve_min.dt != curve.dt || curve_max.dt != curve.dt)
        throw std::invalid_argument("curve_bounds: mismatched horizon");

    constexpr double eps = 1e-9;
    for (int k = 0; k < curve.n_total; ++k) {
        auto i = static_cast<std::size_t>(k);
        double lo = std::min(curve_min.values[i], curve_max.values[i]) - eps;
        double hi = std::max(curve_min.values[i], curve_max.values[i]) + eps;
        if (curve.values[i] < lo || curve.values[i] > hi) return false;
    }
    return true;
}

}  // namespace edps
