#pragma once

#include <optional>
#include <vector>

namespace edps {

/// Parameters of the polynomial deceleration shape a(theta) = r*alpha*theta*(1-theta^p)^2.
struct ShapeParams {
    double p = 0.0;        // exponent, > -0.5
    double r = 0.0;        // peak normalizer, 1/(theta_m*(1-theta_m^p)^2)
    double q = 0.0;        // average ratio, p^2/((2p+2)(p+2))
    double s = 0.0;        // distance ratio
    double phi = 0.0;      // s/q, average-speed ratio
    double theta_m = 0.0;  // peak location in (0, 1)
    double alpha = 0.0;    // m/s^2, peak deceleration (filled by build_curve)
    double a_bar = 0.0;    // m/s^2, average deceleration (filled by build_curve)
};

/// A sampled deceleration candidate over the full planning horizon.
struct DecelCurve {
    int n_total = 0;   // N, planning horizon in steps
    int n_d = 0;       // N_d, deceleration time in steps
    double dt = 0.0;   // s
    double w = 0.0;    // blend calibration in [0, 1]
    double d_res = 0.0;
    double scale = 1.0;  // normalization scalar, in [0.9, 1.1]
    ShapeParams shape;
    std::vector<double> values;  // a~_d(k), m/s^2, length n_total, all <= 0
};

/// phi(p) = (2p^2 + 15p + 19) / (3(p+3)(2p+3)). Requires p > -0.5, p != 0.
double phi_of_p(double p);

/// Inverse of phi_of_p via the closed-form quadratic; the root in (-0.5, inf)
/// is taken, preferring the positive one. Returns nullopt when phi is outside
/// the achievable range.
std::optional<double> p_from_phi(double phi);

/// theta_m, r, q, s, phi for a given exponent. Requires p > -0.5, p != 0.
ShapeParams shape_params(double p);

/// r*alpha*theta*(1 - theta^p)^2 for theta in [0, 1], zero outside.
double shape_accel(const ShapeParams& sp, double theta);

/// Sample the blended deceleration model over n_total steps. remaining_d[k] is
/// the distance travelled by step k used for the blend ratio. Values are
/// rescaled by a single scalar so that sum(values)*dt == v_f - v_i exactly;
/// curves whose scalar falls outside [0.9, 1.1], or whose implied phi is
/// infeasible, yield nullopt.
std::optional<DecelCurve> build_curve(double v_i, double v_f, int n_d, int n_total,
                                      double dt, double d_res, double w,
                                      const std::vector<double>& remaining_d);

/// True iff `curve` lies pointwise between the envelope curves built from
/// N_d,min and N_d,max. Throws std::invalid_argument on mismatched horizons.
bool curve_bounds(const DecelCurve& curve_min, const DecelCurve& curve,
                  const DecelCurve& curve_max);

}  // namespace edps
