#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edps/powertrain.hpp"

namespace edps {

struct BrakingObservation {
    double v_initial = 0.0;  // m/s
    double v_final = 0.0;    // m/s
    double decel_time = 0.0; // s
    double bps = 0.0;        // brake pedal scale, percent
    int set_id = 0;
};

/// One time-ordered braking maneuver record.
struct BrakingSeries {
    int set_id = 0;
    double bps = 0.0;
    std::vector<double> t;  // s
    std::vector<double> v;  // m/s
    std::vector<double> a;  // m/s^2
};

struct Envelope {
    std::array<double, 7> coeffs_min{};  // basis {1, vi, vi^2, vi^3, vf, vf^2, vf^3}
    std::array<double, 7> coeffs_max{};
    double fit_rmse_min = 0.0;  // s
    double fit_rmse_max = 0.0;  // s
    double vi_lo = 0.0, vi_hi = 0.0;  // training domain
    double vf_lo = 0.0, vf_hi = 0.0;

    double eval_min(double v_i, double v_f) const;
    double eval_max(double v_i, double v_f) const;
};

struct ExtractionResult {
    std::vector<BrakingObservation> observations;
    int skipped_segments = 0;  // non-monotone segments dropped
};

struct NdBounds {
    int n_d_min = 0;
    int n_d_max = 0;
    bool clamped = false;  // query fell outside the envelope domain
};

/// Deterministic synthetic braking corpus: 10 series from 38.89 m/s to rest,
/// BPS levels spread over [0, 30] percent, with measurement noise.
std::vector<BrakingSeries> synth_braking_data(std::uint64_t seed, const VehicleParams& params);

/// Emit (v_initial, v_final, elapsed time) observations on a speed grid with
/// spacing grid_step and speed gap >= 2 m/s, using first downward crossings.
ExtractionResult extract_observations(const std::vector<BrakingSeries>& series,
                                      double grid_step = 2.0);

/// Least-squares fit of the min/max deceleration-time surfaces. The lower
/// surface fits the quantile_band quantile of observed times per (vi, vf)
/// cell and the upper surface the 1 - quantile_band quantile.
/// Throws std::runtime_error naming the deficient basis directions when the
/// design matrix is rank-deficient.
Envelope fit_envelope(const std::vector<BrakingObservation>& obs, double quantile_band = 0.05);

/// Deceleration-time step bounds at (v_i, v_f); queries outside the training
/// domain are clamped to its edge and flagged.
NdBounds nd_bounds(const Envelope& env, double v_i, double v_f, double dt);

/// Trapezoidal distance bounds S_d = (v_i + v_f)/2 * N_d.
std::pair<double, double> distance_surfaces(const Envelope& env, double v_i, double v_f);

}  // namespace edps
