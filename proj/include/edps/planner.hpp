#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "edps/constraints.hpp"
#include "edps/decel_model.hpp"
#include "edps/envelope.hpp"
#include "edps/powertrain.hpp"

namespace edps {

struct DecelPlanRequest {
    double v_i0 = 0.0;   // m/s
    double v_f0 = 0.0;   // m/s
    double d_res = 0.0;  // m
    double t_req = 0.0;  // s
};

struct PlannerConfig {
    double dt = 0.5;                // s
    int speed_grid_points = 21;
    int distance_grid_points = 61;
    int nd_candidates = 6;          // deceleration-time candidates per stage
    double blend_w = 0.5;
    std::pair<double, double> beta_clamp{0.5, 2.0};
    double infeasible_cost = 1e12;  // W, sentinel
    bool reference_distance_mode = false;  // collapse distance grids onto d_ref
    bool export_cost_to_go = false;

    void validate() const;
};

struct ProfileStep {
    int k = 0;
    double t = 0.0;      // s
    double v = 0.0;      // m/s
    double a = 0.0;      // m/s^2, 0 on the terminal row
    double d = 0.0;      // m travelled since plan start
    double slope = 0.0;  // rad
    double p_rgn = 0.0;  // W
    int nd = 0;          // chosen N_d, 0 on the terminal row
    ForceBreakdown forces;
};

struct SpeedProfile {
    double dt = 0.0;
    std::vector<ProfileStep> steps;  // n + 1 rows
};

struct StageDiag {
    bool nd_fallback = false;     // slope-adapted interval was empty
    bool shape_fallback = false;  // adapted candidates all shape-infeasible, widened
    bool envelope_clamped = false;
};

struct PlanResult {
    SpeedProfile profile;
    double total_recup_energy = 0.0;  // J, Bellman value at the initial state
    std::vector<int> nd_sequence;
    std::vector<StageDiag> stage_diagnostics;
    std::vector<std::vector<double>> cost_to_go;  // per stage, when exported
};

struct InfeasiblePlan : std::runtime_error {
    int stage;
    explicit InfeasiblePlan(int k, const std::string& what)
        : std::runtime_error(what), stage(k) {}
};

/// One deceleration-time candidate at a fixed stage: normalized shape samples
/// at that stage's index, blended by the state's distance coordinate.
struct DpCandidate {
    int nd = 0;
    double a_p = 0.0;   // scaled forward-shape sample
    double a_pl = 0.0;  // scaled reversed-shape sample
};

struct DpStage {
    std::vector<double> v_grid;  // ascending
    std::vector<double> d_grid;  // ascending
    std::vector<DpCandidate> candidates;  // empty on the terminal stage
    double v_ref = 0.0;
    double v_load_next = 0.0;  // load bound at step k+1, for landing checks
    double d_ref_next = 0.0;   // reference travelled distance at step k+1
    double rho_bar = 0.0;
    StageDiag diag;
};

struct DpLanding {
    bool feasible = false;
    double v = 0.0, d = 0.0;  // exact kinematic landing state
};

/// The discretized problem shared by the planner and by exhaustive-search
/// oracles: per-stage state grids, candidate decelerations, and the snapped
/// transition rule.
struct DpProblem {
    int n = 0;
    double dt = 0.0;
    double v_i0 = 0.0, v_f0 = 0.0, d_res = 0.0;
    double w = 0.0;
    double infeasible_cost = 0.0;
    std::pair<double, double> beta_clamp{0.5, 2.0};
    double term_tol_v = 0.0, term_tol_d = 0.0;
    std::vector<DpStage> stages;            // size n + 1
    std::vector<double> a_min, a_max;       // size n, candidate accel extremes
    VehicleParams params;
    SlopeFn slope;  // distance travelled since plan start -> slope

    /// Candidate deceleration at stage k for a state at distance d.
    double candidate_accel(int k, const DpCandidate& c, double d) const;

    /// Rectangle kinematic step (v + a*dt, d + v*dt). Landings more than one
    /// cell outside the stage-(k+1) grid, violating the beta-adjusted speed
    /// bounds, or missing the terminal tolerances are infeasible.
    DpLanding transition(int k, double v, double d, double a) const;

    /// P_Rgn(v, a, rho(d)) * dt, joules.
    double stage_cost(int k, double v, double d, double a) const;

    double terminal_value() const;
};

/// N = floor(t_req / dt). Throws std::invalid_argument when N < 2.
int horizon_steps(double t_req, double dt);

/// Slopes sampled at the given travelled distances, and their mean.
struct SlopeCandidates {
    std::vector<double> slopes;
    double mean = 0.0;
};
SlopeCandidates slope_candidates(const SlopeFn& slope, const std::vector<double>& distances);

DpProblem build_dp_problem(const DecelPlanRequest& request, const VehicleParams& params,
                           const Envelope& env, const SlopeFn& slope, const PlannerConfig& cfg);

/// Backward value recursion over the discretized problem plus forward policy
/// extraction. Throws InfeasiblePlan when no trajectory reaches the target
/// state within tolerance.
PlanResult plan(const DecelPlanRequest& request, const VehicleParams& params,
                const Envelope& env, const SlopeFn& slope, const PlannerConfig& cfg);

/// Re-score a profile with the powertrain model, independent of the DP.
/// Throws std::invalid_argument when the profile's distance increments are
/// inconsistent with its speeds beyond `tol` metres per step.
std::pair<double, std::vector<double>> evaluate_profile(const SpeedProfile& profile,
                                                        const VehicleParams& params,
                                                        const SlopeFn& slope,
                                                        double tol = 1.0);

}  // namespace edps
