#pragma once

#include <vector>

#include "edps/envelope.hpp"
#include "edps/route.hpp"

namespace edps {

enum class Phase : int { red = 0, green = 1, yellow = 2 };

/// Signal phase and timing at one instant.
struct SpatState {
    Phase phase = Phase::red;
    double t_cur = 0.0;     // s, remaining duration of the current phase
    double t_red = 0.0;     // s
    double t_yellow = 0.0;  // s
    double t_green = 0.0;   // s
    double anchor = 0.0;    // s, absolute time the current phase started

    void validate() const;
};

struct TargetCandidates {
    std::vector<double> v_f;  // m/s
    std::vector<double> s_d;  // m, matched deceleration distances
    std::vector<double> t_d;  // s, matched deceleration times
};

struct EventDecision {
    int c_trans = 0;              // 1..4
    double v_f = 0.0;             // m/s
    double planning_time = 0.0;   // s
    TargetCandidates candidates;  // the sets the decision was taken over
};

/// SPaT at absolute time t for a fixed-time signal. Cycle layout:
/// green [0, g), yellow [g, g+y), red [g+y, g+y+r); cycle position is
/// (t + phase_offset) mod cycle.
SpatState spat_at(const TrafficLight& light, double t);

/// Phase occupied tau seconds after `spat`, advancing through the cycle
/// red -> green -> yellow -> red with the stated durations.
Phase phase_after(const SpatState& spat, double tau);

/// Candidate (v_f, S_d, T_d) triples whose deceleration distance lies closest
/// to d_res, scanned over a fixed target-speed grid inside the envelope
/// domain. Candidates within `tol` of the best residual are kept, at most
/// max_n of them. An empty result means no deceleration is feasible for this
/// residual distance.
TargetCandidates target_candidates(const Envelope& env, double v_i, double d_res,
                                   double tol = 0.5, int max_n = 5,
                                   double grid_step = 0.5);

/// One transition condition (1..4) per deceleration-time candidate, from the
/// phase the light occupies when that candidate completes.
std::vector<int> classify_transition(const SpatState& spat, const std::vector<double>& t_d_cand);

/// Median condition vote plus the target-speed / planning-time table lookup.
/// Condition 4 keeps v_f = v_i (no deceleration). Throws std::logic_error on
/// a (condition, phase) pair with no table row.
EventDecision decide(const SpatState& spat, const TargetCandidates& candidates, double v_i);

}  // namespace edps
