#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edps/envelope.hpp"
#include "edps/events.hpp"
#include "edps/planner.hpp"
#include "edps/powertrain.hpp"
#include "edps/route.hpp"

namespace edps {

struct SimConfig {
    double cruise_speed = 16.67;     // m/s
    double preview_distance = 200.0; // m
    double accel_rate = 1.5;         // m/s^2, post-event linear acceleration
    double dt = 0.5;                 // s, must match planner.dt
    PlannerConfig planner;
    VehicleParams vehicle;
    Envelope envelope;

    void validate() const;
};

struct TraceRow {
    double t = 0.0;      // s
    double d = 0.0;      // m
    double v = 0.0;      // m/s
    double a = 0.0;      // m/s^2
    double p_rgn = 0.0;  // W, nonzero only while executing a deceleration plan
    int light_state = -1;  // phase of the next light ahead (-1 past the last)
    int event_id = -1;     // light index while handling its event
};

struct EventRecord {
    int light_index = -1;
    double position = 0.0;       // m
    double trigger_time = 0.0;   // s
    int c_trans = 0;             // 1..4; 4 also covers no-deceleration passes
    double v_f = 0.0;            // m/s
    double planning_time = 0.0;  // s
    double energy = 0.0;         // J, realized over the executed profile
    bool planned = false;        // a deceleration profile was executed
    bool fallback = false;       // constant-deceleration emergency stop
};

struct SimResult {
    double trip_time = 0.0;           // s
    double total_recup_energy = 0.0;  // J
    std::vector<EventRecord> events;
    std::vector<TraceRow> trace;
    std::array<int, 4> transition_counts{};  // indexed by condition - 1
    double avg_decel = 0.0;  // m/s^2, mean |a| over braking steps
    double max_decel = 0.0;  // m/s^2
    int red_violations = 0;
    int fallback_count = 0;
};

/// Planning seam: the simulator hands over the request plus a route slice
/// rebased to the trigger position, and gets a full plan back. Implemented
/// in-process and over the wire.
struct PlanBackend {
    virtual ~PlanBackend() = default;
    virtual PlanResult plan(const DecelPlanRequest& request, const Route& slice) = 0;
};

struct LocalBackend final : PlanBackend {
    VehicleParams params;
    Envelope env;
    PlannerConfig cfg;

    LocalBackend(VehicleParams p, Envelope e, PlannerConfig c)
        : params(std::move(p)), env(std::move(e)), cfg(c) {}
    PlanResult plan(const DecelPlanRequest& request, const Route& slice) override;
};

/// Route samples covering [d0, d0 + span], rebased so the slice starts at 0.
Route route_slice(const Route& route, double d0, double span);

/// Closed-loop virtual drive over the route. Deterministic for a fixed
/// config; `backend` defaults to in-process planning when null.
SimResult run(const Route& route, const SimConfig& cfg, PlanBackend* backend = nullptr);

/// One run per preview distance, same config otherwise.
std::vector<SimResult> sweep(const Route& route, const SimConfig& cfg,
                             const std::vector<double>& preview_distances);

/// Trace CSV: t_s, d_m, v_mps, a_mps2, p_rgn_w, light_state, event_id.
std::string trace_csv(const SimResult& result);

}  // namespace edps
