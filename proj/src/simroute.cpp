#include "edps/simroute.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edps/io.hpp"

namespace edps {

namespace {

constexpr double kStopTol = 0.1;  // m/s, "stopped" threshold at the line

}  // namespace

void SimConfig::validate() const {
    if (cruise_speed <= 0.0 || preview_distance <= 0.0 || accel_rate <= 0.0 || dt <= 0.0)
        throw std::invalid_argument("sim config: cruise/preview/accel/dt must be > 0");
    if (std::abs(dt - planner.dt) > 1e-12)
        throw std::invalid_argument("sim config: dt must match the planner's dt");
    planner.validate();
    vehicle.validate();
}

PlanResult LocalBackend::plan(const DecelPlanRequest& request, const Route& slice) {
    return edps::plan(request, params, env, [&slice](double d) { return slope_at(slice, d); },
                      cfg);
}

Route route_slice(const Route& route, double d0, double span) {
    Route slice;
    slice.total_length = span;
    for (const auto& [d, s] : route.samples)
        if (d >= d0 - 10.0 && d <= d0 + span + 10.0)
            slice.samples.emplace_back(d - d0, s);
    if (slice.samples.empty() || slice.samples.front().first > 0.0)
        slice.samples.insert(slice.samples.begin(), {0.0, slope_at(route, d0)});
    return slice;
}

SimResult run(const Route& route, const SimConfig& cfg, PlanBackend* backend) {
    cfg.validate();
    route.validate();

    LocalBackend local(cfg.vehicle, cfg.envelope, cfg.planner);
    PlanBackend& planner = backend ? *backend : local;

    SimResult res;
    double t = 0.0, d = 0.0, v = 0.0;
    std::size_t next_light = 0;
    std::vector<bool> handled(route.lights.size(), false);
    double decel_sum = 0.0;
    int decel_steps = 0;

    auto light_state = [&](double pos) -> int {
        for (const TrafficLight& l : route.lights)
            if (l.position_m >= pos - 1e-9)
                return static_cast<int>(spat_at(l, t).phase);
        return -1;
    };
    auto record = [&](double a, double p_rgn, int event_id) {
        res.trace.push_back({t, d, v, a, p_rgn, light_state(d), event_id});
        if (a < -1e-9) {
            decel_sum += -a;
            ++decel_steps;
            res.max_decel = std::max(res.max_decel, -a);
        }
    };
    auto wait_for_green = [&](const TrafficLight& light, int event_id) {
        v = 0.0;
        while (spat_at(light, t).phase != Phase::green) {
            record(0.0, 0.0, event_id);
            t += cfg.dt;
        }
    };
    auto cruise_step = [&]() {
        // One driving step toward cruise speed; stops at a red line instead
        // of running it (safety net, counted as a fallback).
        double a = (v < cfg.cruise_speed - 1e-9)
                       ? std::min(cfg.accel_rate, (cfg.cruise_speed - v) / cfg.dt)
                       : 0.0;
        double d_next = d + v * cfg.dt;
        if (next_light < route.lights.size()) {
            const TrafficLight& l = route.lights[next_light];
            if (d < l.position_m && d_next >= l.position_m && v > kStopTol) {
                double t_cross = t + (l.position_m - d) / v;
                if (spat_at(l, t_cross).phase == Phase::red) {
                    ++res.fallback_count;
                    d = l.position_m;
                    wait_for_green(l, static_cast<int>(next_light));
                    return;
                }
            }
        }
        record(a, 0.0, -1);
        d = d_next;
        v = std::min(cfg.cruise_speed, std::max(0.0, v + a * cfg.dt));
        t += cfg.dt;
    };

    const double max_steps_guard = 16.0 * (route.total_length / cfg.cruise_speed / cfg.dt + 4000);

    while (d < route.total_length) {
        if (res.trace.size() > max_steps_guard)
            throw std::runtime_error("simulation failed to terminate");

        while (next_light < route.lights.size() &&
               route.lights[next_light].position_m <= d + 1e-9)
            ++next_light;

        bool trigger = next_light < route.lights.size() && !handled[next_light] &&
                       route.lights[next_light].position_m - d < cfg.preview_distance &&
                       v > kStopTol;
        if (!trigger) {
            cruise_step();
            continue;
        }

        const TrafficLight& light = route.lights[next_light];
        const int event_id = static_cast<int>(next_light);
        const double gap = light.position_m - d;
        handled[next_light] = true;

        EventRecord ev;
        ev.light_index = event_id;
        ev.position = light.position_m;
        ev.trigger_time = t;

        SpatState spat = spat_at(light, t);
        TargetCandidates cands = target_candidates(cfg.envelope, v, gap);

        bool executed = false;
        if (cands.v_f.empty()) {
            ev.c_trans = 4;  // no deceleration is feasible over this gap
        } else {
            EventDecision decision = decide(spat, cands, v);
            ev.c_trans = decision.c_trans;
            ev.v_f = decision.v_f;
            ev.planning_time = decision.planning_time;
            if (decision.c_trans != 4) {
                // The decision's planning time is the green onset: the
                // earliest legal arrival. The shortest reference-feasible
                // horizon (first reference speed v_1a <= v) may be longer;
                // any arrival inside the green window is acceptable.
                std::vector<double> vfs{decision.v_f};
                for (double vf : cands.v_f)
                    if (vf != decision.v_f) vfs.push_back(vf);

                // When the nearest green window is kinematically out of
                // reach, the next cycle's window is the earliest legal
                // arrival; scan a couple of cycles ahead.
                for (int win = 0; win < 3 && !executed; ++win) {
                    double t_on = decision.planning_time + win * light.cycle();
                    double t_end = t_on + spat.t_green;
                    for (double vf : vfs) {
                        int n_on = static_cast<int>(std::ceil(t_on / cfg.dt - 1e-9));
                        int n_feas = static_cast<int>(
                            std::ceil((2.0 * gap / cfg.dt - (v - vf)) / (v + vf) - 1e-9));
                        int n_lo = std::max({2, n_on, n_feas});
                        int n_hi = static_cast<int>(std::floor((t_end - cfg.dt) / cfg.dt + 1e-9));
                        if (vf > kStopTol) {
                            // Beyond this the reference dips under v_f.
                            int n_slow = static_cast<int>(
                                std::floor((2.0 * gap / cfg.dt - v + vf) / (2.0 * vf) + 1e-9));
                            n_hi = std::min(n_hi, n_slow);
                        }
                        for (int n = n_lo; n <= std::min(n_hi, n_lo + 8); n += 2) {
                            DecelPlanRequest req{v, vf, gap, n * cfg.dt + 1e-9};
                            try {
                                Route slice = route_slice(route, d, gap);
                                PlanResult plan = planner.plan(req, slice);
                                ev.planned = true;
                                ev.v_f = vf;
                                ev.energy = plan.total_recup_energy;
                                for (std::size_t k = 0; k + 1 < plan.profile.steps.size(); ++k) {
                                    const ProfileStep& s = plan.profile.steps[k];
                                    v = s.v;
                                    record(s.a, s.p_rgn, event_id);
                                    d += v * cfg.dt;
                                    t += cfg.dt;
                                }
                                v = plan.profile.steps.back().v;
                                executed = true;
                                break;
                            } catch (const InfeasiblePlan&) {
                                continue;  // try a longer horizon
                            }
                        }
                        if (executed) break;
                    }
                }

                if (!executed) {
                    // No plannable horizon: pass at speed when the cruise
                    // arrival lands in green, otherwise brake to the line.
                    double t_arr = gap / std::max(v, kStopTol);
                    if (phase_after(spat, t_arr) == Phase::green) {
                        ev.c_trans = 4;
                    } else {
                        ev.fallback = true;
                        ++res.fallback_count;
                        double a_stop = -v * v / (2.0 * gap);
                        while (v > kStopTol) {
                            record(a_stop, 0.0, event_id);
                            d += v * cfg.dt;
                            v = std::max(0.0, v + a_stop * cfg.dt);
                            t += cfg.dt;
                        }
                        executed = true;
                    }
                }
            }
        }

        if (executed) {
            // At the line: wait out a red when stopped, otherwise flag any
            // moving crossing during red.
            if (v <= kStopTol)
                wait_for_green(light, event_id);
            else if (spat_at(light, t).phase == Phase::red)
                ++res.red_violations;
            res.total_recup_energy += ev.energy;
        }

        if (ev.c_trans >= 1 && ev.c_trans <= 4)
            ++res.transition_counts[static_cast<std::size_t>(ev.c_trans - 1)];
        res.events.push_back(ev);
    }

    res.trip_time = t;
    res.avg_decel = decel_steps > 0 ? decel_sum / decel_steps : 0.0;
    return res;
}

std::vector<SimResult> sweep(const Route& route, const SimConfig& cfg,
                             const std::vector<double>& preview_distances) {
    if (preview_distances.empty())
        throw std::invalid_argument("sweep: need at least one preview distance");
    std::vector<SimResult> out;
    out.reserve(preview_distances.size());
    for (double p : preview_distances) {
        SimConfig c = cfg;
        c.preview_distance = p;
        out.push_back(run(route, c));
    }
    return out;
}

std::string trace_csv(const SimResult& result) {
    std::ostringstream out;
    out << "t_s,d_m,v_mps,a_mps2,p_rgn_w,light_state,event_id\n";
    for (const TraceRow& r : result.trace)
        out << fmt_num(r.t) << ',' << fmt_num(r.d) << ',' << fmt_num(r.v) << ','
            << fmt_num(r.a) << ',' << fmt_num(r.p_rgn) << ',' << r.light_state << ','
            << r.event_id << '\n';
    return out.str();
}

}  // namespace edps
