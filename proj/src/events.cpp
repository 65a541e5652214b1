#include "edps/events.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace edps {

namespace {

double phase_duration(const SpatState& s, Phase p) {
    switch (p) {
        case Phase::red: return s.t_red;
        case Phase::green: return s.t_green;
        case Phase::yellow: return s.t_yellow;
    }
    return 0.0;
}

Phase next_phase(Phase p) {
    switch (p) {
        case Phase::red: return Phase::green;
        case Phase::green: return Phase::yellow;
        case Phase::yellow: return Phase::red;
    }
    return Phase::red;
}

}  // namespace

void SpatState::validate() const {
    if (t_red <= 0.0 || t_yellow <= 0.0 || t_green <= 0.0)
        throw std::invalid_argument("spat: phase durations must be > 0");
    if (t_cur < 0.0 || t_cur > phase_duration(*this, phase) + 1e-9)
        throw std::invalid_argument("spat: t_cur exceeds the current phase duration");
}

SpatState spat_at(const TrafficLight& light, double t) {
    SpatState s;
    s.t_green = light.green_s;
    s.t_yellow = light.yellow_s;
    s.t_red = light.red_s;

    double cycle = light.cycle();
    double pos = std::fmod(t + light.phase_offset_s, cycle);
    if (pos < 0.0) pos += cycle;

    if (pos < light.green_s) {
        s.phase = Phase::green;
        s.t_cur = light.green_s - pos;
        s.anchor = t - pos;
    } else if (pos < light.green_s + light.yellow_s) {
        s.phase = Phase::yellow;
        s.t_cur = light.green_s + light.yellow_s - pos;
        s.anchor = t - (pos - light.green_s);
    } else {
        s.phase = Phase::red;
        s.t_cur = cycle - pos;
        s.anchor = t - (pos - light.green_s - light.yellow_s);
    }
    return s;
}

Phase phase_after(const SpatState& spat, double tau) {
    if (tau < 0.0) throw std::invalid_argument("phase_after: tau must be >= 0");
    Phase p = spat.phase;
    double remaining = spat.t_cur;
    while (tau >= remaining) {
        tau -= remaining;
        p = next_phase(p);
        remaining = phase_duration(spat, p);
    }
    return p;
}

TargetCandidates target_candidates(const Envelope& env, double v_i, double d_res,
                                   double tol, int max_n, double grid_step) {
    if (d_res <= 0.0) throw std::invalid_argument("target_candidates: d_res must be > 0");
    if (max_n < 1 || grid_step <= 0.0 || tol < 0.0)
        throw std::invalid_argument("target_candidates: bad tolerance/grid arguments");

    struct Entry {
        double v_f, s_d, t_d, residual;
    };
    std::vector<Entry> entries;

    double vf_top = std::min(env.vf_hi, v_i);
    for (double v_f = std::max(0.0, env.vf_lo); v_f < vf_top - 1e-9; v_f += grid_step) {
        double t_lo = env.eval_min(v_i, v_f);
        double t_hi = env.eval_max(v_i, v_f);
        if (t_hi <= 0.0 || t_hi < t_lo) continue;
        t_lo = std::max(t_lo, 0.0);

        double v_avg = 0.5 * (v_i + v_f);
        // S_d(t) = v_avg * t is monotone: the closest band point is the clamp.
        double t_star = std::clamp(d_res / v_avg, t_lo, t_hi);
        entries.push_back({v_f, v_avg * t_star, t_star, std::abs(d_res - v_avg * t_star)});
    }
    if (entries.empty()) return {};

    double best = std::min_element(entries.begin(), entries.end(),
                                   [](const Entry& a, const Entry& b) {
                                       return a.residual < b.residual;
                                   })
                      ->residual;
    std::erase_if(entries, [&](const Entry& e) { return e.residual > best + tol; });
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.residual < b.residual; });
    if (static_cast<int>(entries.size()) > max_n) {
        // Ties are common (the band covers d_res exactly for many targets);
        // keep a spread over the target-speed range rather than one corner.
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Entry& a, const Entry& b) { return a.v_f < b.v_f; });
        std::vector<Entry> kept;
        auto m = static_cast<std::size_t>(max_n);
        for (std::size_t i = 0; i < m; ++i)
            kept.push_back(entries[i * (entries.size() - 1) / (m - 1)]);
        entries = std::move(kept);
    }

    TargetCandidates out;
    for (const Entry& e : entries) {
        out.v_f.push_back(e.v_f);
        out.s_d.push_back(e.s_d);
        out.t_d.push_back(e.t_d);
    }
    return out;
}

std::vector<int> classify_transition(const SpatState& spat, const std::vector<double>& t_d_cand) {
    if (t_d_cand.empty())
        throw std::invalid_argument("classify_transition: empty candidate set");
    spat.validate();

    std::vector<int> out;
    out.reserve(t_d_cand.size());
    for (double tau : t_d_cand) {
        Phase arrival = phase_after(spat, tau);
        int c = 0;
        switch (spat.phase) {
            case Phase::red:
            case Phase::yellow:
                c = (arrival == Phase::green) ? 1 : 2;
                break;
            case Phase::green:
                // Completing inside the current green window passes freely;
                // anything that spills past it plans for the upcoming red.
                c = (tau <= spat.t_cur) ? 4 : 3;
                break;
        }
        out.push_back(c);
    }
    return out;
}

EventDecision decide(const SpatState& spat, const TargetCandidates& candidates, double v_i) {
    if (candidates.v_f.size() != candidates.t_d.size() ||
        candidates.v_f.size() != candidates.s_d.size())
        throw std::invalid_argument("decide: candidate set lengths differ");

    std::vector<int> conds = classify_transition(spat, candidates.t_d);
    std::vector<int> sorted = conds;
    std::sort(sorted.begin(), sorted.end());
    std::size_t m = sorted.size();
    double median = (m % 2 == 1)
                        ? sorted[m / 2]
                        : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    int c = static_cast<int>(std::nearbyint(median));  // round half to even

    EventDecision out;
    out.c_trans = c;
    out.candidates = candidates;

    auto vmax = *std::max_element(candidates.v_f.begin(), candidates.v_f.end());
    auto vmin = *std::min_element(candidates.v_f.begin(), candidates.v_f.end());

    switch (spat.phase) {
        case Phase::red:
            if (c == 1) { out.v_f = vmax; out.planning_time = spat.t_cur; return out; }
            if (c == 2) { out.v_f = vmin; out.planning_time = spat.t_cur; return out; }
            break;
        case Phase::yellow:
            if (c == 1) { out.v_f = vmax; out.planning_time = spat.t_cur + spat.t_red; return out; }
            if (c == 2) { out.v_f = vmin; out.planning_time = spat.t_cur + spat.t_red; return out; }
            break;
        case Phase::green:
            if (c == 3) {
                out.v_f = vmin;
                out.planning_time = spat.t_cur + spat.t_yellow + spat.t_red;
                return out;
            }
            if (c == 4) { out.v_f = v_i; out.planning_time = spat.t_cur + spat.t_yellow; return out; }
            break;
    }
    throw std::logic_error("decide: no transition-table row for condition " + std::to_string(c));
}

}  // namespace edps
