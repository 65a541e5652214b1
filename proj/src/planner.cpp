#include "edps/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edps {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    if (hi < lo) hi = lo;
    if (n < 2 || hi == lo) return {0.5 * (lo + hi)};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return out;
}

double grid_cell(const std::vector<double>& g) {
    return g.size() > 1 ? (g.back() - g.front()) / static_cast<double>(g.size() - 1) : 0.0;
}

}  // namespace

void PlannerConfig::validate() const {
    if (dt <= 0.0) throw std::invalid_argument("planner config: dt must be > 0");
    if (speed_grid_points < 2 || distance_grid_points < 1 || nd_candidates < 2)
        throw std::invalid_argument("planner config: grid/candidate counts too small");
    if (blend_w < 0.0 || blend_w > 1.0)
        throw std::invalid_argument("planner config: blend_w must be in [0, 1]");
}

int horizon_steps(double t_req, double dt) {
    if (t_req <= 0.0) throw std::invalid_argument("horizon_steps: t_req must be > 0");
    int n = static_cast<int>(std::floor(t_req / dt));
    if (n < 2) throw std::invalid_argument("horizon_steps: request too short (N < 2)");
    return n;
}

SlopeCandidates slope_candidates(const SlopeFn& slope, const std::vector<double>& distances) {
    SlopeCandidates out;
    out.slopes.reserve(distances.size());
    for (double d : distances) out.slopes.push_back(slope(d));
    if (!out.slopes.empty())
        out.mean = std::accumulate(out.slopes.begin(), out.slopes.end(), 0.0) /
                   static_cast<double>(out.slopes.size());
    return out;
}

double DpProblem::candidate_accel(int k, const DpCandidate& c, double d) const {
    (void)k;
    double delta = std::clamp(w * d / d_res, 0.0, 1.0);
    return (1.0 - delta) * c.a_p + delta * c.a_pl;
}

DpLanding DpProblem::transition(int k, double v, double d, double a) const {
    DpLanding out;
    const DpStage& next = stages[static_cast<std::size_t>(k + 1)];
    out.v = std::max(0.0, v + a * dt);
    out.d = d + v * dt;

    if (k + 1 == n) {
        if (std::abs(out.v - v_f0) > term_tol_v || std::abs(out.d - d_res) > term_tol_d)
            return out;
    } else {
        // Landings more than one cell outside the stage grid are rejected;
        // inside that margin the cost-to-go lookup clamps to the edge. A
        // singleton distance axis (reference-distance mode) carries no
        // resolution of its own, so it is not gated: distance drift is
        // handled by the beta correction and the terminal tolerance.
        double cell_v = grid_cell(next.v_grid);
        double cell_d = grid_cell(next.d_grid);
        if (out.v < next.v_grid.front() - cell_v || out.v > next.v_grid.back() + cell_v)
            return out;
        if (next.d_grid.size() > 1 &&
            (out.d < next.d_grid.front() - cell_d || out.d > next.d_grid.back() + cell_d))
            return out;

        // Distance-factor speed bounds at the landing state: beta compares
        // cumulative travelled distances, reference over actual, so a
        // trajectory running long is capped and one running short is
        // floored (Eq. 26 shape). The cap can demand more deceleration per
        // step than any admissible shape delivers (the polynomial shapes
        // start near zero braking), so it is enforced best-effort: over the
        // cap only the hardest available deceleration survives, under the
        // floor only the gentlest, and the excess is worked off over the
        // following steps instead of voiding the stage.
        const DpStage& cur = stages[static_cast<std::size_t>(k)];
        double beta = (out.d > 1e-9) ? cur.d_ref_next / out.d : beta_clamp.second;
        beta = std::clamp(beta, beta_clamp.first, beta_clamp.second);
        double slack = 0.5 * cell_v + 1e-9;
        double v_hi = std::min(cur.v_load_next, cur.v_load_next * beta);
        double v_lo = std::max(v_f0, v_f0 * beta);
        auto ku = static_cast<std::size_t>(k);
        if (out.v > v_hi + slack && a > a_min[ku] + 1e-9) return out;
        if (out.v < v_lo - slack && a < a_max[ku] - 1e-9) return out;
    }
    out.feasible = true;
    return out;
}

double DpProblem::stage_cost(int k, double v, double d, double a) const {
    (void)k;
    return regen_power(params, v, std::min(a, 0.0), slope(d)).p_rgn * dt;
}

double DpProblem::terminal_value() const {
    return regen_power(params, v_f0, 0.0, slope(d_res)).p_rgn * dt;
}

DpProblem build_dp_problem(const DecelPlanRequest& request, const VehicleParams& params,
                           const Envelope& env, const SlopeFn& slope, const PlannerConfig& cfg) {
    cfg.validate();
    params.validate();
    if (!(request.v_f0 >= 0.0 && request.v_f0 < request.v_i0))
        throw std::invalid_argument("plan request: require 0 <= v_f0 < v_i0");
    if (request.d_res <= 0.0) throw std::invalid_argument("plan request: require d_res > 0");

    DpProblem dp;
    dp.n = horizon_steps(request.t_req, cfg.dt);
    dp.dt = cfg.dt;
    dp.v_i0 = request.v_i0;
    dp.v_f0 = request.v_f0;
    dp.d_res = request.d_res;
    dp.w = cfg.blend_w;
    dp.infeasible_cost = cfg.infeasible_cost;
    dp.beta_clamp = cfg.beta_clamp;
    dp.params = params;
    dp.slope = slope;

    const int n = dp.n;
    ReferenceSpeed ref = reference_speed(request.v_i0, request.v_f0, request.d_res, n, cfg.dt);
    LoadBound load = load_adjusted_bound(params, ref.v_ref, slope, request.v_i0, cfg.dt);

    // Reference travelled distance: rectangle sums over the reference state
    // speeds (v_i0, v_1a, ...), matching the d(k+1) = d(k) + v(k) dt update
    // the transition uses.  The rectangle quadrature of that sequence ends at
    // d_res + (v_i0 - v_f0) dt / 2, so spread that residual linearly across
    // the stages to anchor d_ref at both ends (d_ref(0) = 0, d_ref(n) = d_res).
    std::vector<double> d_ref(static_cast<std::size_t>(n + 1), 0.0);
    d_ref[1] = request.v_i0 * cfg.dt;
    for (int k = 1; k < n; ++k)
        d_ref[static_cast<std::size_t>(k + 1)] = d_ref[static_cast<std::size_t>(k)] +
                                                 ref.v_ref[static_cast<std::size_t>(k - 1)] * cfg.dt;
    const double d_gap = d_ref[static_cast<std::size_t>(n)] - request.d_res;
    for (int k = 1; k <= n; ++k)
        d_ref[static_cast<std::size_t>(k)] -= d_gap * static_cast<double>(k) / n;

    dp.stages.resize(static_cast<std::size_t>(n + 1));

    // Per-stage speed bounds (beta = 1 baseline).
    std::vector<double> vlo(static_cast<std::size_t>(n + 1)), vhi(static_cast<std::size_t>(n + 1));
    vlo[0] = vhi[0] = request.v_i0;
    for (int k = 1; k < n; ++k) {
        vlo[static_cast<std::size_t>(k)] = request.v_f0;
        vhi[static_cast<std::size_t>(k)] =
            std::max(load.v_load[static_cast<std::size_t>(k)], request.v_f0);
    }
    vlo[static_cast<std::size_t>(n)] = vhi[static_cast<std::size_t>(n)] = request.v_f0;

    // Backward distance bounds anchored at d(N) = d_res.
    std::vector<double> dlo(static_cast<std::size_t>(n + 1)), dhi(static_cast<std::size_t>(n + 1));
    dlo[static_cast<std::size_t>(n)] = dhi[static_cast<std::size_t>(n)] = request.d_res;
    for (int k = n - 1; k >= 1; --k) {
        dlo[static_cast<std::size_t>(k)] = std::clamp(
            dlo[static_cast<std::size_t>(k + 1)] - vhi[static_cast<std::size_t>(k)] * cfg.dt,
            0.0, request.d_res);
        dhi[static_cast<std::size_t>(k)] = std::clamp(
            dhi[static_cast<std::size_t>(k + 1)] - vlo[static_cast<std::size_t>(k)] * cfg.dt,
            0.0, request.d_res);
    }
    dlo[0] = dhi[0] = 0.0;

    for (int k = 0; k < n; ++k) {
        DpStage& st = dp.stages[static_cast<std::size_t>(k)];
        st.v_ref = ref.v_ref[static_cast<std::size_t>(k)];
        st.v_load_next = load.v_load[static_cast<std::size_t>(std::min(k + 1, n))];
        st.d_ref_next = d_ref[static_cast<std::size_t>(k + 1)];
    }

    dp.term_tol_v = 0.25;
    dp.term_tol_d = 2.0;
    if (cfg.reference_distance_mode)
        dp.term_tol_d = std::max(dp.term_tol_d, 0.05 * request.d_res);

    // Deceleration-time candidates. Curve shapes are fixed by the event
    // endpoints (v_i0, v_f0, d_res) over the whole horizon; only the set
    // of admissible N_d varies per stage with the local mean slope.
    NdBounds nb = nd_bounds(env, request.v_i0, request.v_f0, cfg.dt);

    std::vector<DecelCurve> curves;
    const std::vector<double> remaining(d_ref.begin(), d_ref.end() - 1);
    for (int nd = nb.n_d_min; nd <= nb.n_d_max; ++nd) {
        auto curve = build_curve(request.v_i0, request.v_f0, nd, n, cfg.dt, request.d_res,
                                 cfg.blend_w, remaining);
        if (curve) curves.push_back(std::move(*curve));
    }

    for (int k = 0; k < n; ++k) {
        DpStage& st = dp.stages[static_cast<std::size_t>(k)];
        st.diag.envelope_clamped = nb.clamped;
        st.rho_bar = slope_candidates(slope, linspace(dlo[static_cast<std::size_t>(k)],
                                                      dhi[static_cast<std::size_t>(k)],
                                                      cfg.distance_grid_points))
                         .mean;
        NdInterval ni = slope_adaptive_nd(nb.n_d_min, nb.n_d_max, n, st.rho_bar);
        st.diag.nd_fallback = ni.fallback;

        auto pick = [&](int lo, int hi) {
            // Even subsample of the valid shapes inside [lo, hi].
            std::vector<const DecelCurve*> in;
            for (const DecelCurve& c : curves)
                if (c.n_d >= lo && c.n_d <= hi) in.push_back(&c);
            std::size_t m = static_cast<std::size_t>(std::max(2, cfg.nd_candidates));
            std::vector<DpCandidate> cands;
            auto add = [&](const DecelCurve& c) {
                if (!cands.empty() && cands.back().nd == c.n_d) return;
                DpCandidate dc;
                dc.nd = c.n_d;
                dc.a_p = c.scale * shape_accel(c.shape, (k + 1.0) / c.n_d);
                dc.a_pl = c.scale * shape_accel(c.shape, (n - k) / static_cast<double>(c.n_d));
                cands.push_back(dc);
            };
            if (in.size() <= m) {
                for (const DecelCurve* c : in) add(*c);
            } else {
                for (std::size_t i = 0; i < m; ++i) add(*in[i * (in.size() - 1) / (m - 1)]);
            }
            return cands;
        };

        st.candidates = pick(ni.lo, ni.hi);
        if (st.candidates.empty() && (ni.lo != nb.n_d_min || ni.hi != nb.n_d_max)) {
            st.candidates = pick(nb.n_d_min, nb.n_d_max);
            if (!st.candidates.empty()) st.diag.shape_fallback = true;
        }
        if (st.candidates.empty())
            throw InfeasiblePlan(k, "plan: no admissible deceleration shape at stage " +
                                        std::to_string(k));
    }

    // The acceleration boxes are evaluated over a distance band per stage.
    // The first pass uses the coarse corridor; the second re-evaluates them
    // over the refined grid band from the first pass, which matters because
    // the blend weight - and with it the candidate hull - shifts with
    // travelled distance.
    std::vector<double> e_lo(dlo), e_hi(dhi);
    for (int pass = 0; pass < 2; ++pass) {
        // Per-stage acceleration extremes over the candidate set. The blend
        // weight is linear in travelled distance, so each end of the stage's
        // distance band bounds the candidate hull there exactly; the union
        // over the band sizes the state grids.
        dp.a_min.assign(static_cast<std::size_t>(n), 0.0);
        dp.a_max.assign(static_cast<std::size_t>(n), 0.0);
        for (int k = 0; k < n; ++k) {
            const DpStage& st = dp.stages[static_cast<std::size_t>(k)];
            const double inf_d = std::numeric_limits<double>::infinity();
            double out_lo = inf_d, out_hi = -inf_d;
            for (double d : {e_lo[static_cast<std::size_t>(k)], e_hi[static_cast<std::size_t>(k)]}) {
                for (const DpCandidate& c : st.candidates) {
                    double a = std::min(0.0, dp.candidate_accel(k, c, d));
                    out_lo = std::min(out_lo, a);
                    out_hi = std::max(out_hi, a);
                }
            }
            dp.a_min[static_cast<std::size_t>(k)] = out_lo;
            dp.a_max[static_cast<std::size_t>(k)] = out_hi;
        }
        const std::vector<double>& a_min_out = dp.a_min;
        const std::vector<double>& a_max_out = dp.a_max;

        // Reachability bands. The grid rectangles [vlo,vhi]x[dlo,dhi] cover the
        // whole corridor, but the candidate accelerations reach only a thin tube
        // inside it; laying the grids over the intersection of the forward
        // reachable band and the backward band required to hit the terminal
        // tolerances keeps the cost-to-go interpolation honest.
        std::vector<double> fv_lo(static_cast<std::size_t>(n + 1)),
            fv_hi(static_cast<std::size_t>(n + 1)), fd_lo(static_cast<std::size_t>(n + 1)),
            fd_hi(static_cast<std::size_t>(n + 1));
        fv_lo[0] = fv_hi[0] = request.v_i0;
        fd_lo[0] = fd_hi[0] = 0.0;
        for (int k = 0; k < n; ++k) {
            auto ku = static_cast<std::size_t>(k);
            fd_lo[ku + 1] = fd_lo[ku] + fv_lo[ku] * cfg.dt;
            fd_hi[ku + 1] = fd_hi[ku] + fv_hi[ku] * cfg.dt;
            fv_lo[ku + 1] = std::max(0.0, fv_lo[ku] + a_min_out[ku] * cfg.dt);
            fv_hi[ku + 1] = std::max(0.0, fv_hi[ku] + a_max_out[ku] * cfg.dt);
        }
        std::vector<double> bv_lo(static_cast<std::size_t>(n + 1)),
            bv_hi(static_cast<std::size_t>(n + 1)), bd_lo(static_cast<std::size_t>(n + 1)),
            bd_hi(static_cast<std::size_t>(n + 1));
        bv_lo[static_cast<std::size_t>(n)] = std::max(0.0, request.v_f0 - dp.term_tol_v);
        bv_hi[static_cast<std::size_t>(n)] = request.v_f0 + dp.term_tol_v;
        bd_lo[static_cast<std::size_t>(n)] = request.d_res - dp.term_tol_d;
        bd_hi[static_cast<std::size_t>(n)] = request.d_res + dp.term_tol_d;
        for (int k = n - 1; k >= 0; --k) {
            auto ku = static_cast<std::size_t>(k);
            bv_lo[ku] = std::max(0.0, bv_lo[ku + 1] - a_max_out[ku] * cfg.dt);
            bv_hi[ku] = bv_hi[ku + 1] - a_min_out[ku] * cfg.dt;
            bd_lo[ku] = bd_lo[ku + 1] - bv_hi[ku] * cfg.dt;
            bd_hi[ku] = bd_hi[ku + 1] - bv_lo[ku] * cfg.dt;
        }

        for (int k = 0; k <= n; ++k) {
            auto ku = static_cast<std::size_t>(k);
            DpStage& st = dp.stages[ku];
            if (k == 0 || k == n) {
                st.v_grid = {vlo[ku]};
                st.d_grid = {k == 0 ? 0.0 : request.d_res};
                continue;
            }
            double glo_v = std::max({vlo[ku], fv_lo[ku], bv_lo[ku]});
            double ghi_v = std::min({vhi[ku], fv_hi[ku], bv_hi[ku]});
            double glo_d = std::max({dlo[ku], fd_lo[ku], bd_lo[ku]});
            double ghi_d = std::min({dhi[ku], fd_hi[ku], bd_hi[ku]});
            if (glo_v > ghi_v || (!cfg.reference_distance_mode && glo_d > ghi_d))
                throw InfeasiblePlan(k, "plan: reachable band is empty at stage " +
                                            std::to_string(k));
            st.v_grid = linspace(glo_v, ghi_v, cfg.speed_grid_points);
            st.d_grid = cfg.reference_distance_mode
                            ? std::vector<double>{d_ref[ku]}
                            : linspace(glo_d, ghi_d, cfg.distance_grid_points);
            e_lo[ku] = st.d_grid.front();
            e_hi[ku] = st.d_grid.back();
        }
    }

    return dp;
}

namespace {

struct DpChoice {
    int cand = -1;
    double cost = 0.0;
    DpLanding land;
};

// Backward Bellman sweep over a discretized problem, with a continuous-state
// query shared by the sweep (at grid nodes) and by the forward extraction.
class DpSolver {
  public:
    explicit DpSolver(DpProblem problem)
        : dp(std::move(problem)), inf(dp.infeasible_cost), inf_gate(1e-3 * inf) {
        for (int k = 0; k < dp.n; ++k)
            if (dp.stages[static_cast<std::size_t>(k)].candidates.empty())
                throw InfeasiblePlan(k, "plan: empty deceleration candidate set at stage " +
                                            std::to_string(k));
        value.resize(static_cast<std::size_t>(dp.n + 1));
        value[static_cast<std::size_t>(dp.n)] = {dp.terminal_value()};
        for (int k = dp.n - 1; k >= 0; --k) {
            const DpStage& st = dp.stages[static_cast<std::size_t>(k)];
            std::size_t nv = st.v_grid.size(), nd = st.d_grid.size();
            value[static_cast<std::size_t>(k)].assign(nv * nd, inf);
            for (std::size_t iv = 0; iv < nv; ++iv)
                for (std::size_t id = 0; id < nd; ++id)
                    value[static_cast<std::size_t>(k)][iv * nd + id] =
                        best(k, st.v_grid[iv], st.d_grid[id]).cost;
        }
    }

    const DpProblem& problem() const { return dp; }
    double root_value() const { return value[0][0]; }
    bool root_feasible() const { return value[0][0] < inf_gate; }
    std::vector<std::vector<double>> take_value() { return std::move(value); }

    DpChoice best(int k, double v, double d) const {
        const DpStage& st = dp.stages[static_cast<std::size_t>(k)];
        const DpStage& next = dp.stages[static_cast<std::size_t>(k + 1)];
        DpChoice bestc;
        double best_cost = inf;
        int best_nd = -1;
        double best_v = -1.0;
        for (std::size_t ci = 0; ci < st.candidates.size(); ++ci) {
            const DpCandidate& c = st.candidates[ci];
            double a = std::min(0.0, dp.candidate_accel(k, c, d));
            DpLanding land = dp.transition(k, v, d, a);
            if (!land.feasible) continue;
            // Contaminated tails (partial infeasible_cost admixture from the
            // interpolation) are not rejected here: the min() dilutes them,
            // and rejecting them would re-create the cell-per-stage erosion
            // of a hard any-corner-infeasible rule. Feasibility is judged at
            // the root against inf_gate.
            double tail = (k + 1 == dp.n)
                              ? dp.terminal_value()
                              : interp(value[static_cast<std::size_t>(k + 1)], next, land.v,
                                       land.d);
            double cost = dp.stage_cost(k, v, d, a) + tail;
            bool better = cost < best_cost - 1e-12;
            bool tie = std::abs(cost - best_cost) <= 1e-12;
            if (better ||
                (tie && (c.nd > best_nd || (c.nd == best_nd && land.v > best_v)))) {
                best_cost = cost;
                bestc = DpChoice{static_cast<int>(ci), cost, land};
                best_nd = c.nd;
                best_v = land.v;
            }
        }
        if (bestc.cand < 0) bestc.cost = inf;
        return bestc;
    }

  private:
    // Plain bilinear cost-to-go lookup with edge clamping; transition()
    // already rejected landings more than one cell outside the grid.
    // Infeasible corners carry infeasible_cost, a large finite penalty, so
    // they blend in with their weight instead of being masked: an optimistic
    // (renormalised) blend steers the extraction into the infeasible
    // boundary it papers over (harder braking always looks cheaper), while a
    // hard any-corner-infeasible rule erodes the feasible tube by a cell per
    // backward stage until nothing is left. The weighted penalty decays
    // geometrically with distance from the boundary and the tail gate in
    // best() rejects landings whose cells are meaningfully contaminated.
    double interp(const std::vector<double>& tbl, const DpStage& st, double v,
                  double d) const {
        auto locate = [](const std::vector<double>& g, double x, std::size_t& i0, double& t) {
            if (g.size() < 2) {
                i0 = 0;
                t = 0.0;
                return;
            }
            double cell = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
            double pos = std::clamp((x - g.front()) / cell, 0.0,
                                    static_cast<double>(g.size() - 1));
            i0 = std::min(static_cast<std::size_t>(pos), g.size() - 2);
            t = pos - static_cast<double>(i0);
        };
        std::size_t i0 = 0, j0 = 0;
        double tv = 0.0, td = 0.0;
        locate(st.v_grid, v, i0, tv);
        locate(st.d_grid, d, j0, td);
        std::size_t w = st.d_grid.size(), i1 = i0 + (st.v_grid.size() > 1 ? 1 : 0),
                    j1 = j0 + (st.d_grid.size() > 1 ? 1 : 0);
        const double corner_w[4] = {(1.0 - tv) * (1.0 - td), (1.0 - tv) * td,
                                    tv * (1.0 - td), tv * td};
        const double corner_v[4] = {tbl[i0 * w + j0], tbl[i0 * w + j1],
                                    tbl[i1 * w + j0], tbl[i1 * w + j1]};
        double acc = 0.0;
        for (int c = 0; c < 4; ++c) acc += corner_w[c] * std::min(corner_v[c], inf);
        return acc;
    }

    DpProblem dp;
    double inf;
    double inf_gate;
    std::vector<std::vector<double>> value;
};

}  // namespace

PlanResult plan(const DecelPlanRequest& request, const VehicleParams& params,
                const Envelope& env, const SlopeFn& slope, const PlannerConfig& cfg) {
    DpSolver solver(build_dp_problem(request, params, env, slope, cfg));
    const int n = solver.problem().n;
    const double dt = solver.problem().dt;

    if (!solver.root_feasible())
        throw InfeasiblePlan(0, "plan: no feasible trajectory reaches the target state");

    std::vector<std::vector<double>> root_value;
    if (cfg.export_cost_to_go) {
        DpSolver copy = solver;  // value tables of the original problem
        root_value = copy.take_value();
    }

    // Forward extraction with exact kinematics; the recorded energy is the
    // exact re-score of the extracted profile (the node values carry
    // interpolation error of the cost-to-go surface).
    PlanResult out;
    out.profile.dt = dt;
    out.profile.steps.reserve(static_cast<std::size_t>(n + 1));

    double v = request.v_i0, d = 0.0;
    double energy = 0.0;
    int base_k = 0;        // global stage of the current solver's stage 0
    double base_d = 0.0;   // distance travelled before the current solver's start
    for (int k = 0; k < n; ++k) {
        DpChoice ch = solver.best(k - base_k, v, d - base_d);
        if (ch.cand < 0) {
            // The cost-to-go surface is interpolated, so the extracted path
            // can drift off the feasible tube it promised. Re-anchor the
            // problem at the realised state - fresh reference line over the
            // remaining distance and time, beta correction reset - and
            // continue, exactly the per-step correction of the distance
            // factor. A state no fresh anchoring can rescue is infeasible.
            if (k - base_k == 0 || n - k < 2)
                throw InfeasiblePlan(k, "plan: forward extraction dead-ends at stage " +
                                            std::to_string(k));
            DecelPlanRequest sub;
            sub.v_i0 = v;
            sub.v_f0 = request.v_f0;
            sub.d_res = request.d_res - d;
            sub.t_req = (n - k) * dt;
            double off = d;
            SlopeFn sub_slope = [&slope, off](double x) { return slope(off + x); };
            try {
                solver = DpSolver(build_dp_problem(sub, params, env, sub_slope, cfg));
            } catch (const std::exception&) {
                throw InfeasiblePlan(k, "plan: forward extraction dead-ends at stage " +
                                            std::to_string(k));
            }
            if (!solver.root_feasible())
                throw InfeasiblePlan(k, "plan: forward extraction dead-ends at stage " +
                                            std::to_string(k));
            base_k = k;
            base_d = d;
            ch = solver.best(0, v, 0.0);
            if (ch.cand < 0)
                throw InfeasiblePlan(k, "plan: forward extraction dead-ends at stage " +
                                            std::to_string(k));
        }
        const DpStage& st = solver.problem().stages[static_cast<std::size_t>(k - base_k)];
        const DpCandidate& c = st.candidates[static_cast<std::size_t>(ch.cand)];
        double a = std::min(0.0, solver.problem().candidate_accel(k - base_k, c, d - base_d));

        ProfileStep row;
        row.k = k;
        row.t = k * dt;
        row.v = v;
        row.a = a;
        row.d = d;
        row.slope = slope(d);
        auto rr = regen_power(params, v, a, row.slope);
        row.p_rgn = rr.p_rgn;
        row.forces = rr.forces;
        row.nd = c.nd;
        out.profile.steps.push_back(row);
        out.nd_sequence.push_back(c.nd);
        out.stage_diagnostics.push_back(st.diag);
        energy += rr.p_rgn * dt;

        v = ch.land.v;
        d = base_d + ch.land.d;
    }

    ProfileStep tail;
    tail.k = n;
    tail.t = n * dt;
    tail.v = v;
    tail.a = 0.0;
    tail.d = d;
    tail.slope = slope(d);
    auto rr = regen_power(params, v, 0.0, tail.slope);
    tail.p_rgn = rr.p_rgn;
    tail.forces = rr.forces;
    out.profile.steps.push_back(tail);
    energy += rr.p_rgn * dt;
    out.total_recup_energy = energy;

    if (cfg.export_cost_to_go) out.cost_to_go = std::move(root_value);
    return out;
}

std::pair<double, std::vector<double>> evaluate_profile(const SpeedProfile& profile,
                                                        const VehicleParams& params,
                                                        const SlopeFn& slope, double tol) {
    const auto& steps = profile.steps;
    if (steps.size() < 2) throw std::invalid_argument("evaluate_profile: profile too short");
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
        double dd = steps[k + 1].d - steps[k].d;
        if (std::abs(dd - steps[k].v * profile.dt) > tol)
            throw std::invalid_argument("evaluate_profile: distance increments inconsistent with speeds");
    }
    double energy = 0.0;
    std::vector<double> powers;
    powers.reserve(steps.size());
    for (const ProfileStep& s : steps) {
        double p = regen_power(params, s.v, std::min(0.0, s.a), slope(s.d)).p_rgn;
        powers.push_back(p);
        energy += p * profile.dt;
    }
    return {energy, powers};
}

}  // namespace edps
