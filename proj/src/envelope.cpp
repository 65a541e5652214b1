#include "edps/envelope.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace edps {

namespace {

constexpr double kMinSpeedGap = 2.0;  // m/s

std::array<double, 7> basis_row(double v_i, double v_f) {
    return {1.0, v_i, v_i * v_i, v_i * v_i * v_i, v_f, v_f * v_f, v_f * v_f * v_f};
}

double eval_poly(const std::array<double, 7>& c, double v_i, double v_f) {
    auto b = basis_row(v_i, v_f);
    double acc = 0.0;
    for (int i = 0; i < 7; ++i) acc += c[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    return acc;
}

double quantile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    if (x.size() == 1) return x.front();
    double pos = q * static_cast<double>(x.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= x.size()) return x.back();
    double t = pos - static_cast<double>(lo);
    return x[lo] + t * (x[lo + 1] - x[lo]);
}

}  // namespace

double Envelope::eval_min(double v_i, double v_f) const { return eval_poly(coeffs_min, v_i, v_f); }
double Envelope::eval_max(double v_i, double v_f) const { return eval_poly(coeffs_max, v_i, v_f); }

std::vector<BrakingSeries> synth_braking_data(std::uint64_t seed, const VehicleParams& params) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);

    const double v_start = 38.89;  // 140 kph
    const double dt = 0.1;
    std::vector<BrakingSeries> corpus;
    corpus.reserve(10);
    for (int j = 0; j < 10; ++j) {
        BrakingSeries s;
        s.set_id = j;
        s.bps = 30.0 * j / 9.0;
        double v = v_start;
        double t = 0.0;
        while (v > 0.0) {
            auto [alpha, beta] = road_load(params, v, 0.0);
            double a = -(alpha + beta) / params.effective_mass - 0.05 - 0.16 * s.bps;
            s.t.push_back(t);
            s.v.push_back(std::max(0.0, v + noise(rng)));
            s.a.push_back(a + noise(rng));
            v += a * dt;
            t += dt;
        }
        s.t.push_back(t);
        s.v.push_back(0.0);
        s.a.push_back(0.0);
        corpus.push_back(std::move(s));
    }
    return corpus;
}

ExtractionResult extract_observations(const std::vector<BrakingSeries>& series, double grid_step) {
    ExtractionResult out;
    for (const BrakingSeries& s : series) {
        if (s.v.size() < 2) continue;
        double v_max = *std::max_element(s.v.begin(), s.v.end());

        // First downward-crossing time for each grid level, scanning once.
        std::map<double, double, std::greater<>> cross;  // level -> time
        for (double level = grid_step * std::floor(v_max / grid_step); level > 0.0;
             level -= grid_step) {
            bool found = false;
            for (std::size_t i = 1; i < s.v.size(); ++i) {
                if (s.v[i - 1] > level && s.v[i] <= level) {
                    double f = (s.v[i - 1] - level) / (s.v[i - 1] - s.v[i]);
                    cross[level] = s.t[i - 1] + f * (s.t[i] - s.t[i - 1]);
                    found = true;
                    break;
                }
            }
            if (!found) ++out.skipped_segments;
        }

        for (auto hi = cross.begin(); hi != cross.end(); ++hi) {
            for (auto lo = std::next(hi); lo != cross.end(); ++lo) {
                if (hi->first - lo->first < kMinSpeedGap) continue;
                if (lo->second <= hi->second) {  // non-monotone, noise artifact
                    ++out.skipped_segments;
                    continue;
                }
                BrakingObservation o;
                o.v_initial = hi->first;
                o.v_final = lo->first;
                o.decel_time = lo->second - hi->second;
                o.bps = s.bps;
                o.set_id = s.set_id;
                out.observations.push_back(o);
            }
        }
    }
    return out;
}

Envelope fit_envelope(const std::vector<BrakingObservation>& obs, double quantile_band) {
    if (obs.size() < 7) throw std::runtime_error("fit_envelope: need at least 7 observations");

    // Per-cell quantile band over observed times.
    std::map<std::pair<long long, long long>, std::vector<double>> cells;
    auto key = [](double v) { return static_cast<long long>(std::llround(v * 1e6)); };
    for (const auto& o : obs) cells[{key(o.v_initial), key(o.v_final)}].push_back(o.decel_time);

    const std::size_t n = cells.size();
    if (n < 7) throw std::runtime_error("fit_envelope: need at least 7 distinct (v_i, v_f) cells");

    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 7);
    Eigen::VectorXd y_min(static_cast<Eigen::Index>(n)), y_max(static_cast<Eigen::Index>(n));
    Envelope env;
    env.vi_lo = env.vf_lo = std::numeric_limits<double>::infinity();
    env.vi_hi = env.vf_hi = -std::numeric_limits<double>::infinity();

    Eigen::Index row = 0;
    for (auto& [k, times] : cells) {
        double v_i = static_cast<double>(k.first) * 1e-6;
        double v_f = static_cast<double>(k.second) * 1e-6;
        auto b = basis_row(v_i, v_f);
        for (int c = 0; c < 7; ++c) design(row, c) = b[static_cast<std::size_t>(c)];
        y_min(row) = quantile(times, quantile_band);
        y_max(row) = quantile(times, 1.0 - quantile_band);
        env.vi_lo = std::min(env.vi_lo, v_i);
        env.vi_hi = std::max(env.vi_hi, v_i);
        env.vf_lo = std::min(env.vf_lo, v_f);
        env.vf_hi = std::max(env.vf_hi, v_f);
        ++row;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-9);
    if (qr.rank() < 7) {
        static const char* names[7] = {"1", "v_i", "v_i^2", "v_i^3", "v_f", "v_f^2", "v_f^3"};
        std::string msg = "fit_envelope: rank-deficient design matrix; deficient basis directions:";
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < 7; ++i)
            msg += std::string(" ") + names[perm(i)];
        throw std::runtime_error(msg);
    }

    Eigen::VectorXd c_min = qr.solve(y_min);
    Eigen::VectorXd c_max = qr.solve(y_max);
    for (int i = 0; i < 7; ++i) {
        env.coeffs_min[static_cast<std::size_t>(i)] = c_min(i);
        env.coeffs_max[static_cast<std::size_t>(i)] = c_max(i);
    }
    env.fit_rmse_min = std::sqrt((design * c_min - y_min).squaredNorm() / static_cast<double>(n));
    env.fit_rmse_max = std::sqrt((design * c_max - y_max).squaredNorm() / static_cast<double>(n));
    return env;
}

NdBounds nd_bounds(const Envelope& env, double v_i, double v_f, double dt) {
    NdBounds out;
    double vi = std::clamp(v_i, env.vi_lo, env.vi_hi);
    double vf = std::clamp(v_f, env.vf_lo, env.vf_hi);
    out.clamped = (vi != v_i) || (vf != v_f);

    double t_min = env.eval_min(vi, vf);
    double t_max = env.eval_max(vi, vf);
    out.n_d_min = std::max(1, static_cast<int>(std::ceil(t_min / dt)));
    out.n_d_max = std::max(1, static_cast<int>(std::floor(t_max / dt)));
    if (out.n_d_min > out.n_d_max) {
        int mid = std::max(1, static_cast<int>(std::llround(0.5 * (t_min + t_max) / dt)));
        out.n_d_min = out.n_d_max = mid;
    }
    return out;
}

std::pair<double, double> distance_surfaces(const Envelope& env, double v_i, double v_f) {
    double vi = std::clamp(v_i, env.vi_lo, env.vi_hi);
    double vf = std::clamp(v_f, env.vf_lo, env.vf_hi);
    double half_sum = 0.5 * (v_i + v_f);
    return {half_sum * env.eval_min(vi, vf), half_sum * env.eval_max(vi, vf)};
}

}  // namespace edps
