#include "edps/route.hpp"

#include <algorithm>
#include <cmath>

namespace edps {

void Route::validate() const {
    if (samples.empty()) throw std::invalid_argument("route: no slope samples");
    if (samples.front().first != 0.0) throw std::invalid_argument("route: first sample must be at 0");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].first <= samples[i - 1].first)
            throw std::invalid_argument("route: distances must be strictly increasing");
    for (const auto& [d, s] : samples)
        if (std::abs(s) > 0.5) throw std::invalid_argument("route: slope outside sanity band");
    if (total_length < samples.back().first)
        throw std::invalid_argument("route: total_length shorter than samples");
    for (std::size_t i = 1; i < lights.size(); ++i)
        if (lights[i].position_m < lights[i - 1].position_m)
            throw std::invalid_argument("route: lights must be sorted by position");
}

double slope_at(const Route& route, double d) {
    const auto& s = route.samples;
    if (d <= s.front().first) return s.front().second;
    if (d >= s.back().first) return s.back().second;
    auto it = std::upper_bound(s.begin(), s.end(), d,
                               [](double x, const auto& p) { return x < p.first; });
    std::size_t i = static_cast<std::size_t>(std::distance(s.begin(), it));
    double t = (d - s[i - 1].first) / (s[i].first - s[i - 1].first);
    return s[i - 1].second + t * (s[i].second - s[i - 1].second);
}

}  // namespace edps
