#pragma once

#include <string>
#include <vector>

#include "edps/envelope.hpp"
#include "edps/planner.hpp"
#include "edps/powertrain.hpp"
#include "edps/route.hpp"

#include <json.hpp>

namespace edps {

/// 9-significant-digit numeric formatting, used for every file we emit so
/// CSVs stay diff-stable across platforms.
std::string fmt_num(double x);

/// Vehicle parameter JSON. Unknown fields are rejected.
VehicleParams load_vehicle(const std::string& path);
nlohmann::json vehicle_to_json(const VehicleParams& params);
VehicleParams vehicle_from_json(const nlohmann::json& j);

/// Envelope JSON: both coefficient arrays, domain, RMSE, provenance string.
void save_envelope(const Envelope& env, const std::string& provenance, const std::string& path);
Envelope load_envelope(const std::string& path);
nlohmann::json envelope_to_json(const Envelope& env, const std::string& provenance);
Envelope envelope_from_json(const nlohmann::json& j);

/// Braking corpus CSV: set_id, t_s, v_mps, a_mps2, bps_pct.
void save_corpus(const std::vector<BrakingSeries>& series, const std::string& path);
std::vector<BrakingSeries> load_corpus(const std::string& path);

/// Route CSV: distance_m, slope_rad.
void save_route_csv(const Route& route, const std::string& path);
Route load_route_csv(const std::string& path);

/// Lights JSON: array of {position_m, green_s, yellow_s, red_s, phase_offset_s}.
void save_lights(const std::vector<TrafficLight>& lights, const std::string& path);
std::vector<TrafficLight> load_lights(const std::string& path);

/// Plan export: CSV columns k, t_s, v_mps, a_mps2, d_m, rho_rad, f_rgn_n,
/// f_lmt_n, p_rgn_w, nd_steps.
void save_profile_csv(const SpeedProfile& profile, const std::string& path);
std::string profile_csv(const SpeedProfile& profile);

}  // namespace edps
