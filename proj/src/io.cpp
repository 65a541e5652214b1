#include "edps/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace edps {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

void check_fields(const json& j, const std::set<std::string>& allowed, const std::string& what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::runtime_error(what + ": unknown field '" + it.key() + "'");
}

json pairs_to_json(const std::vector<double>& a, const std::vector<double>& b) {
    json out = json::array();
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back({a[i], b[i]});
    return out;
}

void pairs_from_json(const json& j, std::vector<double>& a, std::vector<double>& b,
                     const std::string& what) {
    a.clear();
    b.clear();
    if (!j.is_array()) throw std::runtime_error(what + ": expected an array of pairs");
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2)
            throw std::runtime_error(what + ": each entry must be a [breakpoint, value] pair");
        a.push_back(e[0].get<double>());
        b.push_back(e[1].get<double>());
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

json vehicle_to_json(const VehicleParams& p) {
    json j;
    j["effective_mass_kg"] = p.effective_mass;
    j["wheel_radius_m"] = p.wheel_radius;
    j["final_drive"] = p.final_drive;
    j["rolling_c0_n"] = p.rolling_c0;
    j["rolling_c1_ns_per_m"] = p.rolling_c1;
    j["aero_c2_ns2_per_m2"] = p.aero_c2;
    j["gear_map"] = pairs_to_json(p.gear_map.breakpoints, p.gear_map.values);
    j["torque_limit_map"] = pairs_to_json(p.torque_limit_map.x, p.torque_limit_map.y);
    return j;
}

VehicleParams vehicle_from_json(const json& j) {
    check_fields(j,
                 {"effective_mass_kg", "wheel_radius_m", "final_drive", "rolling_c0_n",
                  "rolling_c1_ns_per_m", "aero_c2_ns2_per_m2", "gear_map", "torque_limit_map"},
                 "vehicle file");
    VehicleParams p;
    p.effective_mass = j.at("effective_mass_kg").get<double>();
    p.wheel_radius = j.at("wheel_radius_m").get<double>();
    p.final_drive = j.at("final_drive").get<double>();
    p.rolling_c0 = j.at("rolling_c0_n").get<double>();
    p.rolling_c1 = j.at("rolling_c1_ns_per_m").get<double>();
    p.aero_c2 = j.at("aero_c2_ns2_per_m2").get<double>();
    pairs_from_json(j.at("gear_map"), p.gear_map.breakpoints, p.gear_map.values, "gear_map");
    pairs_from_json(j.at("torque_limit_map"), p.torque_limit_map.x, p.torque_limit_map.y,
                    "torque_limit_map");
    p.validate();
    return p;
}

VehicleParams load_vehicle(const std::string& path) {
    return vehicle_from_json(json::parse(read_file(path)));
}

json envelope_to_json(const Envelope& env, const std::string& provenance) {
    json j;
    j["coeffs_min"] = env.coeffs_min;
    j["coeffs_max"] = env.coeffs_max;
    j["fit_rmse_min_s"] = env.fit_rmse_min;
    j["fit_rmse_max_s"] = env.fit_rmse_max;
    j["domain"] = {{"vi_lo", env.vi_lo}, {"vi_hi", env.vi_hi},
                   {"vf_lo", env.vf_lo}, {"vf_hi", env.vf_hi}};
    j["provenance"] = provenance;
    return j;
}

Envelope envelope_from_json(const json& j) {
    check_fields(j, {"coeffs_min", "coeffs_max", "fit_rmse_min_s", "fit_rmse_max_s", "domain",
                     "provenance"},
                 "envelope file");
    Envelope env;
    auto cmin = j.at("coeffs_min").get<std::vector<double>>();
    auto cmax = j.at("coeffs_max").get<std::vector<double>>();
    if (cmin.size() != 7 || cmax.size() != 7)
        throw std::runtime_error("envelope file: coefficient arrays must have 7 entries");
    std::copy(cmin.begin(), cmin.end(), env.coeffs_min.begin());
    std::copy(cmax.begin(), cmax.end(), env.coeffs_max.begin());
    env.fit_rmse_min = j.at("fit_rmse_min_s").get<double>();
    env.fit_rmse_max = j.at("fit_rmse_max_s").get<double>();
    const json& d = j.at("domain");
    env.vi_lo = d.at("vi_lo").get<double>();
    env.vi_hi = d.at("vi_hi").get<double>();
    env.vf_lo = d.at("vf_lo").get<double>();
    env.vf_hi = d.at("vf_hi").get<double>();
    return env;
}

void save_envelope(const Envelope& env, const std::string& provenance, const std::string& path) {
    write_file(path, envelope_to_json(env, provenance).dump(2) + "\n");
}

Envelope load_envelope(const std::string& path) {
    return envelope_from_json(json::parse(read_file(path)));
}

void save_corpus(const std::vector<BrakingSeries>& series, const std::string& path) {
    std::ostringstream out;
    out << "set_id,t_s,v_mps,a_mps2,bps_pct\n";
    for (const BrakingSeries& s : series)
        for (std::size_t i = 0; i < s.t.size(); ++i)
            out << s.set_id << ',' << fmt_num(s.t[i]) << ',' << fmt_num(s.v[i]) << ','
                << fmt_num(s.a[i]) << ',' << fmt_num(s.bps) << '\n';
    write_file(path, out.str());
}

std::vector<BrakingSeries> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "set_id,t_s,v_mps,a_mps2,bps_pct")
        throw std::runtime_error(path + ": bad corpus header");

    std::vector<BrakingSeries> series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 5) throw std::runtime_error(path + ": bad corpus row: " + line);
        int id = std::stoi(f[0]);
        if (series.empty() || series.back().set_id != id) {
            series.emplace_back();
            series.back().set_id = id;
            series.back().bps = std::stod(f[4]);
        }
        series.back().t.push_back(std::stod(f[1]));
        series.back().v.push_back(std::stod(f[2]));
        series.back().a.push_back(std::stod(f[3]));
    }
    return series;
}

void save_route_csv(const Route& route, const std::string& path) {
    std::ostringstream out;
    out << "distance_m,slope_rad\n";
    for (const auto& [d, s] : route.samples)
        out << fmt_num(d) << ',' << fmt_num(s) << '\n';
    write_file(path, out.str());
}

Route load_route_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "distance_m,slope_rad")
        throw std::runtime_error(path + ": bad route header");

    Route route;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 2) throw std::runtime_error(path + ": bad route row: " + line);
        route.samples.emplace_back(std::stod(f[0]), std::stod(f[1]));
    }
    if (!route.samples.empty()) route.total_length = route.samples.back().first;
    return route;
}

void save_lights(const std::vector<TrafficLight>& lights, const std::string& path) {
    json arr = json::array();
    for (const TrafficLight& l : lights)
        arr.push_back({{"position_m", l.position_m},
                       {"green_s", l.green_s},
                       {"yellow_s", l.yellow_s},
                       {"red_s", l.red_s},
                       {"phase_offset_s", l.phase_offset_s}});
    write_file(path, arr.dump(2) + "\n");
}

std::vector<TrafficLight> load_lights(const std::string& path) {
    json arr = json::parse(read_file(path));
    if (!arr.is_array()) throw std::runtime_error(path + ": lights file must be an array");
    std::vector<TrafficLight> lights;
    for (const auto& j : arr) {
        check_fields(j, {"position_m", "green_s", "yellow_s", "red_s", "phase_offset_s"},
                     "lights file");
        TrafficLight l;
        l.position_m = j.at("position_m").get<double>();
        l.green_s = j.at("green_s").get<double>();
        l.yellow_s = j.at("yellow_s").get<double>();
        l.red_s = j.at("red_s").get<double>();
        l.phase_offset_s = j.at("phase_offset_s").get<double>();
        lights.push_back(l);
    }
    return lights;
}

std::string profile_csv(const SpeedProfile& profile) {
    std::ostringstream out;
    out << "k,t_s,v_mps,a_mps2,d_m,rho_rad,f_rgn_n,f_lmt_n,p_rgn_w,nd_steps\n";
    for (const ProfileStep& s : profile.steps)
        out << s.k << ',' << fmt_num(s.t) << ',' << fmt_num(s.v) << ',' << fmt_num(s.a) << ','
            << fmt_num(s.d) << ',' << fmt_num(s.slope) << ',' << fmt_num(s.forces.f_rgn) << ','
            << fmt_num(s.forces.f_lmt) << ',' << fmt_num(s.p_rgn) << ',' << s.nd << '\n';
    return out.str();
}

void save_profile_csv(const SpeedProfile& profile, const std::string& path) {
    write_file(path, profile_csv(profile));
}

}  // namespace edps
