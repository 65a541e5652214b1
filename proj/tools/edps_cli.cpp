#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "edps/envelope.hpp"
#include "edps/io.hpp"
#include "edps/planner.hpp"
#include "edps/simroute.hpp"
#include "edps/synth.hpp"
#include "edps/v2i.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitTransport = 4;

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

edps::VehicleParams vehicle_or_default(const std::string& path) {
    return path.empty() ? edps::default_vehicle() : edps::load_vehicle(path);
}

edps::Route load_or_synth_route(const std::string& route_path, const std::string& lights_path,
                                std::uint64_t seed) {
    if (route_path.empty()) return edps::synth_route(seed);
    edps::Route route = edps::load_route_csv(route_path);
    route.lights = edps::load_lights(lights_path);
    route.validate();
    return route;
}

json sim_summary(const edps::SimResult& r, double preview) {
    json ev = json::array();
    for (const edps::EventRecord& e : r.events)
        ev.push_back({{"light_index", e.light_index},
                      {"position_m", e.position},
                      {"trigger_time_s", e.trigger_time},
                      {"c_trans", e.c_trans},
                      {"v_f_mps", e.v_f},
                      {"planning_time_s", e.planning_time},
                      {"energy_j", e.energy},
                      {"planned", e.planned},
                      {"fallback", e.fallback}});
    return {{"preview_distance_m", preview},
            {"trip_time_s", r.trip_time},
            {"total_recup_energy_j", r.total_recup_energy},
            {"transition_counts", r.transition_counts},
            {"avg_decel_mps2", r.avg_decel},
            {"max_decel_mps2", r.max_decel},
            {"red_violations", r.red_violations},
            {"fallback_count", r.fallback_count},
            {"events", ev}};
}

std::string sweep_table(const std::vector<double>& previews,
                        const std::vector<edps::SimResult>& results) {
    std::ostringstream out;
    out << "preview_m,trip_time_s,recup_energy_j,avg_decel_mps2,max_decel_mps2,"
           "c1,c2,c3,c4,red_violations,fallbacks\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const edps::SimResult& r = results[i];
        out << edps::fmt_num(previews[i]) << ',' << edps::fmt_num(r.trip_time) << ','
            << edps::fmt_num(r.total_recup_energy) << ',' << edps::fmt_num(r.avg_decel) << ','
            << edps::fmt_num(r.max_decel) << ',' << r.transition_counts[0] << ','
            << r.transition_counts[1] << ',' << r.transition_counts[2] << ','
            << r.transition_counts[3] << ',' << r.red_violations << ',' << r.fallback_count
            << '\n';
    }
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-optimal deceleration planning toolkit"};
    app.require_subcommand(1);

    // synth-data
    auto* synth = app.add_subcommand("synth-data", "generate the synthetic braking corpus");
    std::uint64_t seed = 42;
    std::string out_path, vehicle_path, emit_vehicle;
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--out", out_path, "corpus CSV path")->required();
    synth->add_option("--vehicle", vehicle_path, "vehicle JSON (default: built-in)");
    synth->add_option("--emit-vehicle", emit_vehicle, "also write the vehicle JSON here");

    // fit
    auto* fit = app.add_subcommand("fit", "fit the deceleration-time envelope");
    std::string corpus_path, env_out;
    double quantile = 0.05;
    fit->add_option("--corpus", corpus_path, "corpus CSV")->required();
    fit->add_option("--out", env_out, "envelope JSON path")->required();
    fit->add_option("--quantile", quantile, "quantile band (default 0.05)");

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "plan one deceleration event");
    std::string env_path, profile_out, summary_out;
    double v_i0 = 0, v_f0 = 0, d_res = 0, t_req = 0, const_slope = 0;
    plan_cmd->add_option("--envelope", env_path, "envelope JSON")->required();
    plan_cmd->add_option("--vehicle", vehicle_path, "vehicle JSON (default: built-in)");
    plan_cmd->add_option("--v-i", v_i0, "initial speed, m/s")->required();
    plan_cmd->add_option("--v-f", v_f0, "target speed, m/s")->required();
    plan_cmd->add_option("--d-res", d_res, "residual distance, m")->required();
    plan_cmd->add_option("--t-req", t_req, "planning time, s")->required();
    plan_cmd->add_option("--slope", const_slope, "constant road slope, rad");
    plan_cmd->add_option("--out-profile", profile_out, "profile CSV path");
    plan_cmd->add_option("--out-summary", summary_out, "summary JSON path");

    // simulate / sweep share options
    auto* sim_cmd = app.add_subcommand("simulate", "closed-loop drive over a route");
    auto* sweep_cmd = app.add_subcommand("sweep", "simulate across preview distances");
    std::string route_path, lights_path, trace_out, remote;
    double preview = 200.0, cruise = 16.67, accel = 1.5;
    std::vector<double> previews{200.0, 150.0, 100.0};
    for (CLI::App* c : {sim_cmd, sweep_cmd}) {
        c->add_option("--envelope", env_path, "envelope JSON")->required();
        c->add_option("--vehicle", vehicle_path, "vehicle JSON (default: built-in)");
        c->add_option("--route", route_path, "route CSV (default: synthetic)");
        c->add_option("--lights", lights_path, "lights JSON (with --route)");
        c->add_option("--seed", seed, "seed for the synthetic route");
        c->add_option("--cruise", cruise, "cruise speed, m/s");
        c->add_option("--accel", accel, "post-event acceleration, m/s^2");
        c->add_option("--out-summary", summary_out, "summary JSON path");
    }
    sim_cmd->add_option("--preview", preview, "preview distance, m");
    sim_cmd->add_option("--out-trace", trace_out, "trace CSV path");
    sim_cmd->add_option("--remote", remote, "host:port of a planner service");
    sweep_cmd->add_option("--previews", previews, "preview distances, m");
    sweep_cmd->add_option("--out-table", trace_out, "comparison CSV path");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the planner service");
    int port = 0;
    serve_cmd->add_option("--envelope", env_path, "envelope JSON")->required();
    serve_cmd->add_option("--vehicle", vehicle_path, "vehicle JSON (default: built-in)");
    serve_cmd->add_option("--port", port, "listen port (0 = ephemeral)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            edps::VehicleParams params = vehicle_or_default(vehicle_path);
            edps::save_corpus(edps::synth_braking_data(seed, params), out_path);
            if (!emit_vehicle.empty())
                write_text(emit_vehicle, edps::vehicle_to_json(params).dump(2) + "\n");
            std::cout << "corpus written to " << out_path << "\n";
            return kExitOk;
        }

        if (*fit) {
            auto series = edps::load_corpus(corpus_path);
            auto extraction = edps::extract_observations(series);
            edps::Envelope env = edps::fit_envelope(extraction.observations, quantile);
            edps::save_envelope(env, corpus_path, env_out);
            std::cout << "observations: " << extraction.observations.size()
                      << " (skipped " << extraction.skipped_segments << ")\n";
            std::cout << "coeffs_min:";
            for (double c : env.coeffs_min) std::cout << ' ' << edps::fmt_num(c);
            std::cout << "\ncoeffs_max:";
            for (double c : env.coeffs_max) std::cout << ' ' << edps::fmt_num(c);
            std::cout << "\nrmse_min: " << edps::fmt_num(env.fit_rmse_min)
                      << "  rmse_max: " << edps::fmt_num(env.fit_rmse_max) << "\n";
            return kExitOk;
        }

        if (*plan_cmd) {
            edps::VehicleParams params = vehicle_or_default(vehicle_path);
            edps::Envelope env = edps::load_envelope(env_path);
            edps::DecelPlanRequest req{v_i0, v_f0, d_res, t_req};
            edps::PlannerConfig cfg;
            try {
                edps::PlanResult result =
                    edps::plan(req, params, env, [&](double) { return const_slope; }, cfg);
                if (!profile_out.empty()) edps::save_profile_csv(result.profile, profile_out);
                json summary = {{"v_i0", v_i0},
                                {"v_f0", v_f0},
                                {"d_res", d_res},
                                {"t_req", t_req},
                                {"total_recup_energy_j", result.total_recup_energy},
                                {"nd_sequence", result.nd_sequence}};
                std::string body = summary.dump(2) + "\n";
                if (!summary_out.empty()) write_text(summary_out, body);
                std::cout << body;
            } catch (const edps::InfeasiblePlan& e) {
                json report = {{"infeasible", true}, {"stage", e.stage}, {"reason", e.what()}};
                std::string body = report.dump(2) + "\n";
                if (!summary_out.empty()) write_text(summary_out, body);
                std::cerr << body;
                return kExitInfeasible;
            }
            return kExitOk;
        }

        if (*sim_cmd || *sweep_cmd) {
            edps::SimConfig cfg;
            cfg.vehicle = vehicle_or_default(vehicle_path);
            cfg.envelope = edps::load_envelope(env_path);
            cfg.cruise_speed = cruise;
            cfg.accel_rate = accel;
            edps::Route route = load_or_synth_route(route_path, lights_path, seed);

            if (*sim_cmd) {
                cfg.preview_distance = preview;
                edps::SimResult result;
                if (remote.empty()) {
                    result = edps::run(route, cfg);
                } else {
                    auto colon = remote.find(':');
                    if (colon == std::string::npos)
                        throw std::runtime_error("--remote expects host:port");
                    edps::RemoteClient client(remote.substr(0, colon),
                                              std::stoi(remote.substr(colon + 1)));
                    client.hello();
                    edps::RemoteBackend backend(client);
                    result = edps::run(route, cfg, &backend);
                    client.bye();
                }
                if (!trace_out.empty()) write_text(trace_out, edps::trace_csv(result));
                std::string body = sim_summary(result, preview).dump(2) + "\n";
                if (!summary_out.empty()) write_text(summary_out, body);
                std::cout << body;
            } else {
                auto results = edps::sweep(route, cfg, previews);
                std::string table = sweep_table(previews, results);
                if (!trace_out.empty()) write_text(trace_out, table);
                if (!summary_out.empty()) {
                    json arr = json::array();
                    for (std::size_t i = 0; i < results.size(); ++i)
                        arr.push_back(sim_summary(results[i], previews[i]));
                    write_text(summary_out, arr.dump(2) + "\n");
                }
                std::cout << table;
            }
            return kExitOk;
        }

        if (*serve_cmd) {
            edps::PlanServer server(vehicle_or_default(vehicle_path),
                                    edps::load_envelope(env_path), edps::PlannerConfig{});
            int bound = server.start(port);
            std::cout << "listening on 127.0.0.1:" << bound << "\n" << std::flush;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            while (!g_stop) {
                timespec ts{0, 100'000'000};
                nanosleep(&ts, nullptr);
            }
            server.stop();
            return kExitOk;
        }
    } catch (const edps::InfeasiblePlan& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        if (what.rfind("transport:", 0) == 0 || what.rfind("client:", 0) == 0 ||
            what.rfind("protocol:", 0) == 0 || what.rfind("server:", 0) == 0 ||
            what.rfind("remote:", 0) == 0)
            return kExitTransport;
        return kExitInput;
    }
    return kExitInput;
}
