#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "edps/simroute.hpp"

#include <json.hpp>

namespace edps {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 16u << 20;  // 16 MiB body limit

enum class MsgKind {
    hello,
    plan_request,
    plan_response,
    event_decision_request,
    event_decision_response,
    error,
    bye,
};

std::string to_string(MsgKind kind);
MsgKind msg_kind_from_string(const std::string& s);

struct WireMessage {
    MsgKind kind = MsgKind::bye;
    std::uint64_t seq = 0;
    nlohmann::json payload;

    bool operator==(const WireMessage&) const = default;
};

/// 4-byte big-endian length prefix plus a canonical (sorted-key) UTF-8 JSON
/// body {kind, seq, payload}. Throws std::length_error past 16 MiB.
std::vector<std::uint8_t> encode(const WireMessage& msg);

/// Inverse of encode over a complete frame. Throws std::runtime_error on
/// truncation, bad length, or malformed JSON.
WireMessage decode(const std::vector<std::uint8_t>& frame);

nlohmann::json plan_request_to_json(const DecelPlanRequest& request, const Route& slice);
void plan_request_from_json(const nlohmann::json& j, DecelPlanRequest& request, Route& slice);
nlohmann::json plan_result_to_json(const PlanResult& result);
PlanResult plan_result_from_json(const nlohmann::json& j);

/// Planner service: one thread per session, HELLO handshake, then strictly
/// ordered request/response. Planner inputs are immutable after start().
class PlanServer {
public:
    PlanServer(VehicleParams params, Envelope env, PlannerConfig cfg);
    ~PlanServer();

    /// Binds and starts accepting; port 0 picks a free port. Returns the
    /// bound port.
    int start(int port);
    void stop();
    int port() const { return port_; }

private:
    void accept_loop();
    void session(int fd);

    VehicleParams params_;
    Envelope env_;
    PlannerConfig cfg_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::vector<std::thread> sessions_;
};

/// Client side of one session. Not thread-safe; one in-flight request.
class RemoteClient {
public:
    RemoteClient(const std::string& host, int port, double timeout_s = 10.0);
    ~RemoteClient();

    void hello();
    PlanResult plan(const DecelPlanRequest& request, const Route& slice);
    void bye();

private:
    WireMessage roundtrip(const WireMessage& msg);
    int fd_ = -1;
    std::uint64_t seq_ = 0;
};

/// PlanBackend over a live session; results match in-process planning
/// bit-for-bit after export.
struct RemoteBackend final : PlanBackend {
    RemoteClient& client;
    explicit RemoteBackend(RemoteClient& c) : client(c) {}
    PlanResult plan(const DecelPlanRequest& request, const Route& slice) override {
        return client.plan(request, slice);
    }
};

}  // namespace edps
