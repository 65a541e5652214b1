#include "edps/v2i.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace edps {

namespace {

using nlohmann::json;

void send_all(int fd, const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n <= 0) throw std::runtime_error("transport: send failed");
        data += n;
        len -= static_cast<std::size_t>(n);
    }
}

bool recv_all(int fd, std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::recv(fd, data, len, 0);
        if (n == 0) return false;  // orderly close
        if (n < 0) throw std::runtime_error("transport: recv failed");
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

void send_msg(int fd, const WireMessage& msg) {
    auto frame = encode(msg);
    send_all(fd, frame.data(), frame.size());
}

/// Reads one frame; false on orderly close before a new frame.
bool recv_msg(int fd, WireMessage& out) {
    std::uint8_t head[4];
    if (!recv_all(fd, head, 4)) return false;
    std::uint32_t len = (std::uint32_t(head[0]) << 24) | (std::uint32_t(head[1]) << 16) |
                        (std::uint32_t(head[2]) << 8) | std::uint32_t(head[3]);
    if (len > kMaxFrameBytes) throw std::runtime_error("transport: oversize frame");
    std::vector<std::uint8_t> frame(4 + len);
    std::memcpy(frame.data(), head, 4);
    if (!recv_all(fd, frame.data() + 4, len)) throw std::runtime_error("transport: truncated frame");
    out = decode(frame);
    return true;
}

json error_payload(const std::string& code, const std::string& message) {
    return {{"code", code}, {"message", message}};
}

}  // namespace

std::string to_string(MsgKind kind) {
    switch (kind) {
        case MsgKind::hello: return "HELLO";
        case MsgKind::plan_request: return "PLAN_REQUEST";
        case MsgKind::plan_response: return "PLAN_RESPONSE";
        case MsgKind::event_decision_request: return "EVENT_DECISION_REQUEST";
        case MsgKind::event_decision_response: return "EVENT_DECISION_RESPONSE";
        case MsgKind::error: return "ERROR";
        case MsgKind::bye: return "BYE";
    }
    throw std::logic_error("bad message kind");
}

MsgKind msg_kind_from_string(const std::string& s) {
    if (s == "HELLO") return MsgKind::hello;
    if (s == "PLAN_REQUEST") return MsgKind::plan_request;
    if (s == "PLAN_RESPONSE") return MsgKind::plan_response;
    if (s == "EVENT_DECISION_REQUEST") return MsgKind::event_decision_request;
    if (s == "EVENT_DECISION_RESPONSE") return MsgKind::event_decision_response;
    if (s == "ERROR") return MsgKind::error;
    if (s == "BYE") return MsgKind::bye;
    throw std::runtime_error("unknown message kind: " + s);
}

std::vector<std::uint8_t> encode(const WireMessage& msg) {
    json j;
    j["kind"] = to_string(msg.kind);
    j["seq"] = msg.seq;
    j["payload"] = msg.payload;
    std::string body = j.dump();  // sorted keys: canonical
    if (body.size() > kMaxFrameBytes)
        throw std::length_error("encode: body exceeds the 16 MiB frame limit");

    std::vector<std::uint8_t> out(4 + body.size());
    std::uint32_t len = static_cast<std::uint32_t>(body.size());
    out[0] = static_cast<std::uint8_t>(len >> 24);
    out[1] = static_cast<std::uint8_t>(len >> 16);
    out[2] = static_cast<std::uint8_t>(len >> 8);
    out[3] = static_cast<std::uint8_t>(len);
    std::memcpy(out.data() + 4, body.data(), body.size());
    return out;
}

WireMessage decode(const std::vector<std::uint8_t>& frame) {
    if (frame.size() < 4) throw std::runtime_error("decode: frame shorter than its prefix");
    std::uint32_t len = (std::uint32_t(frame[0]) << 24) | (std::uint32_t(frame[1]) << 16) |
                        (std::uint32_t(frame[2]) << 8) | std::uint32_t(frame[3]);
    if (frame.size() != 4 + static_cast<std::size_t>(len))
        throw std::runtime_error("decode: length prefix does not match frame size");

    json j = json::parse(frame.begin() + 4, frame.end());
    WireMessage msg;
    msg.kind = msg_kind_from_string(j.at("kind").get<std::string>());
    msg.seq = j.at("seq").get<std::uint64_t>();
    msg.payload = j.at("payload");
    return msg;
}

json plan_request_to_json(const DecelPlanRequest& request, const Route& slice) {
    json samples = json::array();
    for (const auto& [d, s] : slice.samples) samples.push_back({d, s});
    return {{"v_i0", request.v_i0},
            {"v_f0", request.v_f0},
            {"d_res", request.d_res},
            {"t_req", request.t_req},
            {"route", {{"total_length", slice.total_length}, {"samples", samples}}}};
}

void plan_request_from_json(const json& j, DecelPlanRequest& request, Route& slice) {
    request.v_i0 = j.at("v_i0").get<double>();
    request.v_f0 = j.at("v_f0").get<double>();
    request.d_res = j.at("d_res").get<double>();
    request.t_req = j.at("t_req").get<double>();
    slice.samples.clear();
    slice.total_length = j.at("route").at("total_length").get<double>();
    for (const auto& e : j.at("route").at("samples"))
        slice.samples.emplace_back(e[0].get<double>(), e[1].get<double>());
}

json plan_result_to_json(const PlanResult& result) {
    json steps = json::array();
    for (const ProfileStep& s : result.profile.steps)
        steps.push_back({{"k", s.k},
                         {"t", s.t},
                         {"v", s.v},
                         {"a", s.a},
                         {"d", s.d},
                         {"slope", s.slope},
                         {"p_rgn", s.p_rgn},
                         {"nd", s.nd},
                         {"f_rgn", s.forces.f_rgn},
                         {"f_lmt", s.forces.f_lmt},
                         {"f_frc", s.forces.f_frc},
                         {"f_brk", s.forces.f_brk}});
    json diags = json::array();
    for (const StageDiag& d : result.stage_diagnostics)
        diags.push_back({{"nd_fallback", d.nd_fallback},
                         {"shape_fallback", d.shape_fallback},
                         {"envelope_clamped", d.envelope_clamped}});
    return {{"dt", result.profile.dt},
            {"steps", steps},
            {"total_recup_energy", result.total_recup_energy},
            {"nd_sequence", result.nd_sequence},
            {"diagnostics", diags}};
}

PlanResult plan_result_from_json(const json& j) {
    PlanResult out;
    out.profile.dt = j.at("dt").get<double>();
    for (const auto& e : j.at("steps")) {
        ProfileStep s;
        s.k = e.at("k").get<int>();
        s.t = e.at("t").get<double>();
        s.v = e.at("v").get<double>();
        s.a = e.at("a").get<double>();
        s.d = e.at("d").get<double>();
        s.slope = e.at("slope").get<double>();
        s.p_rgn = e.at("p_rgn").get<double>();
        s.nd = e.at("nd").get<int>();
        s.forces.f_rgn = e.at("f_rgn").get<double>();
        s.forces.f_lmt = e.at("f_lmt").get<double>();
        s.forces.f_frc = e.at("f_frc").get<double>();
        s.forces.f_brk = e.at("f_brk").get<double>();
        out.profile.steps.push_back(s);
    }
    out.total_recup_energy = j.at("total_recup_energy").get<double>();
    out.nd_sequence = j.at("nd_sequence").get<std::vector<int>>();
    for (const auto& e : j.at("diagnostics")) {
        StageDiag d;
        d.nd_fallback = e.at("nd_fallback").get<bool>();
        d.shape_fallback = e.at("shape_fallback").get<bool>();
        d.envelope_clamped = e.at("envelope_clamped").get<bool>();
        out.stage_diagnostics.push_back(d);
    }
    return out;
}

PlanServer::PlanServer(VehicleParams params, Envelope env, PlannerConfig cfg)
    : params_(std::move(params)), env_(std::move(env)), cfg_(cfg) {}

PlanServer::~PlanServer() { stop(); }

int PlanServer::start(int port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("server: socket failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("server: cannot bind port " + std::to_string(port));
    }
    if (::listen(listen_fd_, 8) < 0) throw std::runtime_error("server: listen failed");

    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return port_;
}

void PlanServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (accept_thread_.joinable()) accept_thread_.join();
    for (std::thread& th : sessions_)
        if (th.joinable()) th.join();
    sessions_.clear();
}

void PlanServer::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;  // listener closed
        sessions_.emplace_back([this, fd] { session(fd); });
    }
}

void PlanServer::session(int fd) {
    auto fail = [&](std::uint64_t seq, const std::string& code, const std::string& what) {
        try {
            send_msg(fd, {MsgKind::error, seq, error_payload(code, what)});
        } catch (const std::exception&) {
        }
    };

    try {
        WireMessage msg;
        if (!recv_msg(fd, msg)) {
            ::close(fd);
            return;
        }
        if (msg.kind != MsgKind::hello ||
            msg.payload.value("version", -1) != kProtocolVersion) {
            fail(msg.seq, "VERSION", "expected HELLO v" + std::to_string(kProtocolVersion));
            ::close(fd);
            return;
        }
        send_msg(fd, {MsgKind::hello, msg.seq, {{"version", kProtocolVersion}}});

        while (recv_msg(fd, msg)) {
            if (msg.kind == MsgKind::bye) {
                send_msg(fd, {MsgKind::bye, msg.seq, json::object()});
                break;
            }
            if (msg.kind == MsgKind::plan_request) {
                try {
                    DecelPlanRequest req;
                    Route slice;
                    plan_request_from_json(msg.payload, req, slice);
                    PlanResult result =
                        plan(req, params_, env_,
                             [&slice](double d) { return slope_at(slice, d); }, cfg_);
                    send_msg(fd, {MsgKind::plan_response, msg.seq, plan_result_to_json(result)});
                } catch (const InfeasiblePlan& e) {
                    fail(msg.seq, "INFEASIBLE",
                         std::string(e.what()) + " (stage " + std::to_string(e.stage) + ")");
                } catch (const std::exception& e) {
                    fail(msg.seq, "BAD_REQUEST", e.what());
                }
                continue;
            }
            if (msg.kind == MsgKind::event_decision_request) {
                try {
                    SpatState spat;
                    spat.phase = static_cast<Phase>(msg.payload.at("phase").get<int>());
                    spat.t_cur = msg.payload.at("t_cur").get<double>();
                    spat.t_red = msg.payload.at("t_red").get<double>();
                    spat.t_yellow = msg.payload.at("t_yellow").get<double>();
                    spat.t_green = msg.payload.at("t_green").get<double>();
                    double v_i = msg.payload.at("v_i").get<double>();
                    double d_res = msg.payload.at("d_res").get<double>();

                    TargetCandidates cands = target_candidates(env_, v_i, d_res);
                    json out;
                    if (cands.v_f.empty()) {
                        out = {{"feasible", false}};
                    } else {
                        EventDecision dec = decide(spat, cands, v_i);
                        out = {{"feasible", true},
                               {"c_trans", dec.c_trans},
                               {"v_f", dec.v_f},
                               {"planning_time", dec.planning_time}};
                    }
                    send_msg(fd, {MsgKind::event_decision_response, msg.seq, out});
                } catch (const std::exception& e) {
                    fail(msg.seq, "BAD_REQUEST", e.what());
                }
                continue;
            }
            fail(msg.seq, "FRAME", "unexpected message kind " + to_string(msg.kind));
            break;
        }
    } catch (const std::exception& e) {
        fail(0, "FRAME", e.what());
    }
    ::close(fd);
}

RemoteClient::RemoteClient(const std::string& host, int port, double timeout_s) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("client: socket failed");

    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout_s);
    tv.tv_usec = static_cast<suseconds_t>((timeout_s - static_cast<double>(tv.tv_sec)) * 1e6);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("client: bad host address " + host);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd_);
        fd_ = -1;
        throw std::runtime_error("client: cannot connect to " + host + ":" +
                                 std::to_string(port));
    }
}

RemoteClient::~RemoteClient() {
    if (fd_ >= 0) ::close(fd_);
}

WireMessage RemoteClient::roundtrip(const WireMessage& msg) {
    send_msg(fd_, msg);
    WireMessage reply;
    if (!recv_msg(fd_, reply)) throw std::runtime_error("transport: connection closed");
    if (reply.seq != msg.seq)
        throw std::runtime_error("protocol: response sequence mismatch");
    return reply;
}

void RemoteClient::hello() {
    WireMessage reply = roundtrip({MsgKind::hello, ++seq_, {{"version", kProtocolVersion}}});
    if (reply.kind != MsgKind::hello)
        throw std::runtime_error("protocol: handshake rejected");
}

PlanResult RemoteClient::plan(const DecelPlanRequest& request, const Route& slice) {
    WireMessage reply =
        roundtrip({MsgKind::plan_request, ++seq_, plan_request_to_json(request, slice)});
    if (reply.kind == MsgKind::error) {
        auto code = reply.payload.value("code", "");
        auto what = reply.payload.value("message", "remote error");
        if (code == "INFEASIBLE") throw InfeasiblePlan(-1, what);
        throw std::runtime_error("remote: " + what);
    }
    if (reply.kind != MsgKind::plan_response)
        throw std::runtime_error("protocol: unexpected reply kind");
    return plan_result_from_json(reply.payload);
}

void RemoteClient::bye() { roundtrip({MsgKind::bye, ++seq_, json::object()}); }

}  // namespace edps
