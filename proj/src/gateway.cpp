// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/gateway.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>

#include "streamclaw/error.hpp"

namespace streamclaw {

namespace {

const char* const kClientTypes[] = {"query",           "set_objective", "evolve_objective", "cancel_objective",
                                    "pause",           "resume",        "state_request"};

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::ProtocolViolation, what); }

std::string require_text(const Json& body) {
    if (!body.contains("text") || !body.at("text").is_string()) violation("body.text must be a string");
    return body.at("text").get<std::string>();
}

std::uint64_t require_rid(const Json& body) {
    if (!body.contains("rid") || !body.at("rid").is_number_unsigned()) {
        violation("body.rid must be a non-negative integer");
    }
    return body.at("rid").get<std::uint64_t>();
}

}  // namespace

ClientMessage parse_client_message(const Json& j) {
    if (!j.is_object()) violation("message must be an object");
    if (!j.contains("type") || !j.at("type").is_string()) violation("type must be a string");
    ClientMessage msg;
    msg.type = j.at("type").get<std::string>();
    bool known = false;
    for (const char* t : kClientTypes) known = known || msg.type == t;
    if (!known) violation("unknown message type '" + msg.type + "'");
    if (!j.contains("id") || !(j.at("id").is_string() || j.at("id").is_number_integer())) {
        violation("id must be a string or integer");
    }
    msg.id = j.at("id");
    msg.body = j.value("body", Json::object());
    if (!msg.body.is_object()) violation("body must be an object");

    if (msg.type == "query" || msg.type == "set_objective") {
        require_text(msg.body);
    } else if (msg.type == "evolve_objective") {
        require_rid(msg.body);
        require_text(msg.body);
    } else if (msg.type == "cancel_objective") {
        require_rid(msg.body);
    }
    return msg;
}

std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon + 1 == addr.size()) {
        throw Error(ErrorCode::ConfigInvalid, "listen address must be host:port, got '" + addr + "'");
    }
    const std::string host = colon == 0 ? "127.0.0.1" : addr.substr(0, colon);
    int port = -1;
    try {
        std::size_t used = 0;
        port = std::stoi(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1) port = -1;
    } catch (const std::exception&) {
        port = -1;
    }
    if (port < 0 || port > 65535) throw Error(ErrorCode::ConfigInvalid, "bad port in '" + addr + "'");
    return {host, static_cast<std::uint16_t>(port)};
}

Gateway::Gateway(std::size_t queue_cap) : m_queue_cap(queue_cap) {}

Gateway::~Gateway() { stop(); }

std::uint16_t Gateway::listen(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw Error(ErrorCode::ConfigInvalid, "cannot resolve '" + host + "'");
    }
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    freeaddrinfo(res);
    addr.sin_port = htons(port);

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(ErrorCode::PortBusy, std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd, 16) != 0) {
        const std::string why = std::strerror(errno);
        ::close(fd);
        throw Error(ErrorCode::PortBusy, host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);

    m_listen_fd = fd;
    m_running = true;
    m_acceptor = std::thread([this] { accept_loop(); });
    return ntohs(addr.sin_port);
}

void Gateway::stop() {
    if (!m_running.exchange(false)) return;
    if (m_acceptor.joinable()) m_acceptor.join();
    ::close(m_listen_fd);
    m_listen_fd = -1;
    std::vector<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lock(m_conn_mutex);
        conns.swap(m_connections);
    }
    for (auto& c : conns) {
        ::shutdown(c->fd, SHUT_RDWR);
        if (c->reader.joinable()) c->reader.join();
        ::close(c->fd);
    }
    m_queue_cv.notify_all();
}

void Gateway::accept_loop() {
    while (m_running) {
        pollfd pfd{m_listen_fd, POLLIN, 0};
        if (::poll(&pfd, 1, 50) <= 0) continue;
        const int fd = ::accept(m_listen_fd, nullptr, nullptr);
        if (fd < 0) continue;
        auto conn = std::make_shared<Connection>();
        conn->fd = fd;
        std::lock_guard lock(m_conn_mutex);
        conn->id = m_next_conn++;
        m_connections.push_back(conn);
        conn->reader = std::thread([this, conn] { read_loop(conn); });
    }
}

void Gateway::read_loop(std::shared_ptr<Connection> conn) {
    std::string buffer;
    char chunk[4096];
    while (true) {
        const ssize_t n = ::recv(conn->fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;

            Json ref = nullptr;
            try {
                const Json j = Json::parse(line);
                if (j.is_object() && j.contains("id")) ref = j.at("id");
                ClientMessage msg = parse_client_message(j);
                msg.connection = conn->id;
                std::unique_lock lock(m_queue_mutex);
                if (m_queue.size() >= m_queue_cap) {
                    lock.unlock();
                    throw Error(ErrorCode::QueueFull,
                                "inbound queue holds " + std::to_string(m_queue_cap) + " messages");
                }
                m_queue.push_back(std::move(msg));
                lock.unlock();
                m_queue_cv.notify_one();
            } catch (const Json::exception& e) {
                send_to(conn->id, "error", ref,
                        {{"t_abs_ms", m_clock_ms.load()}, {"code", "ProtocolViolation"}, {"text", e.what()}});
            } catch (const Error& e) {
                send_to(conn->id, "error", ref,
                        {{"t_abs_ms", m_clock_ms.load()}, {"code", std::string(to_string(e.code()))}, {"text", e.what()}});
            }
        }
    }
    conn->open = false;
}

void Gateway::write_line(Connection& conn, const std::string& line) {
    if (!conn.open) return;
    std::lock_guard lock(conn.write_mutex);
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n = ::send(conn.fd, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
            conn.open = false;
            return;
        }
        sent += static_cast<std::size_t>(n);
    }
}

Json Gateway::frame(const std::string& type, const Json& ref, Json body) {
    Json msg;
    msg["type"] = type;
    msg["seq"] = ++m_seq;
    msg["ref"] = ref;
    msg["body"] = std::move(body);
    return msg;
}

void Gateway::broadcast(const std::string& type, const Json& ref, Json body) {
    std::lock_guard send_lock(m_send_mutex);
    const std::string line = frame(type, ref, std::move(body)).dump() + "\n";
    std::vector<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lock(m_conn_mutex);
        conns = m_connections;
    }
    for (auto& c : conns) write_line(*c, line);
}

void Gateway::send_to(std::uint64_t connection, const std::string& type, const Json& ref, Json body) {
    std::lock_guard send_lock(m_send_mutex);
    std::shared_ptr<Connection> target;
    {
        std::lock_guard lock(m_conn_mutex);
        for (auto& c : m_connections) {
            if (c->id == connection) target = c;
        }
    }
    if (target) write_line(*target, frame(type, ref, std::move(body)).dump() + "\n");
}

std::optional<ClientMessage> Gateway::poll() {
    std::lock_guard lock(m_queue_mutex);
    if (m_queue.empty()) return std::nullopt;
    ClientMessage msg = std::move(m_queue.front());
    m_queue.pop_front();
    return msg;
}

std::optional<ClientMessage> Gateway::wait(int timeout_ms) {
    std::unique_lock lock(m_queue_mutex);
    m_queue_cv.wait_for(lock, std::chrono::milliseconds(timeout_ms), [this] { return !m_queue.empty(); });
    if (m_queue.empty()) return std::nullopt;
    ClientMessage msg = std::move(m_queue.front());
    m_queue.pop_front();
    return msg;
}

std::size_t Gateway::client_count() const {
    std::lock_guard lock(m_conn_mutex);
    std::size_t n = 0;
    for (const auto& c : m_connections) n += c->open ? 1 : 0;
    return n;
}

namespace {

std::string wire_type(OutEventKind kind) {
    switch (kind) {
        case OutEventKind::Proactive: return "proactive";
        case OutEventKind::Error: return "error";
        default: return "answer";
    }
}

Json memory_stats_body(Session& session, AbsMs now) {
    const auto st = session.memory().stats();
    Json body;
    body["t_abs_ms"] = now;
    body["segments"] = st.segments;
    body["atomic_actions"] = st.atomic_actions;
    body["events"] = st.events;
    body["kv_visual_count"] = session.kv().visual_count();
    return body;
}

Json control_body(AbsMs now, const std::string& text) {
    OutEvent ev{OutEventKind::Answer, now, std::nullopt, text, Json{{"control", text}}};
    return out_event_to_json(ev);
}

}  // namespace

int serve(const SessionConfig& cfg, std::ostream& err, const std::function<void(std::uint16_t)>& on_listening,
          const std::atomic<bool>* shutdown) {
    RuntimeConfig runtime;
    Scenario scenario;
    std::unique_ptr<ModelBackend> backend;
    std::pair<std::string, std::uint16_t> addr;
    try {
        if (!cfg.config_path.empty()) runtime = load_config(cfg.config_path);
        scenario = load_scenario(cfg.scenario_path);
        backend = backend_for(cfg, runtime);
        addr = parse_listen_address(cfg.listen.value_or("127.0.0.1:0"));
    } catch (const Error& e) {
        err << cfg.scenario_path.string() << ": " << e.what() << "\n";
        return kExitParse;
    }

    Gateway gateway(runtime.gateway_queue_cap);
    std::uint16_t port = 0;
    try {
        port = gateway.listen(addr.first, addr.second);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::PortBusy ? kExitPortBusy : kExitParse;
    }
    if (on_listening) on_listening(port);

    std::ofstream transcript;
    std::ofstream signals;
    std::ofstream memlog;
    if (!cfg.transcript_path.empty()) transcript.open(cfg.transcript_path, std::ios::trunc);
    if (!cfg.signals_path.empty()) signals.open(cfg.signals_path, std::ios::trunc);
    if (!cfg.memlog_path.empty()) memlog.open(cfg.memlog_path, std::ios::trunc);

    const auto stop_requested = [&] { return shutdown != nullptr && shutdown->load(); };

    try {
        Session session(*backend, runtime);
        std::map<std::uint64_t, Json> refs;  // session request id -> client id
        const auto ref_of = [&](const OutEvent& ev) -> Json {
            std::optional<std::uint64_t> qid = ev.query_id;
            if (!qid && ev.payload && ev.payload->contains("query_id")) {
                qid = ev.payload->at("query_id").get<std::uint64_t>();
            }
            if (!qid) return nullptr;
            const auto it = refs.find(*qid);
            return it == refs.end() ? Json(nullptr) : it->second;
        };
        session.set_event_sink([&](const OutEvent& ev) {
            const Json body = out_event_to_json(ev);
            if (transcript.is_open()) transcript << body.dump() << '\n';
            gateway.broadcast(wire_type(ev.kind), ref_of(ev), body);
        });
        session.set_signal_sink([&](const ProactiveSignal& s) {
            const Json body = signal_to_json(s);
            if (signals.is_open()) signals << body.dump() << '\n';
            gateway.broadcast("signal", nullptr, body);
        });
        if (memlog.is_open()) session.memory().set_mutation_log(&memlog);

        const AbsMs origin = scenario.events.empty() ? 0 : scenario.events.front().t_abs_ms();
        session.tools().register_source(scenario.id, scenario.frames(), origin);
        session.set_clip_source(scenario.id);

        bool paused = cfg.start_paused;
        const auto handle = [&](const ClientMessage& m, AbsMs now) {
            PendingRequest req;
            req.t_abs_ms = now;
            if (m.type == "query") {
                refs[session.enqueue_query(m.body.at("text").get<std::string>(), now)] = m.id;
                return;
            }
            if (m.type == "set_objective" || m.type == "evolve_objective" || m.type == "cancel_objective") {
                req.type = m.type == "set_objective"      ? PendingRequest::Type::SetObjective
                           : m.type == "evolve_objective" ? PendingRequest::Type::EvolveObjective
                                                          : PendingRequest::Type::CancelObjective;
                req.text = m.body.value("text", "");
                req.rid = m.body.value("rid", std::uint64_t{0});
                refs[session.enqueue(std::move(req))] = m.id;
                return;
            }
            if (m.type == "pause" || m.type == "resume") {
                paused = m.type == "pause";
                gateway.broadcast("answer", m.id, control_body(now, paused ? "paused" : "resumed"));
                return;
            }
            gateway.send_to(m.connection, "memory_stats", m.id, memory_stats_body(session, now));
        };

        ReplayHooks hooks;
        hooks.before_step = [&](AbsMs upcoming) {
            gateway.set_clock(upcoming);
            while (true) {
                while (auto m = gateway.poll()) handle(*m, upcoming);
                if (stop_requested()) return false;
                if (!paused) return true;
                if (auto m = gateway.wait(20)) handle(*m, upcoming);
            }
        };
        hooks.after_chunk = [&](const Chunk& chunk, const Session& s) {
            Json meta;
            meta["t_abs_ms"] = chunk.end_ms;
            meta["chunk_id"] = chunk.chunk_id;
            meta["start_ms"] = chunk.start_ms;
            meta["end_ms"] = chunk.end_ms;
            meta["frames"] = chunk.frames.size();
            meta["caption"] = s.window_caption();
            gateway.broadcast("chunk_meta", nullptr, meta);
            gateway.broadcast("memory_stats", nullptr, memory_stats_body(session, chunk.end_ms));
        };

        ScenarioReplayer replayer(session, runtime);
        replayer.replay(scenario, cfg.speed, hooks);
        session.drain_pending();
        gateway.set_clock(session.now_ms());

        // The stream is over; keep answering from the final context until shutdown.
        while (!cfg.exit_on_end && !stop_requested()) {
            if (auto m = gateway.wait(50)) {
                handle(*m, session.now_ms());
                session.drain_pending();
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::BackendUnavailable ? kExitBackend : kExitFailure;
    }
    gateway.stop();
    return kExitOk;
}

}  // namespace streamclaw
