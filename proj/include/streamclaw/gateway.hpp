// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "streamclaw/json.hpp"
#include "streamclaw/scenario.hpp"

namespace streamclaw {

/// A validated client message waiting for the session loop.
struct ClientMessage {
    std::uint64_t connection = 0;
    std::string type;
    Json id;  // echoed back as `ref`
    Json body;
};

/// Checks a decoded line against the client half of the catalog. Throws
/// ProtocolViolation naming the offending field.
ClientMessage parse_client_message(const Json& j);

/// Splits "host:port". Throws ConfigInvalid.
std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& addr);

/// Newline-delimited JSON over TCP. Connection threads decode and queue
/// inbound messages; the session loop polls them and broadcasts replies.
class Gateway {
public:
    explicit Gateway(std::size_t queue_cap);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds and starts accepting. Port 0 picks a free port. Throws PortBusy.
    std::uint16_t listen(const std::string& host, std::uint16_t port);
    void stop();

    /// Stamps seq and sends `{type, seq, ref, body}` to every client.
    void broadcast(const std::string& type, const Json& ref, Json body);
    /// Same framing but only to one connection.
    void send_to(std::uint64_t connection, const std::string& type, const Json& ref, Json body);

    std::optional<ClientMessage> poll();
    /// Blocks up to `timeout_ms` for an inbound message.
    std::optional<ClientMessage> wait(int timeout_ms);

    std::size_t client_count() const;
    /// Session time stamped on errors raised before a message reaches the loop.
    void set_clock(std::int64_t t_abs_ms) { m_clock_ms = t_abs_ms; }
    std::uint64_t last_seq() const { return m_seq.load(); }

private:
    struct Connection {
        std::uint64_t id = 0;
        int fd = -1;
        std::mutex write_mutex;
        std::thread reader;
        std::atomic<bool> open{true};
    };

    void accept_loop();
    void read_loop(std::shared_ptr<Connection> conn);
    void write_line(Connection& conn, const std::string& line);
    Json frame(const std::string& type, const Json& ref, Json body);

    std::size_t m_queue_cap;
    int m_listen_fd = -1;
    std::atomic<bool> m_running{false};
    std::thread m_acceptor;

    mutable std::mutex m_conn_mutex;
    std::vector<std::shared_ptr<Connection>> m_connections;
    std::uint64_t m_next_conn = 1;

    std::mutex m_send_mutex;  // keeps seq order equal to wire order
    std::atomic<std::uint64_t> m_seq{0};
    std::atomic<std::int64_t> m_clock_ms{0};

    std::mutex m_queue_mutex;
    std::condition_variable m_queue_cv;
    std::deque<ClientMessage> m_queue;
};

/// Replays a scenario while serving the gateway. `on_listening` receives the
/// bound port. Returns an exit code; 4 when the port is taken.
int serve(const SessionConfig& cfg, std::ostream& err,
          const std::function<void(std::uint16_t)>& on_listening = {},
          const std::atomic<bool>* shutdown = nullptr);

}  // namespace streamclaw
