// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "streamclaw/config.hpp"
#include "streamclaw/orchestrator.hpp"
#include "streamclaw/stream_ingest.hpp"

namespace streamclaw {

struct QueryEvent {
    AbsMs t_abs_ms = 0;
    std::string text;
};

/// One replayable input, already aligned to the absolute timeline.
struct ScenarioEvent {
    std::size_t line = 0;
    std::variant<FrameRecord, QueryEvent> payload;

    AbsMs t_abs_ms() const;
};

struct Scenario {
    std::string id;
    std::vector<ScenarioEvent> events;  // stable-sorted by time
    std::vector<FrameRecord> frames() const;
};

/// Parses line-delimited anchor/frame/query records. Throws ScenarioParse
/// naming the offending line.
Scenario parse_scenario(std::istream& in, std::string id);
Scenario load_scenario(const std::filesystem::path& path);

/// Hooks the serve loop uses to interleave steering with replay.
struct ReplayHooks {
    /// Called before each scenario event and each chunk; returns false to stop.
    std::function<bool(AbsMs upcoming_ms)> before_step;
    std::function<void(const Chunk& chunk, const Session& session)> after_chunk;
};

/// Streams a scenario through a session: frames go through the shared cache,
/// chunks are cut on the timeline and handed to the session in order.
class ScenarioReplayer {
public:
    ScenarioReplayer(Session& session, const RuntimeConfig& config);

    /// speed 0 replays as fast as possible; otherwise sleeps scaled wall time.
    void replay(const Scenario& scenario, double speed, const ReplayHooks& hooks = {});

    const SharedStreamCache& cache() const { return m_cache; }
    AbsMs clock_ms() const { return m_clock_ms; }

private:
    void process_chunk(const Chunk& chunk, const ReplayHooks& hooks);

    Session& m_session;
    SharedStreamCache m_cache;
    ChunkCutter m_cutter;
    AbsMs m_clock_ms = 0;
};

struct SessionConfig {
    std::filesystem::path scenario_path;
    std::filesystem::path config_path;
    double speed = 0.0;
    std::string backend = "mock";
    std::filesystem::path transcript_path;
    std::filesystem::path signals_path;
    std::filesystem::path memlog_path;
    std::optional<std::string> listen;
    bool start_paused = false;
    bool exit_on_end = false;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitParse = 2,
    kExitBackend = 3,
    kExitPortBusy = 4,
};

/// Loads config, scenario and backend; STREAMCLAW_BACKEND is consulted when
/// cfg.backend is empty.
std::unique_ptr<ModelBackend> backend_for(const SessionConfig& cfg, const RuntimeConfig& runtime);

/// Replays a scenario end to end and writes transcript, signal log and memory
/// log. Diagnostics go to `err`.
int run_scenario(const SessionConfig& cfg, std::ostream& err);

}  // namespace streamclaw
