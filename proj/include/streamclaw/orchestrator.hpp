// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "streamclaw/config.hpp"
#include "streamclaw/events.hpp"
#include "streamclaw/kv_window.hpp"
#include "streamclaw/memory_store.hpp"
#include "streamclaw/model_backend.hpp"
#include "streamclaw/proactivity.hpp"
#include "streamclaw/skills.hpp"
#include "streamclaw/tools.hpp"

namespace streamclaw {

/// A steering request queued onto the session loop.
struct PendingRequest {
    enum class Type { Query, SetObjective, EvolveObjective, CancelObjective };
    Type type = Type::Query;
    std::uint64_t request_id = 0;
    std::string text;
    std::uint64_t rid = 0;
    AbsMs t_abs_ms = 0;
};

/// Per-chunk accounting of the KV cycle.
struct CycleStats {
    std::int64_t chunk_id = 0;
    std::size_t written = 0;
    std::size_t skipped = 0;
    std::size_t pre_prune_visual = 0;
    std::size_t pruned = 0;
    std::size_t offloaded = 0;
    std::size_t visual_after = 0;
    std::size_t segments_written = 0;
};

/// Call-count probes for routing.
struct RouteProbes {
    std::size_t direct = 0;
    std::size_t memory = 0;
    std::size_t proactive = 0;
    std::size_t reminders_created = 0;
};

/// The main agent loop: one session, one sequential event loop over chunks.
class Session {
public:
    Session(ModelBackend& backend, RuntimeConfig config);

    /// Loads a skill and arms its label triggers as a persistent reminder node.
    std::shared_ptr<const SkillManifest> load_skill(const std::string& name);

    /// Queues a user query; drained at the next chunk boundary. Returns its id.
    std::uint64_t enqueue_query(const std::string& text, AbsMs t_abs_ms);
    std::uint64_t enqueue(PendingRequest request);
    std::size_t pending_count() const { return m_pending.size(); }

    /// One streaming round: time update, visual write, proactivity check,
    /// query drain, decode + prune, window slide. Throws ChunkGap on id gaps.
    std::vector<OutEvent> on_chunk(const Chunk& chunk);

    /// Routes one query down exactly one of the proactive, memory or direct paths.
    /// Tool and skill events produced on the way are appended to `side_events`.
    OutEvent route_query(std::uint64_t query_id, const std::string& text, AbsMs t_abs_ms,
                         std::vector<OutEvent>* side_events = nullptr);

    /// NOW_ABS_MS=<now>\nSKILLS:[ entries]\nWINDOW:[ caption]
    std::string build_prompt() const;

    /// Answers queued requests against the current context without a new chunk.
    /// Used once the stream has ended.
    std::vector<OutEvent> drain_pending();

    /// Writes every chunk still inside the window to memory (end of stream).
    void finish();

    void set_event_sink(std::function<void(const OutEvent&)> sink) { m_event_sink = std::move(sink); }
    void set_signal_sink(std::function<void(const ProactiveSignal&)> sink) { m_signal_sink = std::move(sink); }
    /// Names the video source that video_cut resolves for this session.
    void set_clip_source(std::string path) { m_clip_source = std::move(path); }

    AbsMs now_ms() const { return m_now_ms; }
    const std::string& window_caption() const { return m_window_caption; }
    const std::vector<OutEvent>& transcript() const { return m_transcript; }
    const std::vector<ProactiveSignal>& signals() const { return m_signals; }
    const std::vector<std::string>& trace() const { return m_trace; }
    const std::vector<CycleStats>& cycles() const { return m_cycles; }
    const RouteProbes& probes() const { return m_probes; }
    const RuntimeConfig& config() const { return m_config; }

    KVWindow& kv() { return m_kv; }
    MemoryStore& memory() { return m_memory; }
    ProactivityEngine& proactivity() { return m_proactivity; }
    SkillRegistry& skills() { return m_skills; }
    ToolRuntime& tools() { return m_tools; }
    ModelBackend& backend() { return m_backend; }

private:
    struct WindowItem {
        Chunk chunk;
        Caption caption;
    };

    void emit(std::vector<OutEvent>& out, OutEvent ev);
    void drain_into(std::vector<OutEvent>& out);
    std::vector<OutEvent> run_skill_trigger(const ReminderNode& node, const Chunk& chunk);
    OutEvent handle_request(const PendingRequest& req, std::vector<OutEvent>& side);
    void refresh_window_caption();
    void forward_to_memory(AbsMs cutoff_ms);
    Json plan_hints() const;

    ModelBackend& m_backend;
    RuntimeConfig m_config;
    KVWindow m_kv;
    MemoryStore m_memory;
    ProactivityEngine m_proactivity;
    SkillRegistry m_skills;
    ToolRuntime m_tools;
    AgenticLoop m_loop;

    AbsMs m_now_ms = 0;
    std::optional<std::int64_t> m_expected_chunk;
    std::string m_window_caption;
    std::string m_clip_source;
    std::deque<PendingRequest> m_pending;
    std::uint64_t m_next_request_id = 1;
    std::deque<WindowItem> m_window;
    std::vector<OutEvent> m_transcript;
    std::vector<ProactiveSignal> m_signals;
    std::vector<std::string> m_trace;
    std::vector<CycleStats> m_cycles;
    RouteProbes m_probes;
    std::function<void(const OutEvent&)> m_event_sink;
    std::function<void(const ProactiveSignal&)> m_signal_sink;
};

}  // namespace streamclaw
