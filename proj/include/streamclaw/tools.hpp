// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamclaw/events.hpp"
#include "streamclaw/json.hpp"
#include "streamclaw/memory_store.hpp"
#include "streamclaw/model_backend.hpp"
#include "streamclaw/proactivity.hpp"
#include "streamclaw/skills.hpp"
#include "streamclaw/stream_ingest.hpp"

namespace streamclaw {

struct ToolArg {
    std::string name;
    std::string type;  // "string" | "number" | "integer"
    bool required = true;
    std::optional<Json> default_value;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ToolArg> args;
    std::string returns = "textual response";
};

/// Where a call runs on the session timeline. Skill results are written to
/// memory with this span.
struct CallContext {
    AbsMs now_ms = 0;
    AbsMs span_start_ms = 0;
    AbsMs span_end_ms = 0;
    std::optional<std::uint64_t> query_id;
};

/// Receives memory writes produced by tool and skill execution.
using MemorySink = std::function<void(const Chunk& span, const std::string& s, const std::string& c)>;

/// Registry and executor for built-in tools and loaded skill functions.
class ToolRuntime {
public:
    using SkillHandler = std::function<Json(const SkillCall& call, const CallContext& ctx)>;

    ToolRuntime(ModelBackend& backend, MemoryStore& memory, ProactivityEngine& proactivity, SkillRegistry& skills);

    const std::vector<ToolSpec>& tools() const { return m_tools; }

    /// Makes `frames` addressable by video_cut under `path`; times are seconds from `origin_ms`.
    void register_source(const std::string& path, std::vector<FrameRecord> frames, AbsMs origin_ms);

    void set_memory_sink(MemorySink sink) { m_memory_sink = std::move(sink); }
    void set_skill_handler(const std::string& function, SkillHandler handler);

    /// Cuts [start, end) out of a registered source and captions it. Text only.
    std::string video_cut(const std::string& query, const std::string& path, double start_time, double end_time);

    /// Salience-first retrieval under the reasoning view, rendered one hit per line.
    std::string call_memory(const std::string& query);

    /// Validates against the owning loaded manifest, dispatches, writes the
    /// result back to memory. Handler failures become an error event.
    OutEvent execute_skill_call(const SkillCall& call, const CallContext& ctx);

    /// Runs a built-in tool or a skill function by name.
    OutEvent invoke(const std::string& name, const Json& args, const CallContext& ctx);

    /// Built-in tools not backed by this runtime answer with a fixed notice.
    static constexpr std::string_view kUnsupported = "UNSUPPORTED: tool not available in this runtime";

    std::size_t memory_calls() const { return m_memory_calls; }

    /// True when the query names a time reference, selecting temporal retrieval.
    static bool has_time_reference(std::string_view query);

private:
    Json fill_tool_args(const ToolSpec& spec, const Json& args) const;
    void install_builtin_handlers();

    ModelBackend& m_backend;
    MemoryStore& m_memory;
    ProactivityEngine& m_proactivity;
    SkillRegistry& m_skills;
    std::vector<ToolSpec> m_tools;
    std::map<std::string, SkillHandler> m_handlers;
    struct Source {
        std::vector<FrameRecord> frames;
        AbsMs origin_ms = 0;
    };
    std::map<std::string, Source> m_sources;
    MemorySink m_memory_sink;
    std::size_t m_memory_calls = 0;
};

enum class StepOutcome { Done, Continue };

struct LoopResult {
    std::string final_text;
    std::vector<OutEvent> events;
    std::size_t backend_calls = 0;
    bool forced = false;
    bool failed = false;
};

/// Parse-call, execute, write-back, continue; at most one call per step and
/// at most `max_steps` backend decisions.
class AgenticLoop {
public:
    AgenticLoop(ModelBackend& backend, ToolRuntime& runtime, std::size_t max_steps = 8);

    /// Drives the backend's "plan" task until a final answer or the step cap.
    LoopResult run(const Json& plan_input, const CallContext& ctx);

    /// Handles one backend decision against the current loop state.
    StepOutcome agentic_step(const std::string& decision);

    std::size_t max_steps() const { return m_max_steps; }

private:
    ModelBackend& m_backend;
    ToolRuntime& m_runtime;
    std::size_t m_max_steps;

    // Per-run state.
    CallContext m_ctx;
    Json m_history = Json::array();
    LoopResult m_result;
    bool m_retried = false;
};

/// Parses the backend tool-call line shape {"tool": name, "args": {...}}.
/// Returns nullopt for plain text; throws SchemaViolation when the line looks
/// like a call but is malformed.
std::optional<SkillCall> parse_tool_call(const std::string& line);

}  // namespace streamclaw
