// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/tools.hpp"

#include <cmath>
#include <fmt/format.h>

#include "streamclaw/error.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

namespace {

bool arg_type_matches(const std::string& type, const Json& v) {
    if (type == "string") return v.is_string();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    return false;
}

}  // namespace

ToolRuntime::ToolRuntime(ModelBackend& backend, MemoryStore& memory, ProactivityEngine& proactivity,
                         SkillRegistry& skills)
    : m_backend(backend), m_memory(memory), m_proactivity(proactivity), m_skills(skills) {
    m_tools = {
        {"video_cut",
         "Given two timestamps, propose the corresponding sub-clips and return the analysis results.",
         {{"query", "string", true, std::nullopt},
          {"path", "string", true, std::nullopt},
          {"start_time", "number", true, std::nullopt},
          {"end_time", "number", true, std::nullopt}}},
        {"call_memory",
         "Perform memory retrieval for the given query.",
         {{"query", "string", true, std::nullopt}}},
        {"load_skill", "Load a skill manifest so its functions can be called.", {{"name", "string", true, std::nullopt}}},
        {"web_search", "Search the web.", {{"query", "string", true, std::nullopt}}},
        {"image_zoom", "Magnify a region of the current frame.", {{"query", "string", true, std::nullopt}}},
    };
    m_memory_sink = [this](const Chunk& span, const std::string& s, const std::string& c) {
        m_memory.write_segment(span, s, c);
    };
    install_builtin_handlers();
}

void ToolRuntime::install_builtin_handlers() {
    m_handlers["driver_fatigue_warning"] = [](const SkillCall& call, const CallContext&) {
        return Json{{"fatigue_state", call.args.at("fatigue_state")}};
    };
    m_handlers["proactive_caring_inquiry"] = [](const SkillCall& call, const CallContext&) {
        return Json{{"query", call.args.at("query")}};
    };
    m_handlers["dial_emergency_number"] = [](const SkillCall& call, const CallContext&) {
        return Json{{"phone_num", call.args.at("phone_num")},
                    {"scene_description", call.args.value("scene_description", "")},
                    {"status", "dialing"}};
    };
    m_handlers["solve_problems"] = [this](const SkillCall& call, const CallContext&) {
        return Json{{"answer", m_backend.generate("solve", call.args)}};
    };
    m_handlers["create_proactive_node"] = [this](const SkillCall& call, const CallContext& ctx) {
        return reminder_to_json(m_proactivity.create_reminder(call.args.at("query").get<std::string>(), ctx.now_ms));
    };
}

void ToolRuntime::set_skill_handler(const std::string& function, SkillHandler handler) {
    m_handlers[function] = std::move(handler);
}

void ToolRuntime::register_source(const std::string& path, std::vector<FrameRecord> frames, AbsMs origin_ms) {
    m_sources[path] = {std::move(frames), origin_ms};
}

std::string ToolRuntime::video_cut(const std::string& query, const std::string& path, double start_time,
                                   double end_time) {
    if (!(end_time > start_time)) {
        throw Error(ErrorCode::InvalidTimeRange, "end time must be larger than start time");
    }
    auto it = m_sources.find(path);
    if (it == m_sources.end()) {
        throw Error(ErrorCode::SourceNotFound, "no video source '" + path + "'");
    }
    const AbsMs lo = it->second.origin_ms + static_cast<AbsMs>(std::llround(start_time * 1000.0));
    const AbsMs hi = it->second.origin_ms + static_cast<AbsMs>(std::llround(end_time * 1000.0));

    ClipRequest clip{query, path, start_time, end_time, {}};
    for (const auto& f : it->second.frames) {
        if (f.t_abs_ms >= lo && f.t_abs_ms < hi) clip.frames.push_back(f);
    }
    const Caption cap = m_backend.caption_clip(clip);
    return fmt::format("[{}-{}] {}", start_time, end_time, cap.summary);
}

bool ToolRuntime::has_time_reference(std::string_view query) {
    static const std::vector<std::string_view> kTimeWords = {
        "ago", "earlier", "before", "yesterday", "last time", "minute", "second", "hour"};
    const std::string q = text::to_lower(query);
    return std::any_of(kTimeWords.begin(), kTimeWords.end(),
                       [&](std::string_view w) { return q.find(w) != std::string::npos; });
}

std::string ToolRuntime::call_memory(const std::string& query) {
    ++m_memory_calls;
    RetrievalCommand cmd;
    cmd.query = query;
    cmd.mode = has_time_reference(query) ? RetrievalMode::Temporal : RetrievalMode::SingleFact;
    cmd.traversal = Traversal::SalienceFirst;
    cmd.budget = 64;
    cmd.top_k = 3;
    cmd.hit_threshold = 0.8;
    const auto result = m_memory.retrieve(cmd, AgentView::reasoning());
    if (result.hits.empty()) {
        return "NO_MEMORY";
    }
    std::vector<std::string> lines;
    for (const auto& h : result.hits) {
        lines.push_back("[" + std::to_string(h.start_ms) + "-" + std::to_string(h.tau) + "] " + h.s + " — " + h.c);
    }
    return text::join(lines, "\n");
}

OutEvent ToolRuntime::execute_skill_call(const SkillCall& call, const CallContext& ctx) {
    auto owner = m_skills.owner_of(call.name);
    if (!owner) {
        throw Error(ErrorCode::SkillNotFound, "no loaded skill provides '" + call.name + "'");
    }
    const SkillCall filled = validate_call(*owner->function(call.name), call);

    Json payload;
    payload["skill"] = owner->name;
    payload["name"] = filled.name;
    payload["args"] = filled.args;

    auto handler = m_handlers.find(filled.name);
    try {
        if (handler == m_handlers.end()) {
            throw Error(ErrorCode::UnknownTool, "no handler for '" + filled.name + "'");
        }
        payload["result"] = handler->second(filled, ctx);
    } catch (const std::exception& e) {
        payload["error"] = e.what();
        return {OutEventKind::Error, ctx.now_ms, ctx.query_id, "skill " + filled.name + " failed: " + e.what(),
                payload};
    }

    Chunk span;
    span.start_ms = ctx.span_start_ms;
    span.end_ms = ctx.span_end_ms;
    m_memory_sink(span, "skill:" + filled.name, payload["result"].dump());
    return {OutEventKind::SkillExec, ctx.now_ms, ctx.query_id, filled.name, payload};
}

Json ToolRuntime::fill_tool_args(const ToolSpec& spec, const Json& args) const {
    if (!args.is_object()) {
        throw Error(ErrorCode::SchemaViolation, spec.name + ": args must be an object");
    }
    Json filled = args;
    std::vector<std::string> unknown;
    std::vector<std::string> missing;
    for (const auto& [key, val] : args.items()) {
        auto it = std::find_if(spec.args.begin(), spec.args.end(), [&](const ToolArg& a) { return a.name == key; });
        if (it == spec.args.end() || !arg_type_matches(it->type, val)) unknown.push_back(key);
    }
    for (const auto& a : spec.args) {
        if (!filled.contains(a.name)) {
            if (a.default_value) {
                filled[a.name] = *a.default_value;
            } else if (a.required) {
                missing.push_back(a.name);
            }
        }
    }
    if (!unknown.empty() || !missing.empty()) {
        throw Error(ErrorCode::SchemaViolation, spec.name + ": missing [" + text::join(missing, ", ") +
                                                    "] unknown or mistyped [" + text::join(unknown, ", ") + "]");
    }
    return filled;
}

OutEvent ToolRuntime::invoke(const std::string& name, const Json& args, const CallContext& ctx) {
    auto spec = std::find_if(m_tools.begin(), m_tools.end(), [&](const ToolSpec& t) { return t.name == name; });
    if (spec == m_tools.end()) {
        if (m_skills.owner_of(name)) {
            return execute_skill_call({name, args}, ctx);
        }
        throw Error(ErrorCode::UnknownTool, "no tool or loaded skill function '" + name + "'");
    }

    const Json filled = fill_tool_args(*spec, args);
    std::string result;
    if (name == "video_cut") {
        result = video_cut(filled.at("query").get<std::string>(), filled.at("path").get<std::string>(),
                           filled.at("start_time").get<double>(), filled.at("end_time").get<double>());
    } else if (name == "call_memory") {
        result = call_memory(filled.at("query").get<std::string>());
    } else if (name == "load_skill") {
        const auto m = m_skills.load_skill(filled.at("name").get<std::string>());
        std::vector<std::string> fns;
        for (const auto& f : m->output_schemas) fns.push_back(f.name);
        result = "loaded " + m->name + ": " + text::join(fns, ", ");
    } else {
        result = std::string(kUnsupported);
    }
    Json payload;
    payload["tool"] = name;
    payload["args"] = filled;
    payload["result"] = result;
    return {OutEventKind::ToolResult, ctx.now_ms, ctx.query_id, result, payload};
}

std::optional<SkillCall> parse_tool_call(const std::string& line) {
    const std::string t = text::trim(line);
    if (t.empty() || t.front() != '{') {
        return std::nullopt;
    }
    Json j;
    try {
        j = Json::parse(t);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("unparseable tool call: ") + e.what());
    }
    if (!j.is_object() || !j.contains("tool") || !j.at("tool").is_string()) {
        throw Error(ErrorCode::SchemaViolation, "tool call lacks a string 'tool' field");
    }
    SkillCall call{j.at("tool").get<std::string>(), Json::object()};
    if (j.contains("args")) {
        if (!j.at("args").is_object()) throw Error(ErrorCode::SchemaViolation, "tool call 'args' must be an object");
        call.args = j.at("args");
    }
    return call;
}

AgenticLoop::AgenticLoop(ModelBackend& backend, ToolRuntime& runtime, std::size_t max_steps)
    : m_backend(backend), m_runtime(runtime), m_max_steps(max_steps) {}

StepOutcome AgenticLoop::agentic_step(const std::string& decision) {
    std::optional<SkillCall> call;
    try {
        call = parse_tool_call(decision);
    } catch (const Error& e) {
        if (!m_retried) {
            m_retried = true;
            m_history.push_back("RETRY: previous output was not a valid tool call (" + std::string(e.what()) +
                                "). Emit {\"tool\": <name>, \"args\": {...}} or a final answer.");
            return StepOutcome::Continue;
        }
        m_result.failed = true;
        m_result.events.push_back(
            {OutEventKind::Error, m_ctx.now_ms, m_ctx.query_id, std::string("agent loop aborted: ") + e.what(), {}});
        return StepOutcome::Done;
    }

    if (!call) {
        m_result.final_text = text::trim(decision);
        return StepOutcome::Done;
    }

    try {
        OutEvent ev = m_runtime.invoke(call->name, call->args, m_ctx);
        // Skill results are structured; the text is just the function name.
        const bool structured = ev.payload && ev.payload->is_object() && ev.payload->contains("result") &&
                                !ev.payload->at("result").is_string();
        m_history.push_back(call->name + " -> " + (structured ? ev.payload->at("result").dump() : ev.text));
        m_result.events.push_back(std::move(ev));
    } catch (const Error& e) {
        m_history.push_back(call->name + " -> ERROR " + e.what());
        m_result.events.push_back({OutEventKind::Error, m_ctx.now_ms, m_ctx.query_id, e.what(),
                                   Json{{"tool", call->name}, {"args", call->args}}});
    }
    return StepOutcome::Continue;
}

LoopResult AgenticLoop::run(const Json& plan_input, const CallContext& ctx) {
    m_ctx = ctx;
    m_history = Json::array();
    m_result = {};
    m_retried = false;

    while (m_result.backend_calls < m_max_steps) {
        Json input = plan_input;
        input["history"] = m_history;
        const std::string decision = m_backend.generate("plan", input);
        ++m_result.backend_calls;
        if (agentic_step(decision) == StepOutcome::Done) {
            return m_result;
        }
    }

    m_result.forced = true;
    std::vector<std::string> partial;
    for (const auto& h : m_history) partial.push_back(h.get<std::string>());
    m_result.final_text = "Step limit reached. Partial results: " + text::join(partial, "; ");
    return m_result;
}

}  // namespace streamclaw
