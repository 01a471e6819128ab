// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/orchestrator.hpp"

#include <cmath>
#include <set>

#include "streamclaw/error.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

Session::Session(ModelBackend& backend, RuntimeConfig config)
    : m_backend(backend),
      m_config(std::move(config)),
      m_kv(m_config.kv),
      m_memory(backend, m_config.memory),
      m_proactivity(backend, m_config.proactive),
      m_tools(backend, m_memory, m_proactivity, m_skills),
      m_loop(backend, m_tools, m_config.agent_max_steps) {
    // Skill results join the window queue so memory writes stay in time order.
    m_tools.set_memory_sink([this](const Chunk& span, const std::string& s, const std::string& c) {
        m_window.push_back({span, {s, c}});
    });
    if (!m_config.skills_dir.empty()) {
        m_skills.discover(m_config.skills_dir);
    }
    for (const auto& name : m_config.skills) {
        load_skill(name);
    }
}

std::shared_ptr<const SkillManifest> Session::load_skill(const std::string& name) {
    const bool was_loaded = m_skills.is_loaded(name);
    auto manifest = m_skills.load_skill(name);
    if (!was_loaded && !manifest->triggers.empty()) {
        ReminderNode node;
        node.kind = ReminderKind::EventGrounding;
        node.condition_labels = manifest->trigger_labels();
        node.condition_text = manifest->name;
        node.response_template = manifest->response.empty() ? "{labels}" : manifest->response;
        node.token = manifest->token;
        node.recurrence = Recurrence::Persistent;
        node.skill = manifest->name;
        m_proactivity.add_node(std::move(node));
    }
    return manifest;
}

std::uint64_t Session::enqueue_query(const std::string& text, AbsMs t_abs_ms) {
    PendingRequest req;
    req.type = PendingRequest::Type::Query;
    req.text = text;
    req.t_abs_ms = t_abs_ms;
    return enqueue(std::move(req));
}

std::uint64_t Session::enqueue(PendingRequest request) {
    request.request_id = m_next_request_id++;
    const auto id = request.request_id;
    m_pending.push_back(std::move(request));
    return id;
}

void Session::emit(std::vector<OutEvent>& out, OutEvent ev) {
    m_transcript.push_back(ev);
    if (m_event_sink) m_event_sink(ev);
    out.push_back(std::move(ev));
}

void Session::refresh_window_caption() {
    Chunk all;
    for (const auto& item : m_window) {
        all.frames.insert(all.frames.end(), item.chunk.frames.begin(), item.chunk.frames.end());
    }
    m_window_caption = m_backend.caption_chunk(all).summary;
}

std::string Session::build_prompt() const {
    std::string prompt = "NOW_ABS_MS=" + std::to_string(m_now_ms) + "\nSKILLS:";
    const auto entries = m_skills.prompt_entries();
    if (!entries.empty()) {
        prompt += " " + text::join(entries, "; ");
    }
    prompt += "\nWINDOW:";
    if (!m_window_caption.empty()) {
        prompt += " " + m_window_caption;
    }
    return prompt;
}

std::vector<OutEvent> Session::on_chunk(const Chunk& chunk) {
    if (m_expected_chunk && chunk.chunk_id != *m_expected_chunk) {
        throw Error(ErrorCode::ChunkGap, "expected chunk " + std::to_string(*m_expected_chunk) + ", got " +
                                             std::to_string(chunk.chunk_id));
    }
    m_expected_chunk = chunk.chunk_id + 1;

    std::vector<OutEvent> out;
    CycleStats stats;
    stats.chunk_id = chunk.chunk_id;

    // (1) clock and prompt timestamp
    m_trace.push_back("update_time");
    m_now_ms = std::max(m_now_ms, chunk.end_ms);
    m_window.push_back({chunk, m_backend.caption_chunk(chunk)});
    refresh_window_caption();

    // (2) visual tokens
    m_trace.push_back("write_visual");
    std::vector<TokenWrite> tokens;
    tokens.reserve(chunk.frames.size());
    for (const auto& f : chunk.frames) {
        const Feature feat = f.feature_or_zero();
        tokens.push_back({feat, feat, f.t_abs_ms});
    }
    const auto written = m_kv.write_visual_tokens(tokens);
    stats.written = written.written;
    stats.skipped = written.skipped;

    // (3) silent proactivity pass
    m_trace.push_back("proactivity");
    for (auto& signal : m_proactivity.check_chunk(chunk)) {
        m_signals.push_back(signal);
        if (m_signal_sink) m_signal_sink(signal);
        if (!signal.rid) continue;
        const auto node = m_proactivity.node(*signal.rid);
        Json payload;
        payload["rid"] = *signal.rid;
        payload["token"] = signal.token;
        payload["kind"] = node ? Json(to_string(node->kind)) : Json(nullptr);
        emit(out, {OutEventKind::Proactive, chunk.end_ms, std::nullopt, signal.response_text.value_or(""), payload});
        if (node && node->skill) {
            for (auto& ev : run_skill_trigger(*node, chunk)) emit(out, std::move(ev));
        }
    }

    // (4) queued queries and steering requests
    m_trace.push_back("drain_queries");
    drain_into(out);

    // (5) decode, score, prune
    m_trace.push_back("decode_prune");
    const auto snapshot = m_kv.snapshot();
    for (const auto& step : m_backend.decode(build_prompt(), snapshot)) {
        m_kv.apply_attention(step.attn_scores);
    }
    stats.pre_prune_visual = m_kv.visual_count();
    stats.pruned = m_kv.prune_top_p().size();

    // (6) slide the window and hand aged-out chunks to memory
    m_trace.push_back("slide_window");
    stats.offloaded = m_kv.slide_window(m_now_ms).size();
    const auto window_ms = static_cast<AbsMs>(std::llround(m_config.kv.window_seconds * 1000.0));
    const std::size_t before = m_memory.stats().segments;
    forward_to_memory(m_now_ms - window_ms);
    stats.segments_written = m_memory.stats().segments - before;
    stats.visual_after = m_kv.visual_count();
    m_cycles.push_back(stats);
    return out;
}

std::vector<OutEvent> Session::drain_pending() {
    std::vector<OutEvent> out;
    drain_into(out);
    return out;
}

void Session::drain_into(std::vector<OutEvent>& out) {
    while (!m_pending.empty()) {
        PendingRequest req = std::move(m_pending.front());
        m_pending.pop_front();
        std::vector<OutEvent> side;
        OutEvent answer = handle_request(req, side);
        for (auto& ev : side) emit(out, std::move(ev));
        emit(out, std::move(answer));
    }
}

void Session::forward_to_memory(AbsMs cutoff_ms) {
    while (!m_window.empty() && m_window.front().chunk.end_ms <= cutoff_ms) {
        const auto item = std::move(m_window.front());
        m_window.pop_front();
        m_memory.write_segment(item.chunk, item.caption.summary, item.caption.detail);
    }
}

void Session::finish() {
    while (!m_window.empty()) {
        const auto item = std::move(m_window.front());
        m_window.pop_front();
        m_memory.write_segment(item.chunk, item.caption.summary, item.caption.detail);
    }
}

std::vector<OutEvent> Session::run_skill_trigger(const ReminderNode& node, const Chunk& chunk) {
    std::vector<OutEvent> out;
    auto manifest = m_skills.load_skill(*node.skill);
    std::set<std::string> observed;
    for (const auto& f : chunk.frames) observed.insert(f.labels.begin(), f.labels.end());
    const auto call = manifest->call_for_labels(observed);
    if (!call) return out;

    const CallContext ctx{chunk.end_ms, chunk.start_ms, chunk.end_ms, std::nullopt};
    try {
        out.push_back(m_tools.execute_skill_call(*call, ctx));
    } catch (const Error& e) {
        out.push_back({OutEventKind::Error, chunk.end_ms, std::nullopt, e.what(),
                       Json{{"skill", manifest->name}, {"name", call->name}}});
    }
    return out;
}

Json Session::plan_hints() const {
    Json calls = Json::array();
    for (const auto& m : m_skills.loaded()) {
        for (const auto& [fn, phrases] : m->invoke_phrases) {
            const FunctionSchema* schema = m->function(fn);
            bool query_arg = false;
            for (const auto& p : schema->properties) query_arg = query_arg || p.name == "query";
            calls.push_back({{"function", fn}, {"phrases", phrases}, {"query_arg", query_arg}});
        }
    }
    return calls;
}

OutEvent Session::handle_request(const PendingRequest& req, std::vector<OutEvent>& side) {
    using Type = PendingRequest::Type;
    if (req.type == Type::Query) {
        return route_query(req.request_id, req.text, req.t_abs_ms, &side);
    }

    OutEvent ev{OutEventKind::Answer, m_now_ms, req.request_id, "", Json::object()};
    try {
        ReminderNode node;
        if (req.type == Type::SetObjective) {
            node = m_proactivity.create_reminder(req.text, req.t_abs_ms);
            ++m_probes.reminders_created;
            ev.text = "Objective #" + std::to_string(node.rid) + " armed.";
        } else if (req.type == Type::EvolveObjective) {
            node = m_proactivity.evolve_objective(req.rid, req.text, req.t_abs_ms);
            ev.text = "Objective #" + std::to_string(node.rid) + " updated.";
        } else {
            node = m_proactivity.evolve_objective(req.rid, "cancel", req.t_abs_ms);
            ev.text = "Objective #" + std::to_string(node.rid) + " cancelled.";
        }
        (*ev.payload)["reminder"] = reminder_to_json(node);
    } catch (const Error& e) {
        ev.kind = OutEventKind::Error;
        ev.text = e.what();
        (*ev.payload)["error"] = std::string(to_string(e.code()));
    }
    return ev;
}

OutEvent Session::route_query(std::uint64_t query_id, const std::string& text, AbsMs t_abs_ms,
                              std::vector<OutEvent>* side_events) {
    // Keep the query in working context as a textual KV entry.
    const Feature q_emb = m_backend.embed_text(text);
    m_kv.write_textual_token({q_emb, q_emb, m_now_ms});

    OutEvent ev{OutEventKind::Answer, m_now_ms, query_id, "", Json::object()};
    try {
        const QueryRoute route = m_backend.classify_query(text);
        (*ev.payload)["route"] = to_string(route);
        switch (route) {
            case QueryRoute::Proactive: {
                ++m_probes.proactive;
                try {
                    const ReminderNode node = m_proactivity.create_reminder(text, t_abs_ms);
                    ++m_probes.reminders_created;
                    ev.text = "OK. Reminder #" + std::to_string(node.rid) + " set";
                    if (node.trigger_at_ms) {
                        ev.text += " for " + std::to_string(*node.trigger_at_ms) + ".";
                    } else {
                        ev.text += " for: " + node.condition_text + ".";
                    }
                    (*ev.payload)["reminder"] = reminder_to_json(node);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::UnparseableObjective) throw;
                    ev.text = "Could you clarify when, or on which event, I should remind you?";
                    (*ev.payload)["error"] = std::string(to_string(e.code()));
                }
                break;
            }
            case QueryRoute::Memory: {
                ++m_probes.memory;
                const std::string rewritten = m_backend.generate("rewrite", {{"query", text}});
                const std::string recalled = m_tools.call_memory(rewritten);
                ev.text = m_backend.generate("answer", {{"route", "memory"},
                                                        {"query", text},
                                                        {"caption", m_window_caption},
                                                        {"memory", recalled}});
                (*ev.payload)["rewritten_query"] = rewritten;
                (*ev.payload)["memory"] = recalled;
                break;
            }
            case QueryRoute::Direct: {
                ++m_probes.direct;
                Json input;
                input["query"] = text;
                input["prompt"] = build_prompt();
                input["caption"] = m_window_caption;
                input["calls"] = plan_hints();
                input["clip_path"] = m_clip_source;
                const CallContext ctx{m_now_ms, m_window.empty() ? m_now_ms : m_window.back().chunk.start_ms,
                                      m_now_ms, query_id};
                LoopResult loop = m_loop.run(input, ctx);
                if (side_events) {
                    for (auto& e : loop.events) {
                        if (e.kind == OutEventKind::Error) {
                            // Only the final answer carries the query id.
                            e.query_id.reset();
                            if (!e.payload) e.payload = Json::object();
                            (*e.payload)["query_id"] = query_id;
                        }
                        side_events->push_back(std::move(e));
                    }
                }
                if (loop.failed) {
                    ev.kind = OutEventKind::Error;
                    ev.text = "agent loop could not parse the model's tool call";
                } else {
                    ev.text = loop.final_text;
                }
                (*ev.payload)["steps"] = loop.backend_calls;
                if (loop.forced) (*ev.payload)["forced"] = true;
                break;
            }
        }
    } catch (const Error& e) {
        ev.kind = OutEventKind::Error;
        ev.text = e.what();
        (*ev.payload)["error"] = std::string(to_string(e.code()));
    }
    return ev;
}

}  // namespace streamclaw
