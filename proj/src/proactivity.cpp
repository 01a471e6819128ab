// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/proactivity.hpp"

#include <regex>

#include "streamclaw/error.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

std::string_view to_string(ReminderKind kind) {
    return kind == ReminderKind::TimeAware ? "time_aware" : "event_grounding";
}

std::string_view to_string(ReminderState state) {
    switch (state) {
        case ReminderState::Armed: return "armed";
        case ReminderState::Fired: return "fired";
        case ReminderState::Cancelled: return "cancelled";
    }
    return "armed";
}

Json reminder_to_json(const ReminderNode& node) {
    Json j;
    j["rid"] = node.rid;
    j["kind"] = to_string(node.kind);
    j["trigger_at_ms"] = node.trigger_at_ms ? Json(*node.trigger_at_ms) : Json(nullptr);
    j["condition_labels"] = node.condition_labels;
    j["condition_text"] = node.condition_text;
    j["token"] = node.token;
    j["state"] = to_string(node.state);
    j["recurrence"] = node.recurrence == Recurrence::Once ? "once" : "persistent";
    return j;
}

Json signal_to_json(const ProactiveSignal& signal) {
    Json j;
    j["t_abs_ms"] = signal.t_abs_ms;
    j["token"] = signal.token;
    j["rid"] = signal.rid ? Json(*signal.rid) : Json(nullptr);
    j["response"] = signal.response_text ? Json(*signal.response_text) : Json(nullptr);
    return j;
}

ProactivityEngine::ProactivityEngine(ModelBackend& backend, ProactivityConfig config)
    : m_backend(backend), m_config(std::move(config)) {
    register_token(m_config.time_token);
    register_token(m_config.event_token);
    for (const auto& c : m_config.conditions) {
        if (!c.token.empty()) register_token(c.token);
    }
}

void ProactivityEngine::register_token(const std::string& token) {
    if (token == kSilentToken) {
        throw Error(ErrorCode::ConfigInvalid, "<SILENT> is reserved");
    }
    m_tokens.insert(token);
}

ReminderNode ProactivityEngine::parse_objective(const std::string& query, AbsMs t_now) const {
    ReminderNode node;
    node.recurrence = m_config.default_recurrence;
    node.condition_text = text::trim(query);

    static const std::regex kDuration(R"(\bin\s+(\d+)\s*(minutes?|mins?|seconds?|secs?)\b)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(query, m, kDuration)) {
        const auto n = std::stoll(m[1].str());
        const bool minutes = std::tolower(static_cast<unsigned char>(m[2].str().front())) == 'm';
        node.kind = ReminderKind::TimeAware;
        node.trigger_at_ms = t_now + n * (minutes ? 60'000 : 1'000);
        node.token = m_config.time_token;
        node.recurrence = Recurrence::Once;

        static const std::regex kAction(R"(remind me to\s+(.+?)\s+in\s+\d+)", std::regex::icase);
        static const std::regex kAbout(R"(remind me (?:of|about)\s+(.+?)\s+in\s+\d+)", std::regex::icase);
        if (std::regex_search(query, m, kAction)) {
            node.response_template = "Time is up. Please get ready to " + m[1].str();
        } else if (std::regex_search(query, m, kAbout)) {
            node.response_template = "Time is up. Here is " + m[1].str() + ": {labels}";
        } else {
            node.response_template = "Time is up. " + node.condition_text;
        }
        return node;
    }

    std::vector<std::string> texts;
    for (const auto& mapping : m_config.conditions) {
        if (!text::contains_ci(query, mapping.text)) continue;
        if (texts.empty()) {
            node.token = mapping.token.empty() ? m_config.event_token : mapping.token;
            node.response_template = mapping.response.empty() ? "Detected {labels}." : mapping.response;
        }
        texts.push_back(mapping.text);
        node.condition_labels.insert(mapping.labels.begin(), mapping.labels.end());
    }
    if (texts.empty() || node.condition_labels.empty()) {
        throw Error(ErrorCode::UnparseableObjective, "cannot derive a trigger from '" + query + "'");
    }
    node.kind = ReminderKind::EventGrounding;
    node.condition_text = text::join(texts, "; ");
    return node;
}

ReminderNode ProactivityEngine::create_reminder(const std::string& query, AbsMs t_now) {
    ReminderNode node = parse_objective(query, t_now);
    node.rid = m_next_rid++;
    node.state = ReminderState::Armed;
    m_nodes.emplace(node.rid, node);
    return node;
}

std::uint64_t ProactivityEngine::add_node(ReminderNode node) {
    node.rid = m_next_rid++;
    if (!node.token.empty()) register_token(node.token);
    const auto rid = node.rid;
    m_nodes.emplace(rid, std::move(node));
    return rid;
}

std::vector<ProactiveSignal> ProactivityEngine::check_chunk(const Chunk& chunk) {
    std::set<std::string> chunk_labels;
    for (const auto& f : chunk.frames) chunk_labels.insert(f.labels.begin(), f.labels.end());

    std::vector<ProactiveSignal> signals;
    std::optional<std::string> caption;
    for (auto& [rid, node] : m_nodes) {
        if (node.state != ReminderState::Armed) continue;
        bool fire = false;
        if (node.kind == ReminderKind::TimeAware) {
            fire = node.trigger_at_ms && chunk.end_ms >= *node.trigger_at_ms;
        } else {
            for (const auto& l : node.condition_labels) {
                if (chunk_labels.contains(l)) {
                    fire = true;
                    break;
                }
            }
        }
        if (!fire) continue;

        if (!caption) caption = m_backend.caption_chunk(chunk).summary;
        std::string response = respond_with(node, chunk, *caption);

        ++node.fire_count;
        // Time-aware nodes have a single deadline, so they never recur.
        if (node.recurrence == Recurrence::Once || node.kind == ReminderKind::TimeAware) {
            node.state = ReminderState::Fired;
        }
        signals.push_back({node.token, rid, chunk.end_ms, std::move(response)});
    }
    if (signals.empty()) {
        signals.push_back({std::string(kSilentToken), std::nullopt, chunk.end_ms, std::nullopt});
    }
    return signals;
}

ReminderNode ProactivityEngine::evolve_objective(std::uint64_t rid, const std::string& new_query, AbsMs t_now) {
    auto it = m_nodes.find(rid);
    if (it == m_nodes.end()) {
        throw Error(ErrorCode::UnknownReminder, "no reminder " + std::to_string(rid));
    }
    ReminderNode& node = it->second;
    if (node.state == ReminderState::Cancelled) {
        throw Error(ErrorCode::ReminderCancelled, "reminder " + std::to_string(rid) + " was cancelled");
    }
    if (text::to_lower(text::trim(new_query)) == "cancel") {
        node.state = ReminderState::Cancelled;
        return node;
    }
    ReminderNode parsed = parse_objective(new_query, t_now);
    node.kind = parsed.kind;
    node.trigger_at_ms = parsed.trigger_at_ms;
    node.condition_labels = std::move(parsed.condition_labels);
    node.condition_text = std::move(parsed.condition_text);
    node.response_template = std::move(parsed.response_template);
    node.token = std::move(parsed.token);
    node.state = ReminderState::Armed;
    return node;
}

std::string ProactivityEngine::render(const ReminderNode& node, const Chunk& chunk, const std::string& caption) const {
    std::string out = text::replace_all(node.response_template, "{time}", std::to_string(chunk.end_ms));
    return text::replace_all(std::move(out), "{labels}", caption);
}

std::string ProactivityEngine::respond_with(const ReminderNode& node, const Chunk& chunk,
                                            const std::string& caption) {
    const std::string rendered = render(node, chunk, caption);
    try {
        return m_backend.generate("respond", {{"rendered", rendered},
                                              {"template", node.response_template},
                                              {"caption", caption},
                                              {"time", chunk.end_ms}});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::BackendUnavailable) throw;
        return rendered;
    }
}

std::string ProactivityEngine::respond(const ReminderNode& node, const Chunk& chunk) {
    return respond_with(node, chunk, m_backend.caption_chunk(chunk).summary);
}

std::optional<ReminderNode> ProactivityEngine::node(std::uint64_t rid) const {
    auto it = m_nodes.find(rid);
    if (it == m_nodes.end()) return std::nullopt;
    return it->second;
}

std::vector<ReminderNode> ProactivityEngine::nodes() const {
    std::vector<ReminderNode> out;
    for (const auto& [rid, n] : m_nodes) out.push_back(n);
    return out;
}

}  // namespace streamclaw
