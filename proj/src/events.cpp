// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/events.hpp"

namespace streamclaw {

std::string_view to_string(OutEventKind kind) {
    switch (kind) {
        case OutEventKind::Answer: return "answer";
        case OutEventKind::Proactive: return "proactive";
        case OutEventKind::ToolResult: return "tool_result";
        case OutEventKind::SkillExec: return "skill_exec";
        case OutEventKind::Error: return "error";
    }
    return "error";
}

Json out_event_to_json(const OutEvent& event) {
    Json j;
    j["kind"] = to_string(event.kind);
    j["t_abs_ms"] = event.t_abs_ms;
    j["query_id"] = event.query_id ? Json(*event.query_id) : Json(nullptr);
    j["text"] = event.text;
    j["payload"] = event.payload ? *event.payload : Json(nullptr);
    return j;
}

}  // namespace streamclaw
