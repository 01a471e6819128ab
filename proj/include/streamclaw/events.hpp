// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "streamclaw/feature.hpp"
#include "streamclaw/json.hpp"

namespace streamclaw {

enum class OutEventKind { Answer, Proactive, ToolResult, SkillExec, Error };

std::string_view to_string(OutEventKind kind);

struct OutEvent {
    OutEventKind kind = OutEventKind::Answer;
    AbsMs t_abs_ms = 0;
    std::optional<std::uint64_t> query_id;
    std::string text;
    std::optional<Json> payload;
};

/// One transcript line: kind, t_abs_ms, query_id, text, payload (always in that order).
Json out_event_to_json(const OutEvent& event);

}  // namespace streamclaw
