// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamclaw/json.hpp"
#include "streamclaw/model_backend.hpp"
#include "streamclaw/stream_ingest.hpp"

namespace streamclaw {

inline constexpr std::string_view kSilentToken = "<SILENT>";

enum class ReminderKind { TimeAware, EventGrounding };
enum class ReminderState { Armed, Fired, Cancelled };
enum class Recurrence { Once, Persistent };

std::string_view to_string(ReminderKind kind);
std::string_view to_string(ReminderState state);

struct ReminderNode {
    std::uint64_t rid = 0;
    ReminderKind kind = ReminderKind::TimeAware;
    std::optional<AbsMs> trigger_at_ms;           // time-aware only
    std::set<std::string> condition_labels;       // event-grounding only
    std::string condition_text;
    std::string response_template;
    std::string token;
    ReminderState state = ReminderState::Armed;
    Recurrence recurrence = Recurrence::Once;
    /// Set when the node was registered by a skill; firing runs that skill.
    std::optional<std::string> skill;
    std::size_t fire_count = 0;
};

Json reminder_to_json(const ReminderNode& node);

/// Data-driven mapping from a condition phrase to the frame labels that evidence it.
struct ConditionMapping {
    std::string text;
    std::vector<std::string> labels;
    std::string token;
    std::string response;
};

struct ProactivityConfig {
    std::vector<ConditionMapping> conditions;
    std::string time_token = "<TRIG:time_reminder>";
    std::string event_token = "<TRIG:event_reminder>";
    Recurrence default_recurrence = Recurrence::Once;
};

struct ProactiveSignal {
    std::string token;
    std::optional<std::uint64_t> rid;
    AbsMs t_abs_ms = 0;
    std::optional<std::string> response_text;
};

Json signal_to_json(const ProactiveSignal& signal);

/// Reminder-node lifecycle and per-chunk trigger matching. Owned by the
/// session loop; not thread-safe.
class ProactivityEngine {
public:
    ProactivityEngine(ModelBackend& backend, ProactivityConfig config = {});

    /// Adds `token` to the scenario-token table. "<SILENT>" is reserved.
    void register_token(const std::string& token);
    const std::set<std::string>& token_table() const { return m_tokens; }

    /// Parses "in N minute(s)/second(s)" into a time-aware node; otherwise
    /// matches the configured condition phrases. Throws UnparseableObjective.
    ReminderNode create_reminder(const std::string& query, AbsMs t_now);

    /// Registers a prebuilt node (skills use this). Assigns the rid.
    std::uint64_t add_node(ReminderNode node);

    /// Fires every matching armed node; emits a single <SILENT> when none fire.
    std::vector<ProactiveSignal> check_chunk(const Chunk& chunk);

    /// Re-parses the node's objective in place, or cancels it on "cancel".
    ReminderNode evolve_objective(std::uint64_t rid, const std::string& new_query, AbsMs t_now);

    std::string respond(const ReminderNode& node, const Chunk& chunk);

    std::optional<ReminderNode> node(std::uint64_t rid) const;
    std::vector<ReminderNode> nodes() const;

private:
    ReminderNode parse_objective(const std::string& query, AbsMs t_now) const;
    std::string render(const ReminderNode& node, const Chunk& chunk, const std::string& caption) const;
    /// Falls back to the rendered template when the backend is unreachable.
    std::string respond_with(const ReminderNode& node, const Chunk& chunk, const std::string& caption);

    ModelBackend& m_backend;
    ProactivityConfig m_config;
    std::map<std::uint64_t, ReminderNode> m_nodes;
    std::set<std::string> m_tokens;
    std::uint64_t m_next_rid = 1;
};

}  // namespace streamclaw
