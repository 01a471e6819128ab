// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "streamclaw/json.hpp"
#include "streamclaw/kv_window.hpp"
#include "streamclaw/memory_store.hpp"
#include "streamclaw/proactivity.hpp"

namespace streamclaw {

/// Everything a session reads from its config file. Every field has a default,
/// so an empty object is a valid config.
struct RuntimeConfig {
    double chunk_seconds = 2.0;
    std::size_t cache_max_frames = 256;
    std::size_t slow_stride = 5;
    /// Per-endpoint parameter table keyed by device name; carried verbatim.
    Json devices = Json::object();

    PruneConfig kv;
    MemoryConfig memory;
    ProactivityConfig proactive;

    std::filesystem::path skills_dir;
    std::vector<std::string> skills;  // loaded at session start
    std::size_t agent_max_steps = 8;
    std::size_t gateway_queue_cap = 1024;
    std::string system_prompt = "You are a streaming video agent.";
};

/// Accepts nested ({"kv": {"p_percent": 25}}) or dotted ({"kv.p_percent": 25})
/// keys. Relative skills_dir resolves against `base_dir`.
RuntimeConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {});

/// Throws ConfigInvalid on unreadable or malformed files.
RuntimeConfig load_config(const std::filesystem::path& path);

}  // namespace streamclaw
