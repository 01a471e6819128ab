// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/config.hpp"

#include <fstream>

#include "streamclaw/error.hpp"

namespace streamclaw {

namespace {

const Json* lookup(const Json& j, const std::string& dotted) {
    if (j.contains(dotted)) return &j.at(dotted);
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) return nullptr;
    const std::string head = dotted.substr(0, dot);
    if (!j.contains(head) || !j.at(head).is_object()) return nullptr;
    return lookup(j.at(head), dotted.substr(dot + 1));
}

template <typename T>
void read(const Json& j, const std::string& key, T& out) {
    if (const Json* v = lookup(j, key)) {
        try {
            out = v->get<T>();
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ConfigInvalid, key + ": " + e.what());
        }
    }
}

}  // namespace

RuntimeConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) {
        throw Error(ErrorCode::ConfigInvalid, "config must be an object");
    }
    RuntimeConfig cfg;
    read(j, "chunk_seconds", cfg.chunk_seconds);
    read(j, "cache_max_frames", cfg.cache_max_frames);
    read(j, "slow_stride", cfg.slow_stride);
    if (const Json* d = lookup(j, "devices")) cfg.devices = *d;

    read(j, "kv.p_percent", cfg.kv.p_percent);
    read(j, "kv.redundancy_threshold", cfg.kv.redundancy_threshold);
    read(j, "kv.window_seconds", cfg.kv.window_seconds);
    read(j, "kv.layers", cfg.kv.layers);

    read(j, "memory.alpha", cfg.memory.alpha);
    read(j, "memory.beta", cfg.memory.beta);
    read(j, "memory.atomic_threshold", cfg.memory.atomic_threshold);
    read(j, "memory.temporal_scale_s", cfg.memory.temporal_scale_s);
    read(j, "memory.event_threshold", cfg.memory.event_threshold);
    read(j, "memory.event_gap_s", cfg.memory.event_gap_s);
    read(j, "memory.salience_window", cfg.memory.salience_window);
    read(j, "memory.merge_candidates", cfg.memory.merge_candidates);
    read(j, "memory.batch_size", cfg.memory.batch_size);
    read(j, "memory.prune_salience", cfg.memory.prune_salience);

    read(j, "proactive.time_token", cfg.proactive.time_token);
    read(j, "proactive.event_token", cfg.proactive.event_token);
    std::string recurrence = "once";
    read(j, "proactive.default_recurrence", recurrence);
    if (recurrence == "persistent") {
        cfg.proactive.default_recurrence = Recurrence::Persistent;
    } else if (recurrence != "once") {
        throw Error(ErrorCode::ConfigInvalid, "proactive.default_recurrence must be once or persistent");
    }
    if (const Json* conds = lookup(j, "proactive.conditions")) {
        if (!conds->is_array()) throw Error(ErrorCode::ConfigInvalid, "proactive.conditions must be an array");
        for (std::size_t i = 0; i < conds->size(); ++i) {
            const Json& c = (*conds)[i];
            const std::string path = "proactive.conditions[" + std::to_string(i) + "]";
            try {
                ConditionMapping m;
                m.text = c.at("text").get<std::string>();
                m.labels = c.at("labels").get<std::vector<std::string>>();
                m.token = c.value("token", "");
                m.response = c.value("response", "");
                cfg.proactive.conditions.push_back(std::move(m));
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::ConfigInvalid, path + ": " + e.what());
            }
        }
    }

    std::string skills_dir;
    read(j, "skills_dir", skills_dir);
    if (!skills_dir.empty()) {
        std::filesystem::path p(skills_dir);
        cfg.skills_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    read(j, "skills", cfg.skills);
    read(j, "agent.max_steps", cfg.agent_max_steps);
    read(j, "gateway.queue_cap", cfg.gateway_queue_cap);
    read(j, "system_prompt", cfg.system_prompt);

    cfg.kv.validate();
    cfg.memory.validate();
    if (!(cfg.chunk_seconds > 0.0) || cfg.cache_max_frames == 0 || cfg.slow_stride == 0 || cfg.agent_max_steps == 0) {
        throw Error(ErrorCode::ConfigInvalid,
                    "chunk_seconds, cache_max_frames, slow_stride and agent.max_steps must be positive");
    }
    return cfg;
}

RuntimeConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ConfigInvalid, "cannot read config '" + path.string() + "'");
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

}  // namespace streamclaw
