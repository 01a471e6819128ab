// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "streamclaw/error.hpp"
#include "streamclaw/model_backend.hpp"

namespace streamclaw {

namespace {

QueryRoute parse_route(const std::string& s) {
    if (s == "proactive") return QueryRoute::Proactive;
    if (s == "memory") return QueryRoute::Memory;
    if (s == "direct") return QueryRoute::Direct;
    throw Error(ErrorCode::BackendUnavailable, "unknown route '" + s + "' from model server");
}

Json feature_to_json(const Feature& f) {
    Json arr = Json::array();
    for (double v : f) arr.push_back(v);
    return arr;
}

Feature feature_from_json(const Json& j) {
    std::vector<double> raw = j.get<std::vector<double>>();
    Feature f = zero_feature();
    for (std::size_t i = 0; i < std::min(raw.size(), kFeatureDim); ++i) f[i] = raw[i];
    return f;
}

}  // namespace

Json frame_to_json(const FrameRecord& frame) {
    Json j;
    j["frame_id"] = frame.frame_id;
    j["t_abs_ms"] = frame.t_abs_ms;
    if (frame.feat) j["feat"] = feature_to_json(*frame.feat);
    j["labels"] = frame.labels;
    if (frame.summary) j["summary"] = *frame.summary;
    return j;
}

RemoteBackend::RemoteBackend(RemoteBackendOptions options) : m_options(std::move(options)) {}

Json RemoteBackend::post(const std::string& endpoint, const Json& body) const {
    httplib::Client client(m_options.host, m_options.port);
    const auto secs = static_cast<time_t>(m_options.timeout_s);
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    auto res = client.Post("/" + endpoint, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::BackendUnavailable,
                    endpoint + ": " + httplib::to_string(res.error()) + " (" + m_options.host + ":" +
                        std::to_string(m_options.port) + ")");
    }
    if (res->status != 200) {
        throw Error(ErrorCode::BackendUnavailable, endpoint + ": HTTP " + std::to_string(res->status));
    }
    try {
        return Json::parse(res->body);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, endpoint + ": malformed response: " + e.what());
    }
}

Feature RemoteBackend::embed_text(std::string_view text) {
    const Json res = post("embed", {{"text", text}});
    try {
        const auto raw = res.at("embedding").get<std::vector<double>>();
        return project_embedding(raw);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("embed: ") + e.what());
    }
}

Caption RemoteBackend::caption_chunk(const Chunk& chunk) {
    Json frames = Json::array();
    for (const auto& f : chunk.frames) frames.push_back(frame_to_json(f));
    const Json res = post("caption", {{"start_ms", chunk.start_ms}, {"end_ms", chunk.end_ms}, {"frames", frames}});
    return {res.value("summary", ""), res.value("detail", "")};
}

Caption RemoteBackend::caption_clip(const ClipRequest& clip) {
    Json frames = Json::array();
    for (const auto& f : clip.frames) frames.push_back(frame_to_json(f));
    const Json res = post("caption", {{"clip",
                                       {{"query", clip.query},
                                        {"path", clip.path},
                                        {"start_time", clip.start_s},
                                        {"end_time", clip.end_s}}},
                                      {"frames", frames}});
    return {res.value("summary", ""), res.value("detail", "")};
}

QueryRoute RemoteBackend::classify_query(std::string_view query) {
    const Json res = post("classify", {{"query", query}});
    return parse_route(res.value("route", ""));
}

std::vector<DecodeStep> RemoteBackend::decode(std::string_view context_text,
                                              std::span<const CacheEntrySummary> cache) {
    Json entries = Json::array();
    for (const auto& e : cache) {
        entries.push_back({{"id", e.entry_id},
                           {"modality", e.modality == Modality::Visual ? "visual" : "textual"},
                           {"key", feature_to_json(e.key)}});
    }
    const Json res = post("decode", {{"context", context_text},
                                     {"entries", entries},
                                     {"attention_layers", m_options.attention_layers}});

    std::vector<DecodeStep> steps;
    try {
        for (const auto& js : res.at("steps")) {
            DecodeStep step;
            step.token_text = js.value("token", "");
            if (js.contains("q_feat")) step.q_feat = feature_from_json(js.at("q_feat"));

            // Per-layer maps are averaged; a single map is taken as-is.
            std::vector<Json> layers;
            if (js.contains("layer_scores")) {
                for (const auto& l : js.at("layer_scores")) layers.push_back(l);
            } else if (js.contains("attn_scores")) {
                layers.push_back(js.at("attn_scores"));
            }
            for (const auto& layer : layers) {
                for (const auto& [key, val] : layer.items()) {
                    step.attn_scores[std::stoull(key)] += val.get<double>() / static_cast<double>(layers.size());
                }
            }
            steps.push_back(std::move(step));
        }
    } catch (const std::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("decode: ") + e.what());
    }
    return steps;
}

std::string RemoteBackend::generate(std::string_view task, const Json& input) {
    const Json res = post("generate", {{"task", task}, {"input", input}});
    if (!res.contains("text") || !res.at("text").is_string()) {
        throw Error(ErrorCode::BackendUnavailable, "generate: response lacks 'text'");
    }
    return res.at("text").get<std::string>();
}

std::unique_ptr<ModelBackend> make_backend(std::string_view selector, std::vector<int> attention_layers) {
    if (selector.empty() || selector == "mock") {
        return std::make_unique<MockBackend>();
    }
    constexpr std::string_view kRemote = "remote:";
    if (selector.substr(0, kRemote.size()) == kRemote) {
        const std::string_view addr = selector.substr(kRemote.size());
        const auto colon = addr.rfind(':');
        if (colon == std::string_view::npos) {
            throw Error(ErrorCode::ConfigInvalid, "remote backend needs host:port, got '" + std::string(addr) + "'");
        }
        RemoteBackendOptions opts;
        opts.host = std::string(addr.substr(0, colon));
        try {
            opts.port = std::stoi(std::string(addr.substr(colon + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigInvalid, "bad port in '" + std::string(addr) + "'");
        }
        opts.attention_layers = std::move(attention_layers);
        return std::make_unique<RemoteBackend>(std::move(opts));
    }
    throw Error(ErrorCode::ConfigInvalid, "unknown backend selector '" + std::string(selector) + "'");
}

}  // namespace streamclaw
