// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <regex>
#include <unordered_set>

#include "streamclaw/error.hpp"
#include "streamclaw/model_backend.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

std::string_view to_string(QueryRoute route) {
    switch (route) {
        case QueryRoute::Proactive: return "proactive";
        case QueryRoute::Memory: return "memory";
        case QueryRoute::Direct: return "direct";
    }
    return "direct";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

Feature project_embedding(std::span<const double> raw) {
    Feature v = zero_feature();
    for (std::size_t i = 0; i < std::min(raw.size(), kFeatureDim); ++i) {
        v[i] = raw[i];
    }
    const double n = l2_norm(v);
    if (n > 0.0) {
        for (auto& x : v) x /= n;
    }
    return v;
}

Feature MockBackend::embed_text(std::string_view s) {
    Feature v = zero_feature();
    for (const auto& tok : text::split_ws(text::to_lower(s))) {
        v[fnv1a64(tok) % kFeatureDim] += 1.0;
    }
    const double n = l2_norm(v);
    if (n > 0.0) {
        for (auto& x : v) x /= n;
    }
    return v;
}

Caption MockBackend::caption_chunk(const Chunk& chunk) {
    std::vector<std::string> labels;
    std::unordered_set<std::string> seen;
    std::vector<std::string> summaries;
    for (const auto& f : chunk.frames) {
        for (const auto& l : f.labels) {
            if (seen.insert(l).second) {
                labels.push_back(l);
            }
        }
        if (f.summary && !f.summary->empty()) {
            summaries.push_back(*f.summary);
        }
    }
    return {text::join(labels, " "), text::join(summaries, "; ")};
}

Caption MockBackend::caption_clip(const ClipRequest& clip) {
    Chunk c;
    c.frames = clip.frames;
    return caption_chunk(c);
}

QueryRoute MockBackend::classify_query(std::string_view query) {
    static const std::vector<std::string_view> kProactive = {"remind", "alert", "notify", "warn", "watch for"};
    static const std::vector<std::string_view> kMemory = {"ago",    "earlier",   "before",
                                                          "yesterday", "last time", "compared to"};
    const std::string q = text::to_lower(query);
    for (auto kw : kProactive) {
        if (q.find(kw) != std::string::npos) return QueryRoute::Proactive;
    }
    for (auto kw : kMemory) {
        if (q.find(kw) != std::string::npos) return QueryRoute::Memory;
    }
    return QueryRoute::Direct;
}

std::vector<DecodeStep> MockBackend::decode(std::string_view context_text,
                                            std::span<const CacheEntrySummary> cache) {
    // The mock "generates" the caption it is shown: the text after the last
    // WINDOW: marker, or a single <SILENT> token when there is nothing to say.
    std::string_view response = context_text;
    if (auto pos = context_text.rfind("WINDOW:"); pos != std::string_view::npos) {
        response = context_text.substr(pos + 7);
    }
    auto tokens = text::split_ws(response);
    if (tokens.empty()) {
        tokens.emplace_back("<SILENT>");
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
    std::vector<DecodeStep> steps;
    steps.reserve(tokens.size());
    for (auto& tok : tokens) {
        DecodeStep step;
        step.q_feat = embed_text(tok);
        step.token_text = std::move(tok);

        std::vector<std::pair<std::uint64_t, double>> logits;
        for (const auto& e : cache) {
            if (e.modality == Modality::Visual) {
                logits.emplace_back(e.entry_id, dot(step.q_feat, e.key) * scale);
            }
        }
        if (!logits.empty()) {
            double max_logit = logits.front().second;
            for (const auto& [id, l] : logits) max_logit = std::max(max_logit, l);
            double denom = 0.0;
            for (auto& [id, l] : logits) {
                l = std::exp(l - max_logit);
                denom += l;
            }
            for (const auto& [id, l] : logits) {
                step.attn_scores[id] = l / denom;
            }
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

std::string MockBackend::rewrite_memory_query(std::string_view query) {
    std::string s = text::trim(query);
    while (!s.empty() && (s.back() == '?' || s.back() == '.' || s.back() == '!')) {
        s.pop_back();
    }

    std::string time_ref;
    std::smatch m;
    static const std::regex kAgo(R"(((?:\S+\s+){0,2}ago)\b)", std::regex::icase);
    if (std::regex_search(s, m, kAgo)) {
        time_ref = m[1].str();
    } else {
        for (std::string_view kw : {"yesterday", "earlier", "last time", "before"}) {
            if (text::contains_ci(s, kw)) {
                time_ref = std::string(kw);
                break;
            }
        }
    }

    std::string rest = text::to_lower(s);
    const std::string lowered_ref = text::to_lower(time_ref);
    if (!lowered_ref.empty()) {
        rest = text::replace_all(rest, lowered_ref, "");
    }
    for (std::string_view connector : {"compared to", "compared with", " than "}) {
        rest = text::replace_all(rest, connector, " ");
    }
    rest = text::join(text::split_ws(rest), " ");

    std::string topic;
    static const std::regex kPrep(R"(\b(?:in|of|about)\s+(.+)$)");
    static const std::regex kLead(R"(^(?:what|where|when|how|who|which)\s+(?:\S+\s+)?(.*)$)");
    if (std::regex_search(rest, m, kPrep)) {
        topic = m[1].str();
    } else if (std::regex_match(rest, m, kLead)) {
        topic = m[1].str();
    } else {
        topic = rest;
    }
    topic = text::trim(topic);
    if (topic.rfind("the ", 0) == 0) {
        topic = topic.substr(4);
    }
    if (topic.empty()) {
        topic = "scene";
    }

    std::string out = "Describe the " + topic + " and key characteristics";
    if (!lowered_ref.empty()) {
        out += " " + lowered_ref;
    }
    out += " in detail.";
    return out;
}

std::string MockBackend::plan(const Json& input) {
    const std::string query = input.value("query", "");
    const auto& history = input.contains("history") ? input.at("history") : Json::array();

    if (!history.empty()) {
        return "Result: " + history.back().get<std::string>();
    }

    const std::string lowered = text::to_lower(query);
    if (input.contains("calls")) {
        for (const auto& call : input.at("calls")) {
            for (const auto& phrase : call.at("phrases")) {
                if (lowered.find(text::to_lower(phrase.get<std::string>())) == std::string::npos) {
                    continue;
                }
                Json args = Json::object();
                if (call.value("query_arg", false)) {
                    args["query"] = query;
                }
                Json line;
                line["tool"] = call.at("function");
                line["args"] = args;
                return line.dump();
            }
        }
    }

    static const std::regex kClip(R"(between\s+(\d+(?:\.\d+)?)\s+and\s+(\d+(?:\.\d+)?)\s+seconds)",
                                  std::regex::icase);
    std::smatch m;
    const std::string clip_path = input.value("clip_path", "");
    if (!clip_path.empty() && std::regex_search(query, m, kClip)) {
        Json line;
        line["tool"] = "video_cut";
        line["args"] = {{"query", query},
                        {"path", clip_path},
                        {"start_time", std::stod(m[1].str())},
                        {"end_time", std::stod(m[2].str())}};
        return line.dump();
    }

    const std::string caption = input.value("caption", "");
    return "Now: " + (caption.empty() ? std::string("nothing notable in view") : caption);
}

std::string MockBackend::generate(std::string_view task, const Json& input) {
    if (task == "rewrite") {
        return rewrite_memory_query(input.value("query", ""));
    }
    if (task == "plan") {
        return plan(input);
    }
    if (task == "answer") {
        const std::string caption = input.value("caption", "");
        const std::string now = caption.empty() ? std::string("nothing notable in view") : caption;
        if (input.value("route", "") == "memory") {
            return "Earlier: " + input.value("memory", "") + " | Now: " + now;
        }
        return "Now: " + now;
    }
    if (task == "respond") {
        return input.value("rendered", "");
    }
    if (task == "solve") {
        return "[" + input.value("question_type", "STEM") + "] " + input.value("query", "");
    }
    throw Error(ErrorCode::BackendUnavailable, "mock backend has no task '" + std::string(task) + "'");
}

}  // namespace streamclaw
