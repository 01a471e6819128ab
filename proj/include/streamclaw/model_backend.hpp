// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamclaw/feature.hpp"
#include "streamclaw/json.hpp"
#include "streamclaw/stream_ingest.hpp"

namespace streamclaw {

enum class Modality { Visual, Textual };

enum class QueryRoute { Proactive, Memory, Direct };

std::string_view to_string(QueryRoute route);

struct Caption {
    std::string summary;
    std::string detail;
};

/// What a backend sees of one KV cache entry when decoding.
struct CacheEntrySummary {
    std::uint64_t entry_id = 0;
    Modality modality = Modality::Visual;
    Feature key{};
};

struct DecodeStep {
    std::string token_text;
    Feature q_feat{};
    /// Attention over visual entries only; sums to 1 when non-empty.
    std::map<std::uint64_t, double> attn_scores;
};

/// Bounds and frames of a sub-clip handed to the captioner by video_cut.
struct ClipRequest {
    std::string query;
    std::string path;
    double start_s = 0.0;
    double end_s = 0.0;
    std::vector<FrameRecord> frames;
};

/// Inference boundary. Implementations must be safe to call from several
/// threads at once; each call is independent and blocking.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual Feature embed_text(std::string_view text) = 0;
    virtual Caption caption_chunk(const Chunk& chunk) = 0;
    virtual Caption caption_clip(const ClipRequest& clip) = 0;
    virtual QueryRoute classify_query(std::string_view query) = 0;
    virtual std::vector<DecodeStep> decode(std::string_view context_text,
                                           std::span<const CacheEntrySummary> cache) = 0;

    /// Free-form generation. `task` is one of "rewrite", "answer", "respond",
    /// "plan", "solve"; `input` carries the task's named fields.
    virtual std::string generate(std::string_view task, const Json& input) = 0;
};

/// Deterministic backend used for tests, golden scenarios and offline runs.
class MockBackend final : public ModelBackend {
public:
    Feature embed_text(std::string_view text) override;
    Caption caption_chunk(const Chunk& chunk) override;
    Caption caption_clip(const ClipRequest& clip) override;
    QueryRoute classify_query(std::string_view query) override;
    std::vector<DecodeStep> decode(std::string_view context_text,
                                   std::span<const CacheEntrySummary> cache) override;
    std::string generate(std::string_view task, const Json& input) override;

    static std::string rewrite_memory_query(std::string_view query);
    static std::string plan(const Json& input);
};

struct RemoteBackendOptions {
    std::string host = "127.0.0.1";
    int port = 8765;
    std::vector<int> attention_layers;
    double timeout_s = 30.0;
};

/// JSON-over-HTTP client for a model server exposing /embed, /caption,
/// /classify, /decode and /generate.
class RemoteBackend final : public ModelBackend {
public:
    explicit RemoteBackend(RemoteBackendOptions options);

    Feature embed_text(std::string_view text) override;
    Caption caption_chunk(const Chunk& chunk) override;
    Caption caption_clip(const ClipRequest& clip) override;
    QueryRoute classify_query(std::string_view query) override;
    std::vector<DecodeStep> decode(std::string_view context_text,
                                   std::span<const CacheEntrySummary> cache) override;
    std::string generate(std::string_view task, const Json& input) override;

    const RemoteBackendOptions& options() const { return m_options; }

private:
    Json post(const std::string& endpoint, const Json& body) const;

    RemoteBackendOptions m_options;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Truncates or zero-pads to kFeatureDim, then L2-normalizes.
Feature project_embedding(std::span<const double> raw);

Json frame_to_json(const FrameRecord& frame);

/// Builds a backend from "mock" or "remote:<host:port>".
std::unique_ptr<ModelBackend> make_backend(std::string_view selector,
                                           std::vector<int> attention_layers = {});

}  // namespace streamclaw
