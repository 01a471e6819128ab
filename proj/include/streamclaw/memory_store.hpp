// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "streamclaw/feature.hpp"
#include "streamclaw/json.hpp"
#include "streamclaw/model_backend.hpp"
#include "streamclaw/stream_ingest.hpp"

namespace streamclaw {

enum class NodeLevel { Segment, AtomicAction, Event };

std::string_view to_string(NodeLevel level);
NodeLevel node_level_from_string(std::string_view s);

/// Compressed stand-in for the raw clip: feature centroid plus the frames it covers.
struct SegmentRef {
    Feature centroid{};
    std::vector<std::uint64_t> frame_ids;

    bool operator==(const SegmentRef&) const = default;
};

struct MemoryNode {
    std::uint64_t node_id = 0;
    NodeLevel level = NodeLevel::Segment;
    SegmentRef z;
    std::string s;
    std::string c;
    AbsMs tau = 0;
    AbsMs start_ms = 0;
    Feature emb{};
    double salience = 0.0;
    std::vector<std::uint64_t> children;
    std::optional<std::uint64_t> parent;
    /// Distinct caption tags in first-occurrence order; the source for re-captioning parents.
    std::vector<std::string> labels;

    bool operator==(const MemoryNode&) const = default;
};

Json node_to_json(const MemoryNode& node);
MemoryNode node_from_json(const Json& j);

struct MemoryConfig {
    double alpha = 0.7;             // semantic weight in segment -> atomic-action compatibility
    double beta = 0.3;              // temporal weight
    double atomic_threshold = 0.6;  // theta_a
    double temporal_scale_s = 30.0; // tau_c
    double event_threshold = 0.5;   // theta_e
    double event_gap_s = 10.0;      // G
    std::size_t salience_window = 5;   // K
    std::size_t merge_candidates = 3;  // M
    std::size_t batch_size = 8;        // W_b
    double prune_salience = 0.05;

    void validate() const;
};

enum class RetrievalMode { SingleFact, Temporal };
enum class Traversal { Forward, Reverse, SalienceFirst };

struct RetrievalCommand {
    std::string query;
    RetrievalMode mode = RetrievalMode::SingleFact;
    Traversal traversal = Traversal::SalienceFirst;
    std::size_t budget = 64;
    std::size_t top_k = 3;
    double hit_threshold = 0.8;

    void validate() const;
};

enum class AgentKind { Reasoning, Proactivity };

struct AgentView {
    AgentKind agent = AgentKind::Reasoning;
    std::set<NodeLevel> levels;

    static AgentView reasoning() { return {AgentKind::Reasoning, {NodeLevel::AtomicAction, NodeLevel::Event}}; }
    static AgentView proactivity() { return {AgentKind::Proactivity, {NodeLevel::Segment, NodeLevel::AtomicAction}}; }
};

struct RetrievalHit {
    std::uint64_t node_id = 0;
    double relevance = 0.0;
    std::string s;
    std::string c;
    AbsMs start_ms = 0;
    AbsMs tau = 0;

    bool operator==(const RetrievalHit&) const = default;
};

struct RetrievalResult {
    std::vector<RetrievalHit> hits;
    std::size_t scored = 0;
    std::size_t waves = 0;
};

/// Executes one wave of batch-scoring tasks; must run every task before returning.
using BatchRunner = std::function<void(std::vector<std::function<void()>>& tasks)>;

/// Runs the first task inline and the rest on std::async threads.
void run_batches_async(std::vector<std::function<void()>>& tasks);

struct MergeOutcome {
    std::uint64_t node_id = 0;
    bool created = false;
};

struct MemoryStats {
    std::size_t segments = 0;
    std::size_t atomic_actions = 0;
    std::size_t events = 0;
};

/// Hierarchical multimodal memory: segments are induced into atomic actions,
/// atomic actions aggregated into events. Writes are serialized; retrieval
/// scores an immutable snapshot concurrently.
class MemoryStore {
public:
    MemoryStore(ModelBackend& backend, MemoryConfig config = {});

    /// Every subsequent mutation is appended to `log` as one JSON line.
    void set_mutation_log(std::ostream* log);

    std::uint64_t write_segment(const Chunk& chunk, const std::string& s, const std::string& c_detail);

    MergeOutcome induce_atomic_action(std::uint64_t seg_id);
    MergeOutcome aggregate_event(std::uint64_t aa_id);

    RetrievalResult retrieve(const RetrievalCommand& cmd, const AgentView& view,
                             const BatchRunner& runner = run_batches_async) const;

    std::vector<MemoryNode> view_nodes(const AgentView& view, AbsMs since_ms, AbsMs until_ms) const;

    /// Drops low-salience segments whose atomic action keeps at least one
    /// other child. Never called implicitly. Returns removed ids.
    std::vector<std::uint64_t> prune_by_salience();

    std::optional<MemoryNode> node(std::uint64_t id) const;
    /// All nodes ordered by id.
    std::vector<MemoryNode> nodes() const;
    MemoryStats stats() const;
    const MemoryConfig& config() const { return m_config; }

    /// Rebuilds the node forest from a mutation log.
    static std::vector<MemoryNode> replay(std::istream& log);

    /// Human-readable event -> atomic action -> segment tree.
    static std::string render_forest(const std::vector<MemoryNode>& nodes);

private:
    MemoryNode& at(std::uint64_t id);
    MergeOutcome induce_locked(std::uint64_t seg_id);
    MergeOutcome aggregate_locked(std::uint64_t aa_id);
    /// Re-derives span, frames, centroid, captions, embedding and salience from children.
    void refresh_from_children(MemoryNode& parent);
    std::uint64_t create_parent(NodeLevel level, std::uint64_t child_id);
    void log_upsert(const MemoryNode& node);

    ModelBackend& m_backend;
    MemoryConfig m_config;
    mutable std::shared_mutex m_mutex;
    std::map<std::uint64_t, MemoryNode> m_nodes;
    std::map<std::uint64_t, Feature> m_frame_feats;
    std::vector<std::uint64_t> m_segment_order;
    std::uint64_t m_next_id = 1;
    std::optional<AbsMs> m_last_tau;
    std::ostream* m_log = nullptr;
};

}  // namespace streamclaw
