// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "streamclaw/feature.hpp"
#include "streamclaw/model_backend.hpp"

namespace streamclaw {

struct KVCacheEntry {
    std::uint64_t entry_id = 0;
    Modality modality = Modality::Visual;
    Feature key{};
    Feature value{};
    AbsMs write_ms = 0;
    /// Last attention contribution; 0 until the first decode scores it.
    double score = 0.0;
};

struct PruneConfig {
    double p_percent = 25.0;
    double redundancy_threshold = 0.95;
    double window_seconds = 20.0;
    std::vector<int> layers;

    /// Throws ConfigInvalid when a field is out of range.
    void validate() const;
};

struct TokenWrite {
    Feature key{};
    Feature value{};
    AbsMs write_ms = 0;
};

struct WriteResult {
    std::size_t written = 0;
    std::size_t skipped = 0;
    /// Per input token: true when it was written.
    std::vector<bool> written_mask;
};

/// Streaming KV cache with a sliding time window, cosine redundancy skipping
/// on write and top-p% attention pruning of visual entries.
class KVWindow {
public:
    explicit KVWindow(PruneConfig config = {});

    /// A token is skipped when its cosine to any visual entry already in the
    /// cache (including ones written earlier in this batch) is strictly
    /// greater than the redundancy threshold.
    WriteResult write_visual_tokens(std::span<const TokenWrite> tokens);

    /// Textual entries bypass redundancy checks and are never pruned.
    std::uint64_t write_textual_token(const TokenWrite& token);

    /// Overwrites the score of every named entry. Throws UnknownEntry before
    /// touching anything if an id is not cached.
    void apply_attention(const std::map<std::uint64_t, double>& scores);

    /// Keeps the ceil(p% * N) highest-scoring visual entries. Consumes the
    /// scores supplied since the previous prune, so without a fresh decode it
    /// is a no-op. Returns removed ids ascending.
    std::vector<std::uint64_t> prune_top_p();

    /// Removes every entry older than the window and returns them in cache order.
    std::vector<KVCacheEntry> slide_window(AbsMs now_ms);

    std::vector<CacheEntrySummary> snapshot() const;
    const std::vector<KVCacheEntry>& entries() const { return m_entries; }
    std::size_t visual_count() const;
    std::size_t textual_count() const;
    const PruneConfig& config() const { return m_config; }

    /// ceil(p/100 * n) computed as ceil(p*n/100) so integral p is exact.
    static std::size_t retained_count(double p_percent, std::size_t n);

private:
    PruneConfig m_config;
    std::vector<KVCacheEntry> m_entries;
    std::uint64_t m_next_id = 1;
    bool m_fresh_scores = false;
};

}  // namespace streamclaw
