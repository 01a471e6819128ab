// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/kv_window.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "streamclaw/error.hpp"

namespace streamclaw {

void PruneConfig::validate() const {
    if (!(p_percent > 0.0 && p_percent <= 100.0)) {
        throw Error(ErrorCode::ConfigInvalid, "kv.p_percent must be in (0, 100]");
    }
    if (!(redundancy_threshold >= 0.0 && redundancy_threshold <= 1.0)) {
        throw Error(ErrorCode::ConfigInvalid, "kv.redundancy_threshold must be in [0, 1]");
    }
    if (!(window_seconds > 0.0)) {
        throw Error(ErrorCode::ConfigInvalid, "kv.window_seconds must be positive");
    }
}

KVWindow::KVWindow(PruneConfig config) : m_config(std::move(config)) {
    m_config.validate();
}

std::size_t KVWindow::retained_count(double p_percent, std::size_t n) {
    return static_cast<std::size_t>(std::ceil(p_percent * static_cast<double>(n) / 100.0));
}

WriteResult KVWindow::write_visual_tokens(std::span<const TokenWrite> tokens) {
    WriteResult result;
    result.written_mask.reserve(tokens.size());
    for (const auto& tok : tokens) {
        double best = -2.0;
        for (const auto& e : m_entries) {
            if (e.modality == Modality::Visual) {
                best = std::max(best, cosine(tok.key, e.key));
            }
        }
        if (best > m_config.redundancy_threshold) {
            ++result.skipped;
            result.written_mask.push_back(false);
            continue;
        }
        m_entries.push_back({m_next_id++, Modality::Visual, tok.key, tok.value, tok.write_ms, 0.0});
        ++result.written;
        result.written_mask.push_back(true);
    }
    return result;
}

std::uint64_t KVWindow::write_textual_token(const TokenWrite& token) {
    const auto id = m_next_id++;
    m_entries.push_back({id, Modality::Textual, token.key, token.value, token.write_ms, 0.0});
    return id;
}

void KVWindow::apply_attention(const std::map<std::uint64_t, double>& scores) {
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < m_entries.size(); ++i) {
        index.emplace(m_entries[i].entry_id, i);
    }
    for (const auto& [id, s] : scores) {
        if (!index.contains(id)) {
            throw Error(ErrorCode::UnknownEntry, "no cache entry " + std::to_string(id));
        }
    }
    for (const auto& [id, s] : scores) {
        m_entries[index.at(id)].score = s;
    }
    if (!scores.empty()) {
        m_fresh_scores = true;
    }
}

std::vector<std::uint64_t> KVWindow::prune_top_p() {
    if (!m_fresh_scores) {
        return {};
    }
    m_fresh_scores = false;

    std::vector<const KVCacheEntry*> visual;
    for (const auto& e : m_entries) {
        if (e.modality == Modality::Visual) visual.push_back(&e);
    }
    const std::size_t keep = std::min(visual.size(), retained_count(m_config.p_percent, visual.size()));
    if (keep == visual.size()) {
        return {};
    }
    std::sort(visual.begin(), visual.end(), [](const KVCacheEntry* a, const KVCacheEntry* b) {
        if (a->score != b->score) return a->score > b->score;
        if (a->write_ms != b->write_ms) return a->write_ms < b->write_ms;
        return a->entry_id < b->entry_id;
    });

    std::unordered_set<std::uint64_t> drop;
    std::vector<std::uint64_t> removed;
    for (std::size_t i = keep; i < visual.size(); ++i) {
        drop.insert(visual[i]->entry_id);
        removed.push_back(visual[i]->entry_id);
    }
    std::erase_if(m_entries, [&](const KVCacheEntry& e) { return drop.contains(e.entry_id); });
    std::sort(removed.begin(), removed.end());
    return removed;
}

std::vector<KVCacheEntry> KVWindow::slide_window(AbsMs now_ms) {
    const AbsMs cutoff = now_ms - static_cast<AbsMs>(std::llround(m_config.window_seconds * 1000.0));
    std::vector<KVCacheEntry> offloaded;
    std::vector<KVCacheEntry> kept;
    kept.reserve(m_entries.size());
    for (auto& e : m_entries) {
        if (e.write_ms < cutoff) {
            offloaded.push_back(std::move(e));
        } else {
            kept.push_back(std::move(e));
        }
    }
    m_entries = std::move(kept);
    return offloaded;
}

std::vector<CacheEntrySummary> KVWindow::snapshot() const {
    std::vector<CacheEntrySummary> out;
    out.reserve(m_entries.size());
    for (const auto& e : m_entries) {
        out.push_back({e.entry_id, e.modality, e.key});
    }
    return out;
}

std::size_t KVWindow::visual_count() const {
    return static_cast<std::size_t>(std::count_if(m_entries.begin(), m_entries.end(),
                                                  [](const auto& e) { return e.modality == Modality::Visual; }));
}

std::size_t KVWindow::textual_count() const {
    return m_entries.size() - visual_count();
}

}  // namespace streamclaw
