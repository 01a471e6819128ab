// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/stream_ingest.hpp"

#include <cmath>
#include <mutex>

#include "streamclaw/error.hpp"

namespace streamclaw {

AbsMs align_timestamp(double rel_s, const TimeAnchor& anchor) {
    return anchor.abs_ms + static_cast<AbsMs>(std::llround(1000.0 * (rel_s - anchor.device_rel_s)));
}

void TimeAligner::set_anchor(TimeAnchor anchor) {
    if (anchor.abs_ms < 0) {
        throw Error(ErrorCode::TimestampRegression, "anchor abs_ms must be non-negative");
    }
    m_anchor = anchor;
}

AbsMs TimeAligner::align(double rel_s) const {
    if (!m_anchor) {
        throw Error(ErrorCode::AnchorMissing, "no time anchor set for stream");
    }
    return align_timestamp(rel_s, *m_anchor);
}

SharedStreamCache::SharedStreamCache(std::size_t max_len, std::size_t slow_stride)
    : m_max_len(max_len), m_slow_stride(slow_stride) {
    if (max_len == 0 || slow_stride == 0) {
        throw Error(ErrorCode::ConfigInvalid, "cache_max_frames and slow_stride must be positive");
    }
}

std::vector<FrameRecord> SharedStreamCache::push_frame(FrameRecord frame) {
    std::unique_lock lock(m_mutex);
    if (m_last_t && frame.t_abs_ms < *m_last_t) {
        throw Error(ErrorCode::TimestampRegression,
                    "frame at " + std::to_string(frame.t_abs_ms) + " precedes " + std::to_string(*m_last_t));
    }
    m_last_t = frame.t_abs_ms;
    m_queue.push_back(std::move(frame));

    std::vector<FrameRecord> evicted;
    while (m_queue.size() > m_max_len) {
        evicted.push_back(std::move(m_queue.front()));
        m_queue.pop_front();
    }
    return evicted;
}

std::vector<FrameRecord> SharedStreamCache::window(AbsMs since_ms, Density density) const {
    std::shared_lock lock(m_mutex);
    std::vector<FrameRecord> out;
    std::size_t matched = 0;
    for (const auto& f : m_queue) {
        if (f.t_abs_ms < since_ms) {
            continue;
        }
        if (density == Density::Fast || matched % m_slow_stride == 0) {
            out.push_back(f);
        }
        ++matched;
    }
    return out;
}

std::vector<FrameRecord> SharedStreamCache::range(AbsMs start_ms, AbsMs end_ms) const {
    std::shared_lock lock(m_mutex);
    std::vector<FrameRecord> out;
    for (const auto& f : m_queue) {
        if (f.t_abs_ms >= start_ms && f.t_abs_ms < end_ms) {
            out.push_back(f);
        }
    }
    return out;
}

std::size_t SharedStreamCache::size() const {
    std::shared_lock lock(m_mutex);
    return m_queue.size();
}

ChunkCutter::ChunkCutter(const SharedStreamCache& cache, double chunk_seconds)
    : m_cache(cache), m_chunk_ms(static_cast<AbsMs>(std::llround(chunk_seconds * 1000.0))) {
    if (m_chunk_ms <= 0) {
        throw Error(ErrorCode::ConfigInvalid, "chunk_seconds must be positive");
    }
}

void ChunkCutter::set_origin(AbsMs origin_ms) {
    m_last_end = origin_ms;
}

Chunk ChunkCutter::make_chunk(AbsMs start, AbsMs end, Density density) {
    Chunk c;
    c.chunk_id = m_next_id++;
    c.start_ms = start;
    c.end_ms = end;
    c.density = density;
    c.frames = m_cache.range(start, end);
    if (density == Density::Slow) {
        std::vector<FrameRecord> strided;
        for (std::size_t i = 0; i < c.frames.size(); i += m_cache.slow_stride()) {
            strided.push_back(c.frames[i]);
        }
        c.frames = std::move(strided);
    }
    m_last_end = end;
    return c;
}

std::optional<Chunk> ChunkCutter::cut_chunk(AbsMs now_ms, Density density) {
    if (!m_last_end) {
        m_last_end = now_ms;
        return std::nullopt;
    }
    const AbsMs start = *m_last_end;
    if (now_ms < start + m_chunk_ms) {
        return std::nullopt;
    }
    return make_chunk(start, start + m_chunk_ms, density);
}

std::optional<Chunk> ChunkCutter::flush(AbsMs end_ms, Density density) {
    if (!m_last_end || end_ms <= *m_last_end) {
        return std::nullopt;
    }
    return make_chunk(*m_last_end, end_ms, density);
}

}  // namespace streamclaw
