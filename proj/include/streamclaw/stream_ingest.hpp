// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "streamclaw/feature.hpp"

namespace streamclaw {

struct TimeAnchor {
    double device_rel_s = 0.0;
    AbsMs abs_ms = 0;
};

/// One sampled frame. `feat` is empty when the source supplied no features.
struct FrameRecord {
    std::uint64_t frame_id = 0;
    AbsMs t_abs_ms = 0;
    std::optional<Feature> feat;
    std::vector<std::string> labels;
    std::optional<std::string> summary;

    Feature feature_or_zero() const { return feat.value_or(zero_feature()); }
};

enum class Density { Fast, Slow };

struct Chunk {
    std::int64_t chunk_id = 0;
    AbsMs start_ms = 0;
    AbsMs end_ms = 0;
    std::vector<FrameRecord> frames;
    Density density = Density::Fast;
};

/// Maps device-relative seconds onto the absolute timeline.
class TimeAligner {
public:
    /// A later anchor replaces the earlier one.
    void set_anchor(TimeAnchor anchor);
    bool has_anchor() const { return m_anchor.has_value(); }
    const std::optional<TimeAnchor>& anchor() const { return m_anchor; }

    AbsMs align(double rel_s) const;

private:
    std::optional<TimeAnchor> m_anchor;
};

AbsMs align_timestamp(double rel_s, const TimeAnchor& anchor);

/// Bounded frame queue shared by every agent. One writer, many readers.
class SharedStreamCache {
public:
    SharedStreamCache(std::size_t max_len, std::size_t slow_stride);

    /// Appends `frame`, returning the frames evicted oldest-first.
    std::vector<FrameRecord> push_frame(FrameRecord frame);

    std::vector<FrameRecord> window(AbsMs since_ms, Density density) const;

    /// Frames with start_ms <= t < end_ms, in time order.
    std::vector<FrameRecord> range(AbsMs start_ms, AbsMs end_ms) const;

    std::size_t size() const;
    std::size_t max_len() const { return m_max_len; }
    std::size_t slow_stride() const { return m_slow_stride; }

private:
    mutable std::shared_mutex m_mutex;
    std::deque<FrameRecord> m_queue;
    std::size_t m_max_len;
    std::size_t m_slow_stride;
    std::optional<AbsMs> m_last_t;
};

/// Cuts the timeline into fixed-duration chunks read out of the shared cache.
class ChunkCutter {
public:
    ChunkCutter(const SharedStreamCache& cache, double chunk_seconds);

    /// Sets the start of the first chunk. Defaults to the first call's reference.
    void set_origin(AbsMs origin_ms);
    std::optional<AbsMs> origin() const { return m_last_end; }

    std::optional<Chunk> cut_chunk(AbsMs now_ms, Density density = Density::Fast);

    /// Emits the final partial chunk covering [last_end, end_ms) if non-empty.
    std::optional<Chunk> flush(AbsMs end_ms, Density density = Density::Fast);

    std::int64_t next_chunk_id() const { return m_next_id; }
    AbsMs chunk_ms() const { return m_chunk_ms; }

private:
    Chunk make_chunk(AbsMs start, AbsMs end, Density density);

    const SharedStreamCache& m_cache;
    AbsMs m_chunk_ms;
    std::optional<AbsMs> m_last_end;
    std::int64_t m_next_id = 0;
};

}  // namespace streamclaw
