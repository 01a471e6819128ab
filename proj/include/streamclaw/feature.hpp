// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace streamclaw {

inline constexpr std::size_t kFeatureDim = 64;

using Feature = std::array<double, kFeatureDim>;

/// Absolute epoch milliseconds.
using AbsMs = std::int64_t;

inline Feature zero_feature() {
    Feature f{};
    f.fill(0.0);
    return f;
}

// All reductions accumulate in index order so results are bit-reproducible.
double dot(const Feature& a, const Feature& b);
double l2_norm(const Feature& f);
bool is_zero(const Feature& f);

/// Cosine similarity clamped to [-1, 1]; 0 when either side has zero norm.
double cosine(const Feature& a, const Feature& b);

/// Element-wise mean in the given order; zero vector for an empty input.
Feature centroid(std::span<const Feature> feats);

}  // namespace streamclaw
