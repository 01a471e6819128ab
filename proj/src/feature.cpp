// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/feature.hpp"

#include <algorithm>
#include <cmath>

namespace streamclaw {

double dot(const Feature& a, const Feature& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double l2_norm(const Feature& f) {
    return std::sqrt(dot(f, f));
}

bool is_zero(const Feature& f) {
    return std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; });
}

double cosine(const Feature& a, const Feature& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Feature centroid(std::span<const Feature> feats) {
    Feature out = zero_feature();
    if (feats.empty()) {
        return out;
    }
    for (const auto& f : feats) {
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            out[i] += f[i];
        }
    }
    const double n = static_cast<double>(feats.size());
    for (auto& v : out) {
        v /= n;
    }
    return out;
}

}  // namespace streamclaw
