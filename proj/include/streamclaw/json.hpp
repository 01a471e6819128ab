// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

namespace streamclaw {

// Insertion-ordered so every emitted line has a stable field order.
using Json = nlohmann::ordered_json;

}  // namespace streamclaw
