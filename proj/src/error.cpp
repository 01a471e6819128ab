// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/error.hpp"

namespace streamclaw {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::AnchorMissing: return "AnchorMissing";
        case ErrorCode::TimestampRegression: return "TimestampRegression";
        case ErrorCode::UnknownEntry: return "UnknownEntry";
        case ErrorCode::ChunkGap: return "ChunkGap";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::UnparseableObjective: return "UnparseableObjective";
        case ErrorCode::UnknownReminder: return "UnknownReminder";
        case ErrorCode::ReminderCancelled: return "ReminderCancelled";
        case ErrorCode::InvalidTimeRange: return "InvalidTimeRange";
        case ErrorCode::SourceNotFound: return "SourceNotFound";
        case ErrorCode::SkillNotFound: return "SkillNotFound";
        case ErrorCode::ManifestInvalid: return "ManifestInvalid";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::UnknownTool: return "UnknownTool";
        case ErrorCode::ScenarioParse: return "ScenarioParse";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::PortBusy: return "PortBusy";
        case ErrorCode::ProtocolViolation: return "ProtocolViolation";
        case ErrorCode::QueueFull: return "QueueFull";
    }
    return "Unknown";
}

}  // namespace streamclaw
