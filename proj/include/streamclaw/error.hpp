// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace streamclaw {

enum class ErrorCode {
    AnchorMissing,
    TimestampRegression,
    UnknownEntry,
    ChunkGap,
    BackendUnavailable,
    UnparseableObjective,
    UnknownReminder,
    ReminderCancelled,
    InvalidTimeRange,
    SourceNotFound,
    SkillNotFound,
    ManifestInvalid,
    SchemaViolation,
    UnknownTool,
    ScenarioParse,
    ConfigInvalid,
    PortBusy,
    ProtocolViolation,
    QueueFull,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the runtime is reported through this type;
/// callers switch on code() rather than on the message text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

}  // namespace streamclaw
