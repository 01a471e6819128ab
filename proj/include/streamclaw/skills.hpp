// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamclaw/json.hpp"

namespace streamclaw {

struct PropertySpec {
    std::string name;
    std::string type;
    std::string description;
    std::optional<Json> default_value;
};

/// One structured output function of a skill, kept alongside its source object
/// so it re-serializes exactly as written.
struct FunctionSchema {
    std::string name;
    std::vector<PropertySpec> properties;
    std::vector<std::string> required;
    Json source;
};

struct SkillCall {
    std::string name;
    Json args = Json::object();
};

/// Frame labels that, when observed, make the skill emit `call`.
struct LabelTrigger {
    std::set<std::string> labels;
    SkillCall call;
};

struct SkillManifest {
    std::string name;
    std::string description;
    std::string token;
    std::string response;
    std::vector<std::string> trigger_scenarios;
    std::vector<LabelTrigger> triggers;
    std::map<std::string, std::vector<std::string>> invoke_phrases;
    std::vector<FunctionSchema> output_schemas;
    Json source;

    const FunctionSchema* function(std::string_view fn) const;
    /// Union of every trigger's labels.
    std::set<std::string> trigger_labels() const;
    /// First trigger (manifest order) whose labels intersect `observed`.
    std::optional<SkillCall> call_for_labels(const std::set<std::string>& observed) const;
};

/// Parses and validates a manifest; throws ManifestInvalid naming the field path.
SkillManifest parse_manifest(const Json& j);

/// Fills defaults and checks required <= keys <= properties plus property types.
/// Throws SchemaViolation listing missing and unknown keys.
SkillCall validate_call(const FunctionSchema& schema, const SkillCall& call);

struct SkillSummary {
    std::string name;
    std::string description;
};

/// Skill manifests discovered from a directory. Discovery keeps only names and
/// descriptions; full manifests are parsed on first load_skill().
class SkillRegistry {
public:
    SkillRegistry() = default;
    explicit SkillRegistry(const std::filesystem::path& dir);

    void discover(const std::filesystem::path& dir);
    /// Registers a manifest file without reading its schemas.
    void add_manifest_path(const std::string& name, const std::string& description, std::filesystem::path path);

    /// Idempotent; concurrent first loads parse the file once.
    std::shared_ptr<const SkillManifest> load_skill(const std::string& name);

    bool is_loaded(const std::string& name) const;
    std::vector<SkillSummary> discovered() const;
    std::vector<std::shared_ptr<const SkillManifest>> loaded() const;

    /// Loaded skill owning output function `fn`, if any.
    std::shared_ptr<const SkillManifest> owner_of(const std::string& fn) const;

    /// One entry per discovered skill, "name: description", with the function
    /// signatures appended only once the skill is loaded.
    std::vector<std::string> prompt_entries() const;

    std::size_t load_count() const;

private:
    mutable std::mutex m_mutex;
    std::map<std::string, SkillSummary> m_summaries;
    std::map<std::string, std::filesystem::path> m_paths;
    std::map<std::string, std::shared_ptr<const SkillManifest>> m_loaded;
    std::size_t m_load_count = 0;
};

}  // namespace streamclaw
