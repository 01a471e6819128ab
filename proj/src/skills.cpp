// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/skills.hpp"

#include <fstream>
#include <sstream>

#include "streamclaw/error.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ManifestInvalid, path + ": " + what);
}

const Json& require(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) invalid(path + "." + key, "missing");
    return j.at(key);
}

std::string require_string(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = require(j, key, path);
    if (!v.is_string()) invalid(path + "." + key, "expected string");
    return v.get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const std::string& path) {
    if (!j.is_array()) invalid(path, "expected array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) invalid(path + "[" + std::to_string(i) + "]", "expected string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

bool type_matches(const std::string& type, const Json& v) {
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    return false;
}

FunctionSchema parse_function(const Json& j, const std::string& path) {
    FunctionSchema fs;
    fs.source = j;
    fs.name = require_string(j, "name", path);
    const Json& params = require(j, "parameters", path);
    const Json& props = require(params, "properties", path + ".parameters");
    if (!props.is_object()) invalid(path + ".parameters.properties", "expected object");
    for (const auto& [key, spec] : props.items()) {
        const std::string ppath = path + ".parameters.properties." + key;
        PropertySpec p;
        p.name = key;
        p.type = require_string(spec, "type", ppath);
        if (p.type != "integer" && p.type != "number" && p.type != "string" && p.type != "boolean") {
            invalid(ppath + ".type", "unsupported type '" + p.type + "'");
        }
        if (spec.contains("description")) p.description = require_string(spec, "description", ppath);
        if (spec.contains("default")) {
            if (!type_matches(p.type, spec.at("default"))) invalid(ppath + ".default", "does not match type");
            p.default_value = spec.at("default");
        }
        fs.properties.push_back(std::move(p));
    }
    fs.required = string_list(require(params, "required", path + ".parameters"), path + ".parameters.required");
    for (std::size_t i = 0; i < fs.required.size(); ++i) {
        if (!props.contains(fs.required[i])) {
            invalid(path + ".parameters.required[" + std::to_string(i) + "]",
                    "'" + fs.required[i] + "' is not a declared property");
        }
    }
    return fs;
}

std::string describe_signature(const FunctionSchema& fs) {
    std::vector<std::string> args;
    for (const auto& p : fs.properties) {
        std::string a = p.name + ":" + p.type;
        if (p.default_value) a += "=" + p.default_value->dump();
        args.push_back(std::move(a));
    }
    return fs.name + "(" + text::join(args, ", ") + ")";
}

}  // namespace

const FunctionSchema* SkillManifest::function(std::string_view fn) const {
    for (const auto& f : output_schemas) {
        if (f.name == fn) return &f;
    }
    return nullptr;
}

std::set<std::string> SkillManifest::trigger_labels() const {
    std::set<std::string> out;
    for (const auto& t : triggers) out.insert(t.labels.begin(), t.labels.end());
    return out;
}

std::optional<SkillCall> SkillManifest::call_for_labels(const std::set<std::string>& observed) const {
    for (const auto& t : triggers) {
        for (const auto& l : t.labels) {
            if (observed.contains(l)) return t.call;
        }
    }
    return std::nullopt;
}

SkillManifest parse_manifest(const Json& j) {
    if (!j.is_object()) invalid("$", "expected object");
    SkillManifest m;
    m.source = j;
    m.name = require_string(j, "name", "$");
    m.description = require_string(j, "description", "$");
    if (j.contains("token")) {
        m.token = require_string(j, "token", "$");
        if (m.token.rfind("<TRIG:", 0) != 0 || m.token.back() != '>') invalid("$.token", "must look like <TRIG:name>");
    }
    if (j.contains("response")) m.response = require_string(j, "response", "$");
    if (j.contains("trigger_scenarios")) m.trigger_scenarios = string_list(j.at("trigger_scenarios"), "$.trigger_scenarios");

    const Json& schemas = require(j, "output_schemas", "$");
    if (!schemas.is_array() || schemas.empty()) invalid("$.output_schemas", "expected non-empty array");
    for (std::size_t i = 0; i < schemas.size(); ++i) {
        m.output_schemas.push_back(parse_function(schemas[i], "$.output_schemas[" + std::to_string(i) + "]"));
    }

    if (j.contains("triggers")) {
        const Json& triggers = j.at("triggers");
        if (!triggers.is_array()) invalid("$.triggers", "expected array");
        for (std::size_t i = 0; i < triggers.size(); ++i) {
            const std::string path = "$.triggers[" + std::to_string(i) + "]";
            LabelTrigger t;
            for (auto& l : string_list(require(triggers[i], "labels", path), path + ".labels")) t.labels.insert(l);
            const Json& call = require(triggers[i], "call", path);
            t.call.name = require_string(call, "name", path + ".call");
            if (!m.function(t.call.name)) invalid(path + ".call.name", "unknown function '" + t.call.name + "'");
            if (call.contains("args")) t.call.args = call.at("args");
            m.triggers.push_back(std::move(t));
        }
    }
    if (j.contains("invoke_phrases")) {
        const Json& phrases = j.at("invoke_phrases");
        if (!phrases.is_object()) invalid("$.invoke_phrases", "expected object");
        for (const auto& [fn, list] : phrases.items()) {
            if (!m.function(fn)) invalid("$.invoke_phrases." + fn, "unknown function");
            m.invoke_phrases[fn] = string_list(list, "$.invoke_phrases." + fn);
        }
    }
    if (!m.triggers.empty() && m.token.empty()) invalid("$.token", "required when triggers are declared");
    return m;
}

SkillCall validate_call(const FunctionSchema& schema, const SkillCall& call) {
    if (!call.args.is_object()) {
        throw Error(ErrorCode::SchemaViolation, call.name + ": args must be an object");
    }
    SkillCall filled{schema.name, call.args};
    std::vector<std::string> unknown;
    std::vector<std::string> missing;
    std::vector<std::string> mistyped;
    for (const auto& [key, val] : call.args.items()) {
        auto it = std::find_if(schema.properties.begin(), schema.properties.end(),
                               [&](const PropertySpec& p) { return p.name == key; });
        if (it == schema.properties.end()) {
            unknown.push_back(key);
        } else if (!type_matches(it->type, val)) {
            mistyped.push_back(key);
        }
    }
    for (const auto& p : schema.properties) {
        if (!filled.args.contains(p.name) && p.default_value) filled.args[p.name] = *p.default_value;
    }
    for (const auto& r : schema.required) {
        if (!filled.args.contains(r)) missing.push_back(r);
    }
    if (!unknown.empty() || !missing.empty() || !mistyped.empty()) {
        std::string msg = schema.name + ":";
        if (!missing.empty()) msg += " missing [" + text::join(missing, ", ") + "]";
        if (!unknown.empty()) msg += " unknown [" + text::join(unknown, ", ") + "]";
        if (!mistyped.empty()) msg += " mistyped [" + text::join(mistyped, ", ") + "]";
        throw Error(ErrorCode::SchemaViolation, msg);
    }
    return filled;
}

SkillRegistry::SkillRegistry(const std::filesystem::path& dir) {
    discover(dir);
}

void SkillRegistry::discover(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::SkillNotFound, "skills directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::ifstream in(path);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ManifestInvalid, path.string() + ": " + e.what());
        }
        add_manifest_path(require_string(j, "name", path.string()), require_string(j, "description", path.string()),
                          path);
    }
}

void SkillRegistry::add_manifest_path(const std::string& name, const std::string& description,
                                      std::filesystem::path path) {
    std::lock_guard lock(m_mutex);
    m_summaries[name] = {name, description};
    m_paths[name] = std::move(path);
}

std::shared_ptr<const SkillManifest> SkillRegistry::load_skill(const std::string& name) {
    std::lock_guard lock(m_mutex);
    if (auto it = m_loaded.find(name); it != m_loaded.end()) {
        return it->second;
    }
    auto pit = m_paths.find(name);
    if (pit == m_paths.end() || !std::filesystem::exists(pit->second)) {
        throw Error(ErrorCode::SkillNotFound, "no manifest for skill '" + name + "'");
    }
    std::ifstream in(pit->second);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ManifestInvalid, pit->second.string() + ": " + e.what());
    }
    auto manifest = std::make_shared<const SkillManifest>(parse_manifest(j));
    ++m_load_count;
    m_loaded.emplace(name, manifest);
    return manifest;
}

bool SkillRegistry::is_loaded(const std::string& name) const {
    std::lock_guard lock(m_mutex);
    return m_loaded.contains(name);
}

std::vector<SkillSummary> SkillRegistry::discovered() const {
    std::lock_guard lock(m_mutex);
    std::vector<SkillSummary> out;
    for (const auto& [n, s] : m_summaries) out.push_back(s);
    return out;
}

std::vector<std::shared_ptr<const SkillManifest>> SkillRegistry::loaded() const {
    std::lock_guard lock(m_mutex);
    std::vector<std::shared_ptr<const SkillManifest>> out;
    for (const auto& [n, m] : m_loaded) out.push_back(m);
    return out;
}

std::shared_ptr<const SkillManifest> SkillRegistry::owner_of(const std::string& fn) const {
    std::lock_guard lock(m_mutex);
    for (const auto& [n, m] : m_loaded) {
        if (m->function(fn)) return m;
    }
    return nullptr;
}

std::vector<std::string> SkillRegistry::prompt_entries() const {
    std::lock_guard lock(m_mutex);
    std::vector<std::string> out;
    for (const auto& [name, summary] : m_summaries) {
        std::string entry = name + ": " + summary.description;
        if (auto it = m_loaded.find(name); it != m_loaded.end()) {
            std::vector<std::string> sigs;
            for (const auto& f : it->second->output_schemas) sigs.push_back(describe_signature(f));
            entry += " {functions: " + text::join(sigs, "; ") + "}";
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::size_t SkillRegistry::load_count() const {
    std::lock_guard lock(m_mutex);
    return m_load_count;
}

}  // namespace streamclaw
