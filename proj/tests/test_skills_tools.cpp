// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "reference_schemas.hpp"
#include "streamclaw/error.hpp"
#include "streamclaw/tools.hpp"
#include "test_util.hpp"

using namespace streamclaw;
using testutil::frame;

namespace {

/// Mock everywhere except "plan", which replays a fixed script (last line repeats).
class ScriptedBackend final : public ModelBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> script) : m_script(std::move(script)) {}

    Feature embed_text(std::string_view t) override { return m_mock.embed_text(t); }
    Caption caption_chunk(const Chunk& c) override { return m_mock.caption_chunk(c); }
    Caption caption_clip(const ClipRequest& c) override { return m_mock.caption_clip(c); }
    QueryRoute classify_query(std::string_view q) override { return m_mock.classify_query(q); }
    std::vector<DecodeStep> decode(std::string_view ctx, std::span<const CacheEntrySummary> cache) override {
        return m_mock.decode(ctx, cache);
    }
    std::string generate(std::string_view task, const Json& input) override {
        if (task != "plan") return m_mock.generate(task, input);
        ++plans;
        last_input = input;
        const std::size_t i = std::min(m_next++, m_script.size() - 1);
        return m_script[i];
    }

    std::size_t plans = 0;
    Json last_input;

private:
    MockBackend m_mock;
    std::vector<std::string> m_script;
    std::size_t m_next = 0;
};

std::filesystem::path skills_dir() { return testutil::source_dir() / "skills"; }

struct Rig {
    explicit Rig(ModelBackend& b) : backend(b), memory(b), proactivity(b), skills(skills_dir()),
                                    runtime(b, memory, proactivity, skills) {}
    ModelBackend& backend;
    MemoryStore memory;
    ProactivityEngine proactivity;
    SkillRegistry skills;
    ToolRuntime runtime;
};

CallContext ctx_at(AbsMs t) { return {t, t - 2000, t, std::nullopt}; }

}  // namespace

TEST(SkillManifest, LoadsDriverMonitoringWithDefault) {
    SkillRegistry reg(skills_dir());
    const auto m = reg.load_skill("driver_monitoring");
    ASSERT_EQ(m->output_schemas.size(), 1u);
    const auto* fn = m->function("driver_fatigue_warning");
    ASSERT_NE(fn, nullptr);
    ASSERT_EQ(fn->properties.size(), 1u);
    EXPECT_EQ(fn->properties[0].name, "fatigue_state");
    EXPECT_EQ(fn->properties[0].type, "integer");
    EXPECT_EQ(*fn->properties[0].default_value, Json(0));
    EXPECT_EQ(fn->required, std::vector<std::string>{"fatigue_state"});
}

TEST(SkillManifest, PromptShowsSchemasOnlyAfterLoad) {
    SkillRegistry reg(skills_dir());
    auto joined = [&] {
        std::string all;
        for (const auto& e : reg.prompt_entries()) all += e + "\n";
        return all;
    };
    const std::string before = joined();
    EXPECT_NE(before.find("driver_monitoring: Monitor the driver"), std::string::npos);
    EXPECT_EQ(before.find("fatigue_state"), std::string::npos);
    EXPECT_EQ(reg.load_count(), 0u);
    reg.load_skill("driver_monitoring");
    const std::string after = joined();
    EXPECT_NE(after.find("driver_fatigue_warning(fatigue_state:integer=0)"), std::string::npos);
    EXPECT_EQ(after.find("dial_emergency_number"), std::string::npos);
}

TEST(SkillManifest, UnknownSkillAndMissingDir) {
    SkillRegistry reg(skills_dir());
    try {
        reg.load_skill("juggling");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SkillNotFound);
    }
    EXPECT_THROW(SkillRegistry(testutil::scratch("skills_parent") / "missing"), Error);
}

TEST(SkillManifest, InvalidManifestNamesFieldPath) {
    Json j = Json::parse(testutil::read_file(skills_dir() / "household_care.json"));
    j["output_schemas"][1]["parameters"]["properties"]["phone_num"]["default"] = 5;
    try {
        parse_manifest(j);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ManifestInvalid);
        EXPECT_NE(std::string(e.what()).find("$.output_schemas[1].parameters.properties.phone_num.default"),
                  std::string::npos);
    }
    Json k = Json::parse(testutil::read_file(skills_dir() / "household_care.json"));
    k["output_schemas"][0]["parameters"]["required"] = {"nope"};
    EXPECT_THROW(parse_manifest(k), Error);

    // A broken file on disk is reported on load, not on discovery.
    const auto dir = testutil::scratch("bad_skills");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "broken.json") << R"({"name": "broken", "description": "d", "output_schemas": []})";
    SkillRegistry reg(dir);
    try {
        reg.load_skill("broken");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ManifestInvalid);
    }
}

TEST(SkillManifest, FilesRoundTripByteIdentically) {
    for (const auto* name : {"driver_monitoring", "household_care", "education_tutor"}) {
        const std::string bytes = testutil::read_file(skills_dir() / (std::string(name) + ".json"));
        const SkillManifest m = parse_manifest(Json::parse(bytes));
        EXPECT_EQ(m.source.dump(2) + "\n", bytes) << name;
    }
}

TEST(SkillManifest, SchemasMatchReferenceTranscription) {
    SkillRegistry reg(skills_dir());
    std::size_t seen = 0;
    for (const auto* skill : {"driver_monitoring", "household_care", "education_tutor"}) {
        for (const auto& fn : reg.load_skill(skill)->output_schemas) {
            const auto it = reference::output_schemas().find(fn.name);
            ASSERT_NE(it, reference::output_schemas().end()) << fn.name;
            EXPECT_EQ(fn.source, Json::parse(it->second)) << fn.name;
            ++seen;
        }
    }
    EXPECT_EQ(seen, reference::output_schemas().size());
}

TEST(SkillManifest, ConcurrentFirstLoadParsesOnce) {
    SkillRegistry reg(skills_dir());
    std::vector<std::shared_ptr<const SkillManifest>> got(16);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < got.size(); ++i) {
        threads.emplace_back([&, i] { got[i] = reg.load_skill("household_care"); });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(reg.load_count(), 1u);
    for (const auto& g : got) EXPECT_EQ(g.get(), got[0].get());
}

TEST(ValidateCall, FillsDefaultsAndRejectsBadKeys) {
    const SkillManifest m = parse_manifest(Json::parse(testutil::read_file(skills_dir() / "household_care.json")));
    const auto* dial = m.function("dial_emergency_number");
    const SkillCall filled = validate_call(*dial, {"dial_emergency_number", Json::object()});
    EXPECT_EQ(filled.args.at("phone_num"), reference::kDefaultPhone);
    EXPECT_EQ(filled.args.at("scene_description"), reference::kDefaultScene);

    const SkillCall kept = validate_call(*dial, {"dial_emergency_number", {{"phone_num", "555"}}});
    EXPECT_EQ(kept.args.at("phone_num"), "555");

    try {
        validate_call(*m.function("proactive_caring_inquiry"), {"proactive_caring_inquiry", {{"mood", "ok"}}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("missing [query]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("unknown [mood]"), std::string::npos) << msg;
    }
    EXPECT_THROW(validate_call(*dial, {"dial_emergency_number", {{"phone_num", 12}}}), Error);
}

TEST(SkillExec, FatigueMappingFollowsTriggers) {
    MockBackend mb;
    Rig rig(mb);
    const auto m = rig.skills.load_skill("driver_monitoring");
    const std::vector<std::pair<std::set<std::string>, int>> cases = {
        {{"eyes_closed"}, 2}, {{"yawning"}, 1},     {{"phone_use"}, 0},
        {{"head_down"}, 0},   {{"gaze_deviation"}, 0}, {{"eyes_closed", "yawning"}, 2}};
    for (const auto& [labels, want] : cases) {
        const auto call = m->call_for_labels(labels);
        ASSERT_TRUE(call);
        const OutEvent ev = rig.runtime.execute_skill_call(*call, ctx_at(10'000));
        EXPECT_EQ(ev.kind, OutEventKind::SkillExec);
        EXPECT_EQ(ev.payload->at("result").at("fatigue_state"), want);
    }
    EXPECT_FALSE(m->call_for_labels({"steering"}));
}

TEST(SkillExec, DialDefaultsAndMemoryWriteBack) {
    MockBackend mb;
    Rig rig(mb);
    std::vector<std::string> written;
    rig.runtime.set_memory_sink([&](const Chunk&, const std::string& s, const std::string& c) {
        written.push_back(s + "|" + c);
    });
    EXPECT_THROW(rig.runtime.execute_skill_call({"dial_emergency_number", Json::object()}, ctx_at(5000)), Error);
    rig.skills.load_skill("household_care");
    const OutEvent ev = rig.runtime.execute_skill_call({"dial_emergency_number", Json::object()}, ctx_at(5000));
    EXPECT_EQ(ev.payload->at("result").at("phone_num"), reference::kDefaultPhone);
    EXPECT_EQ(ev.payload->at("result").at("scene_description"), reference::kDefaultScene);
    ASSERT_EQ(written.size(), 1u);
    EXPECT_EQ(written[0].rfind("skill:dial_emergency_number|", 0), 0u);
}

TEST(SkillExec, HandlerFailureBecomesErrorEvent) {
    MockBackend mb;
    Rig rig(mb);
    rig.skills.load_skill("household_care");
    rig.runtime.set_skill_handler("proactive_caring_inquiry",
                                  [](const SkillCall&, const CallContext&) -> Json { throw std::runtime_error("boom"); });
    const OutEvent ev = rig.runtime.execute_skill_call({"proactive_caring_inquiry", {{"query", "ok?"}}}, ctx_at(1));
    EXPECT_EQ(ev.kind, OutEventKind::Error);
    EXPECT_NE(ev.text.find("boom"), std::string::npos);
}

TEST(VideoCut, CaptionsSubClip) {
    MockBackend mb;
    Rig rig(mb);
    std::vector<FrameRecord> frames;
    for (int s = 0; s < 20; ++s) {
        frames.push_back(frame(s + 1, 1'000'000 + s * 1000, {s >= 5 && s < 10 ? "goal_scored" : "midfield"}));
    }
    rig.runtime.register_source("match.mp4", frames, 1'000'000);
    EXPECT_EQ(rig.runtime.video_cut("What happened?", "match.mp4", 5, 10), "[5-10] goal_scored");
    EXPECT_EQ(rig.runtime.video_cut("q", "match.mp4", 3, 12), "[3-12] midfield goal_scored");
}

TEST(VideoCut, RejectsBadRangeAndUnknownSource) {
    MockBackend mb;
    Rig rig(mb);
    rig.runtime.register_source("clip", {frame(1, 0, {"a"})}, 0);
    for (double end : {10.0, 4.0}) {
        try {
            rig.runtime.video_cut("q", "clip", 10, end);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidTimeRange);
            EXPECT_NE(std::string(e.what()).find("must be larger than start time"), std::string::npos);
        }
    }
    try {
        rig.runtime.video_cut("q", "other", 0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SourceNotFound);
    }
}

TEST(CallMemory, EmptyStoreAndSingleNode) {
    MockBackend mb;
    Rig rig(mb);
    EXPECT_EQ(rig.runtime.call_memory("where are my keys"), "NO_MEMORY");
    rig.memory.write_segment(testutil::chunk(0, 0, 2000, {frame(1, 0, {"keys", "table"})}), "keys table",
                             "keys on the table");
    const std::string r = rig.runtime.call_memory("keys table");
    EXPECT_NE(r.find("keys table"), std::string::npos);
    EXPECT_NE(r.find("keys on the table"), std::string::npos);
    EXPECT_EQ(rig.runtime.memory_calls(), 2u);
}

TEST(Invoke, BuiltinsAndUnknown) {
    MockBackend mb;
    Rig rig(mb);
    const OutEvent ev = rig.runtime.invoke("web_search", {{"query", "x"}}, ctx_at(1));
    EXPECT_EQ(ev.text, ToolRuntime::kUnsupported);
    const OutEvent load = rig.runtime.invoke("load_skill", {{"name", "education_tutor"}}, ctx_at(1));
    EXPECT_EQ(load.text, "loaded education_tutor: solve_problems, create_proactive_node");
    EXPECT_THROW(rig.runtime.invoke("teleport", Json::object(), ctx_at(1)), Error);
    EXPECT_THROW(rig.runtime.invoke("call_memory", {{"query", 3}}, ctx_at(1)), Error);
}

TEST(ParseToolCall, Shapes) {
    EXPECT_FALSE(parse_tool_call("The answer is 4."));
    const auto c = parse_tool_call(R"(  {"tool": "call_memory", "args": {"query": "q"}} )");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->name, "call_memory");
    EXPECT_EQ(c->args.at("query"), "q");
    EXPECT_TRUE(parse_tool_call(R"({"tool": "web_search"})")->args.empty());
    EXPECT_THROW(parse_tool_call("{not json"), Error);
    EXPECT_THROW(parse_tool_call(R"({"args": {}})"), Error);
    EXPECT_THROW(parse_tool_call(R"({"tool": "x", "args": [1]})"), Error);
}

TEST(AgenticLoop, FinalAnswerInOneStep) {
    ScriptedBackend sb({"It is sunny."});
    Rig rig(sb);
    AgenticLoop loop(sb, rig.runtime);
    const auto r = loop.run({{"query", "weather?"}}, ctx_at(1));
    EXPECT_EQ(r.final_text, "It is sunny.");
    EXPECT_EQ(r.backend_calls, 1u);
    EXPECT_FALSE(r.forced);
    EXPECT_TRUE(r.events.empty());
}

TEST(AgenticLoop, ToolThenAnswerIsTwoSteps) {
    ScriptedBackend sb({R"({"tool": "load_skill", "args": {"name": "household_care"}})", "done"});
    Rig rig(sb);
    AgenticLoop loop(sb, rig.runtime);
    const auto r = loop.run({{"query", "q"}}, ctx_at(1));
    EXPECT_EQ(r.backend_calls, 2u);
    EXPECT_EQ(r.final_text, "done");
    ASSERT_EQ(r.events.size(), 1u);
    EXPECT_EQ(r.events[0].kind, OutEventKind::ToolResult);
    // the second decision saw the first call's result
    ASSERT_EQ(sb.last_input.at("history").size(), 1u);
    EXPECT_EQ(sb.last_input.at("history")[0], "load_skill -> loaded household_care: proactive_caring_inquiry, "
                                              "dial_emergency_number");
    EXPECT_TRUE(rig.skills.is_loaded("household_care"));
}

TEST(AgenticLoop, StepCapForcesFinalAnswer) {
    ScriptedBackend sb({R"({"tool": "web_search", "args": {"query": "again"}})"});
    Rig rig(sb);
    AgenticLoop loop(sb, rig.runtime);
    const auto r = loop.run({{"query", "q"}}, ctx_at(1));
    EXPECT_EQ(r.backend_calls, 8u);
    EXPECT_EQ(sb.plans, 8u);
    EXPECT_TRUE(r.forced);
    EXPECT_EQ(r.events.size(), 8u);
    EXPECT_EQ(r.final_text.rfind("Step limit reached. Partial results: web_search -> UNSUPPORTED", 0), 0u);
}

TEST(AgenticLoop, MalformedCallRetriesOnceThenFails) {
    {
        ScriptedBackend sb({"{oops", "fine"});
        Rig rig(sb);
        const auto r = AgenticLoop(sb, rig.runtime).run({{"query", "q"}}, ctx_at(1));
        EXPECT_EQ(r.final_text, "fine");
        EXPECT_FALSE(r.failed);
    }
    {
        ScriptedBackend sb({"{oops"});
        Rig rig(sb);
        const auto r = AgenticLoop(sb, rig.runtime).run({{"query", "q"}}, ctx_at(1));
        EXPECT_TRUE(r.failed);
        EXPECT_EQ(r.backend_calls, 2u);
        ASSERT_EQ(r.events.size(), 1u);
        EXPECT_EQ(r.events[0].kind, OutEventKind::Error);
    }
}

TEST(AgenticLoop, ToolErrorIsFedBack) {
    ScriptedBackend sb({R"({"tool": "video_cut", "args": {"query": "q", "path": "p", "start_time": 3,
                          "end_time": 1}})",
                        "ok"});
    Rig rig(sb);
    const auto r = AgenticLoop(sb, rig.runtime).run({{"query", "q"}}, ctx_at(1));
    EXPECT_EQ(r.final_text, "ok");
    ASSERT_EQ(r.events.size(), 1u);
    EXPECT_EQ(r.events[0].kind, OutEventKind::Error);
    EXPECT_NE(sb.last_input.at("history")[0].get<std::string>().find("must be larger than start time"),
              std::string::npos);
}
