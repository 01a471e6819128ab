// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "streamclaw/error.hpp"
#include "streamclaw/orchestrator.hpp"
#include "test_util.hpp"

using namespace streamclaw;
using testutil::chunk;
using testutil::frame;

namespace {

constexpr AbsMs kT0 = 1'760'000'000'000;

/// Chunk `i` of a 2 s grid at 2 fps, every frame carrying `labels`.
Chunk grid_chunk(std::int64_t i, std::vector<std::string> labels, std::mt19937_64& rng) {
    const AbsMs start = kT0 + i * 2000;
    std::vector<FrameRecord> frames;
    for (int k = 0; k < 4; ++k) {
        frames.push_back(frame(static_cast<std::uint64_t>(i * 4 + k + 1), start + k * 500, labels, std::nullopt,
                               testutil::random_feature(rng)));
    }
    return chunk(i, start, start + 2000, frames);
}

RuntimeConfig skills_config() {
    RuntimeConfig cfg;
    cfg.skills_dir = testutil::source_dir() / "skills";
    return cfg;
}

}  // namespace

TEST(Session, StepOrderPerChunk) {
    MockBackend mb;
    Session s(mb, {});
    std::mt19937_64 rng(1);
    s.on_chunk(grid_chunk(0, {"road"}, rng));
    s.on_chunk(grid_chunk(1, {"road"}, rng));
    const std::vector<std::string> one = {"update_time", "write_visual", "proactivity",
                                          "drain_queries", "decode_prune", "slide_window"};
    std::vector<std::string> want = one;
    want.insert(want.end(), one.begin(), one.end());
    EXPECT_EQ(s.trace(), want);
    EXPECT_EQ(s.cycles().size(), 2u);
}

TEST(Session, ChunkGapIsRejected) {
    MockBackend mb;
    Session s(mb, {});
    std::mt19937_64 rng(1);
    s.on_chunk(grid_chunk(0, {}, rng));
    try {
        s.on_chunk(grid_chunk(2, {}, rng));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ChunkGap);
    }
}

TEST(Session, PromptCarriesNowAndSkills) {
    MockBackend mb;
    Session s(mb, skills_config());
    std::mt19937_64 rng(1);
    s.on_chunk(grid_chunk(0, {"steering", "road"}, rng));
    const std::string p = s.build_prompt();
    EXPECT_EQ(p.rfind("NOW_ABS_MS=" + std::to_string(kT0 + 2000) + "\nSKILLS: ", 0), 0u) << p;
    EXPECT_NE(p.find("driver_monitoring: Monitor the driver"), std::string::npos);
    EXPECT_NE(p.find("\nWINDOW: steering road"), std::string::npos);
}

TEST(Session, RoutingProbesAndDirectPathIsolation) {
    MockBackend mb;
    Session s(mb, {});
    std::mt19937_64 rng(1);
    for (int i = 0; i < 3; ++i) s.on_chunk(grid_chunk(i, {"cup"}, rng));

    s.enqueue_query("What is on the table?", kT0 + 6000);
    auto out = s.on_chunk(grid_chunk(3, {"cup"}, rng));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].payload->at("route"), "direct");
    EXPECT_EQ(out[0].text, "Now: cup");
    EXPECT_EQ(s.probes().direct, 1u);
    EXPECT_EQ(s.probes().memory + s.probes().proactive + s.probes().reminders_created, 0u);
    EXPECT_EQ(s.tools().memory_calls(), 0u);
    EXPECT_TRUE(s.proactivity().nodes().empty());

    s.enqueue_query("What was here 4 seconds ago?", kT0 + 8000);
    out = s.on_chunk(grid_chunk(4, {"cup"}, rng));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].payload->at("route"), "memory");
    EXPECT_EQ(s.probes().memory, 1u);
    EXPECT_EQ(s.tools().memory_calls(), 1u);

    s.enqueue_query("Remind me in 1 minute to stretch", kT0 + 10000);
    out = s.on_chunk(grid_chunk(5, {"cup"}, rng));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].payload->at("route"), "proactive");
    EXPECT_EQ(out[0].payload->at("reminder").at("trigger_at_ms"), kT0 + 70000);
    EXPECT_EQ(s.probes().proactive, 1u);
    EXPECT_EQ(s.probes().reminders_created, 1u);
    EXPECT_EQ(s.probes().direct, 1u);
}

TEST(Session, ProactiveSignalPrecedesAnswerInSameChunk) {
    MockBackend mb;
    Session s(mb, {});
    std::mt19937_64 rng(1);
    s.enqueue_query("Remind me in 3 seconds", kT0);
    auto out = s.on_chunk(grid_chunk(0, {}, rng));
    ASSERT_EQ(out.size(), 1u);

    s.enqueue_query("What do you see?", kT0 + 3000);
    out = s.on_chunk(grid_chunk(1, {"door"}, rng));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].kind, OutEventKind::Proactive);
    EXPECT_EQ(out[0].payload->at("token"), "<TRIG:time_reminder>");
    EXPECT_EQ(out[1].kind, OutEventKind::Answer);
    EXPECT_EQ(s.transcript().size(), 3u);
    ASSERT_EQ(s.signals().size(), 2u);  // silent on chunk 0, fired on chunk 1
    EXPECT_EQ(s.signals()[0].token, "<SILENT>");

    out = s.on_chunk(grid_chunk(2, {"door"}, rng));
    EXPECT_TRUE(out.empty());
}

TEST(Session, SkillTriggerRunsStructuredCall) {
    MockBackend mb;
    RuntimeConfig cfg = skills_config();
    cfg.skills = {"driver_monitoring"};
    Session s(mb, cfg);
    std::mt19937_64 rng(1);
    EXPECT_TRUE(s.on_chunk(grid_chunk(0, {"steering"}, rng)).empty());
    auto out = s.on_chunk(grid_chunk(1, {"eyes_closed"}, rng));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].kind, OutEventKind::Proactive);
    EXPECT_EQ(out[0].text, "Driver alert: eyes_closed");
    EXPECT_EQ(out[0].payload->at("token"), "<TRIG:driver_monitoring>");
    EXPECT_EQ(out[1].kind, OutEventKind::SkillExec);
    EXPECT_EQ(out[1].payload->at("result").at("fatigue_state"), 2);
    // persistent: fires again while the condition holds
    out = s.on_chunk(grid_chunk(2, {"yawning"}, rng));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[1].payload->at("result").at("fatigue_state"), 1);
}

TEST(Session, SkillPhraseOnDirectPath) {
    MockBackend mb;
    RuntimeConfig cfg = skills_config();
    cfg.skills = {"household_care"};
    Session s(mb, cfg);
    std::mt19937_64 rng(1);
    s.on_chunk(grid_chunk(0, {"person_fallen"}, rng));
    s.enqueue_query("Please make an emergency call now", kT0 + 2000);
    const auto out = s.on_chunk(grid_chunk(1, {"person_fallen"}, rng));
    // proactive + caring inquiry, then the dial skill and the answer
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[2].kind, OutEventKind::SkillExec);
    EXPECT_EQ(out[2].text, "dial_emergency_number");
    EXPECT_EQ(out[2].payload->at("result").at("phone_num"), "123456789");
    EXPECT_EQ(out[3].kind, OutEventKind::Answer);
    EXPECT_EQ(out[3].payload->at("steps"), 2);
}

TEST(Session, WindowBoundAndOffload) {
    MockBackend mb;
    RuntimeConfig cfg;
    cfg.kv.window_seconds = 10;
    Session s(mb, cfg);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 30; ++i) {
        s.on_chunk(grid_chunk(i, {"lane"}, rng));
        for (const auto& e : s.kv().entries()) {
            EXPECT_GE(e.write_ms, s.now_ms() - 10'000);
        }
    }
    EXPECT_EQ(s.memory().stats().segments, 25u);
    s.finish();
    EXPECT_EQ(s.memory().stats().segments, 30u);
}

TEST(Session, ObjectiveRequests) {
    MockBackend mb;
    Session s(mb, {});
    std::mt19937_64 rng(1);
    PendingRequest set;
    set.type = PendingRequest::Type::SetObjective;
    set.text = "in 10 seconds";
    set.t_abs_ms = kT0;
    s.enqueue(set);
    auto out = s.on_chunk(grid_chunk(0, {}, rng));
    ASSERT_EQ(out.size(), 1u);
    const auto rid = out[0].payload->at("reminder").at("rid").get<std::uint64_t>();

    PendingRequest cancel;
    cancel.type = PendingRequest::Type::CancelObjective;
    cancel.rid = rid;
    s.enqueue(cancel);
    cancel.rid = 999;
    s.enqueue(cancel);
    out = s.on_chunk(grid_chunk(1, {}, rng));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].text, "Objective #" + std::to_string(rid) + " cancelled.");
    EXPECT_EQ(out[1].kind, OutEventKind::Error);
    for (int i = 2; i < 8; ++i) EXPECT_TRUE(s.on_chunk(grid_chunk(i, {}, rng)).empty());
}
