// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "streamclaw/error.hpp"
#include "streamclaw/memory_store.hpp"
#include "streamclaw/scenario.hpp"
#include "test_util.hpp"

using namespace streamclaw;

namespace {

const std::vector<std::string> kGoldens = {"driver_fatigue", "household_fall", "tutor_proactive", "trip_reminder"};

int run_cli(const std::string& args, const std::filesystem::path& out) {
    const std::string cmd = std::string(STREAMCLAW_CLI) + " " + args + " > " + out.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

SessionConfig golden_config(const std::string& name, const std::filesystem::path& dir) {
    SessionConfig cfg;
    cfg.scenario_path = testutil::source_dir() / "scenarios" / (name + ".jsonl");
    cfg.config_path = testutil::source_dir() / "scenarios" / (name + ".config.json");
    cfg.backend = "mock";
    cfg.transcript_path = dir / (name + ".transcript.jsonl");
    cfg.signals_path = dir / (name + ".signals.jsonl");
    cfg.memlog_path = dir / (name + ".memlog.jsonl");
    return cfg;
}

}  // namespace

TEST(ParseScenario, FramesQueriesAndAlignment) {
    std::istringstream in(R"({"type": "anchor", "device_rel_s": 10.0, "abs_ms": 1000000}

{"type": "frame", "t_rel_s": 10.5, "labels": ["a"], "summary": "a thing"}
{"type": "query", "t_rel_s": 10.25, "text": "what?"}
{"type": "frame", "t_rel_s": 11.0, "labels": ["b"]}
)");
    const Scenario s = parse_scenario(in, "x");
    ASSERT_EQ(s.events.size(), 3u);
    EXPECT_EQ(s.events[0].t_abs_ms(), 1000250);
    EXPECT_TRUE(std::holds_alternative<QueryEvent>(s.events[0].payload));
    const auto frames = s.frames();
    ASSERT_EQ(frames.size(), 2u);
    EXPECT_EQ(frames[0].frame_id, 1u);
    EXPECT_EQ(frames[0].t_abs_ms, 1000500);
    EXPECT_TRUE(frames[0].feat.has_value());   // embedded from the summary
    EXPECT_FALSE(frames[1].feat.has_value());  // no summary, no feature
}

TEST(ParseScenario, ErrorsNameTheLine) {
    const std::string anchor = R"({"type": "anchor", "device_rel_s": 0, "abs_ms": 0})";
    const std::vector<std::pair<std::string, std::string>> cases = {
        {anchor + "\n{oops\n", "line 2"},
        {anchor + "\n" + R"({"type": "teleport"})" + "\n", "line 2"},
        {R"({"type": "frame", "t_rel_s": 0})" "\n", "line 1"},
        {anchor + "\n" + R"({"type": "frame", "t_rel_s": 0, "feat": [1, 2]})" + "\n", "line 2"},
        {anchor + "\n" + R"({"type": "frame", "t_rel_s": 2})" + "\n" + R"({"type": "frame", "t_rel_s": 1})" + "\n",
         "line 3"},
    };
    for (const auto& [text, where] : cases) {
        std::istringstream in(text);
        try {
            parse_scenario(in, "x");
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ScenarioParse);
            EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
        }
    }
}

TEST(RunScenario, EmptyScenarioGivesEmptyTranscript) {
    const auto dir = testutil::scratch("empty_run");
    std::ofstream(dir / "empty.jsonl") << "";
    SessionConfig cfg;
    cfg.scenario_path = dir / "empty.jsonl";
    cfg.transcript_path = dir / "t.jsonl";
    cfg.backend = "mock";
    std::ostringstream err;
    EXPECT_EQ(run_scenario(cfg, err), kExitOk) << err.str();
    EXPECT_EQ(testutil::read_file(dir / "t.jsonl"), "");
}

TEST(RunScenario, MalformedLineExitsTwo) {
    const auto dir = testutil::scratch("bad_run");
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"type": "anchor", "device_rel_s": 0, "abs_ms": 0})" << "\n";
    for (int i = 0; i < 5; ++i) out << R"({"type": "frame", "t_rel_s": )" << i << "}\n";
    out << "{\"type\": \"frame\", \"t_rel_s\": \n";
    out.close();
    SessionConfig cfg;
    cfg.scenario_path = dir / "bad.jsonl";
    cfg.transcript_path = dir / "t.jsonl";
    std::ostringstream err;
    EXPECT_EQ(run_scenario(cfg, err), kExitParse);
    EXPECT_NE(err.str().find("line 7"), std::string::npos) << err.str();
}

TEST(RunScenario, BadConfigAndBackend) {
    const auto dir = testutil::scratch("bad_cfg");
    std::ofstream(dir / "cfg.json") << R"({"kv": {"p_percent": 0}})";
    SessionConfig cfg = golden_config("driver_fatigue", dir);
    cfg.config_path = dir / "cfg.json";
    std::ostringstream err;
    EXPECT_EQ(run_scenario(cfg, err), kExitParse);

    cfg = golden_config("driver_fatigue", dir);
    cfg.backend = "remote:127.0.0.1:1";
    EXPECT_EQ(run_scenario(cfg, err), kExitBackend);
}

TEST(RunScenario, GoldenTranscriptsAreByteIdentical) {
    const auto dir = testutil::scratch("goldens");
    for (const auto& name : kGoldens) {
        const SessionConfig cfg = golden_config(name, dir);
        std::ostringstream err;
        ASSERT_EQ(run_scenario(cfg, err), kExitOk) << name << ": " << err.str();
        const std::string want = testutil::read_file(testutil::source_dir() / "tests" / "golden" /
                                                     (name + ".transcript.jsonl"));
        ASSERT_FALSE(want.empty()) << name;
        EXPECT_EQ(testutil::read_file(cfg.transcript_path), want) << name;
    }
}

TEST(RunScenario, MemlogReplaysToSameForest) {
    const auto dir = testutil::scratch("memlog");
    const SessionConfig cfg = golden_config("trip_reminder", dir);
    std::ostringstream err;
    ASSERT_EQ(run_scenario(cfg, err), kExitOk);
    std::ifstream log(cfg.memlog_path);
    const auto nodes = MemoryStore::replay(log);
    ASSERT_FALSE(nodes.empty());
    const std::string forest = MemoryStore::render_forest(nodes);
    EXPECT_NE(forest.find("event"), std::string::npos);

    EXPECT_EQ(run_cli("memdump " + cfg.memlog_path.string(), dir / "dump.txt"), 0);
    EXPECT_EQ(testutil::read_file(dir / "dump.txt"), forest);
}

TEST(Cli, ExitCodes) {
    const auto dir = testutil::scratch("cli");
    const auto scen = testutil::source_dir() / "scenarios";
    EXPECT_EQ(run_cli("run " + (scen / "tutor_proactive.jsonl").string() + " --config " +
                          (scen / "tutor_proactive.config.json").string() + " --transcript " +
                          (dir / "t.jsonl").string(),
                      dir / "out.txt"),
              0);
    EXPECT_EQ(testutil::read_file(dir / "t.jsonl"),
              testutil::read_file(testutil::source_dir() / "tests" / "golden" / "tutor_proactive.transcript.jsonl"));
    EXPECT_EQ(run_cli("run " + (dir / "missing.jsonl").string(), dir / "out.txt"), 2);
    EXPECT_NE(run_cli("frobnicate", dir / "out.txt"), 0);
}
