// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

// Command line front end: run, serve, memdump.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include "streamclaw/error.hpp"
#include "streamclaw/gateway.hpp"
#include "streamclaw/memory_store.hpp"
#include "streamclaw/scenario.hpp"

namespace {

std::atomic<bool> g_shutdown{false};

void on_signal(int) { g_shutdown = true; }

void add_common(CLI::App* cmd, streamclaw::SessionConfig& cfg) {
    cmd->add_option("scenario", cfg.scenario_path, "Scenario file (one JSON record per line)")->required();
    cmd->add_option("--config", cfg.config_path, "Runtime config file");
    cmd->add_option("--speed", cfg.speed, "Real-time multiplier, 0 = as fast as possible")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--backend", cfg.backend, "mock | remote:HOST:PORT (default: $STREAMCLAW_BACKEND or mock)");
    cmd->add_option("--transcript", cfg.transcript_path, "Write OutEvents here");
    cmd->add_option("--signals", cfg.signals_path, "Write proactive signals here");
    cmd->add_option("--memlog", cfg.memlog_path, "Write memory mutations here");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"StreamClaw streaming video agent runtime"};
    app.require_subcommand(1);

    streamclaw::SessionConfig run_cfg;
    run_cfg.backend.clear();
    auto* run = app.add_subcommand("run", "Replay a scenario and write the transcript");
    add_common(run, run_cfg);

    streamclaw::SessionConfig serve_cfg;
    serve_cfg.backend.clear();
    std::string listen;
    auto* serve = app.add_subcommand("serve", "Replay a scenario while serving the gateway protocol");
    add_common(serve, serve_cfg);
    serve->add_option("--listen", listen, "HOST:PORT to listen on")->required();
    serve->add_flag("--paused", serve_cfg.start_paused, "Wait for a resume message before streaming");
    serve->add_flag("--exit-on-end", serve_cfg.exit_on_end, "Stop once the scenario is exhausted");

    std::string memlog;
    auto* memdump = app.add_subcommand("memdump", "Rebuild and print the memory forest from a log");
    memdump->add_option("log", memlog, "Memory mutation log")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return streamclaw::run_scenario(run_cfg, std::cerr);
    }
    if (serve->parsed()) {
        serve_cfg.listen = listen;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        return streamclaw::serve(
            serve_cfg, std::cerr,
            [](std::uint16_t port) { std::cerr << "listening on port " << port << std::endl; }, &g_shutdown);
    }

    std::ifstream in(memlog);
    if (!in) {
        std::cerr << "cannot read " << memlog << "\n";
        return streamclaw::kExitParse;
    }
    try {
        std::cout << streamclaw::MemoryStore::render_forest(streamclaw::MemoryStore::replay(in));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return streamclaw::kExitParse;
    }
    return streamclaw::kExitOk;
}
