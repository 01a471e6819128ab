// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "streamclaw/error.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

AbsMs ScenarioEvent::t_abs_ms() const {
    return std::visit([](const auto& p) { return p.t_abs_ms; }, payload);
}

std::vector<FrameRecord> Scenario::frames() const {
    std::vector<FrameRecord> out;
    for (const auto& ev : events) {
        if (const auto* f = std::get_if<FrameRecord>(&ev.payload)) out.push_back(*f);
    }
    return out;
}

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::ScenarioParse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

Scenario parse_scenario(std::istream& in, std::string id) {
    Scenario scenario;
    scenario.id = std::move(id);
    TimeAligner aligner;
    MockBackend embedder;
    std::optional<AbsMs> last_frame_t;
    std::uint64_t next_frame_id = 1;

    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (text::trim(raw).empty()) continue;
        Json j;
        try {
            j = Json::parse(raw);
        } catch (const Json::exception& e) {
            parse_error(lineno, std::string("malformed record: ") + e.what());
        }
        if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
            parse_error(lineno, "record lacks a string 'type'");
        }
        const std::string type = j.at("type").get<std::string>();
        try {
            if (type == "anchor") {
                aligner.set_anchor({j.at("device_rel_s").get<double>(), j.at("abs_ms").get<AbsMs>()});
            } else if (type == "frame") {
                FrameRecord f;
                f.frame_id = next_frame_id++;
                f.t_abs_ms = aligner.align(j.at("t_rel_s").get<double>());
                if (last_frame_t && f.t_abs_ms < *last_frame_t) {
                    parse_error(lineno, "frame time " + std::to_string(f.t_abs_ms) + " regresses");
                }
                last_frame_t = f.t_abs_ms;
                if (j.contains("labels")) f.labels = j.at("labels").get<std::vector<std::string>>();
                if (j.contains("summary")) f.summary = j.at("summary").get<std::string>();
                if (j.contains("feat")) {
                    const auto raw_feat = j.at("feat").get<std::vector<double>>();
                    if (raw_feat.size() != kFeatureDim) {
                        parse_error(lineno, "feat must have " + std::to_string(kFeatureDim) + " entries, got " +
                                                std::to_string(raw_feat.size()));
                    }
                    Feature feat{};
                    std::copy(raw_feat.begin(), raw_feat.end(), feat.begin());
                    f.feat = feat;
                } else if (f.summary && !f.summary->empty()) {
                    f.feat = embedder.embed_text(*f.summary);
                }
                scenario.events.push_back({lineno, std::move(f)});
            } else if (type == "query") {
                QueryEvent q;
                q.t_abs_ms = aligner.align(j.at("t_rel_s").get<double>());
                q.text = j.at("text").get<std::string>();
                scenario.events.push_back({lineno, std::move(q)});
            } else {
                parse_error(lineno, "unknown record type '" + type + "'");
            }
        } catch (const Json::exception& e) {
            parse_error(lineno, e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ScenarioParse) throw;
            parse_error(lineno, e.what());
        }
    }
    std::stable_sort(scenario.events.begin(), scenario.events.end(),
                     [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t_abs_ms() < b.t_abs_ms(); });
    return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ScenarioParse, "cannot read scenario '" + path.string() + "'");
    }
    return parse_scenario(in, path.stem().string());
}

ScenarioReplayer::ScenarioReplayer(Session& session, const RuntimeConfig& config)
    : m_session(session),
      m_cache(config.cache_max_frames, config.slow_stride),
      m_cutter(m_cache, config.chunk_seconds) {}

void ScenarioReplayer::process_chunk(const Chunk& chunk, const ReplayHooks& hooks) {
    m_session.on_chunk(chunk);
    if (hooks.after_chunk) hooks.after_chunk(chunk, m_session);
}

void ScenarioReplayer::replay(const Scenario& scenario, double speed, const ReplayHooks& hooks) {
    if (scenario.events.empty()) {
        return;
    }
    const AbsMs origin = scenario.events.front().t_abs_ms();
    m_cutter.set_origin(origin);
    m_clock_ms = origin;

    const auto pace = [&](AbsMs target) {
        if (speed > 0.0 && target > m_clock_ms) {
            const double wall_ms = static_cast<double>(target - m_clock_ms) / speed;
            std::this_thread::sleep_for(std::chrono::microseconds(static_cast<std::int64_t>(wall_ms * 1000.0)));
        }
    };
    const auto advance_to = [&](AbsMs t) {
        while (true) {
            const AbsMs next_boundary = *m_cutter.origin() + m_cutter.chunk_ms();
            if (next_boundary > t) break;
            pace(next_boundary);
            m_clock_ms = std::max(m_clock_ms, next_boundary);
            if (hooks.before_step && !hooks.before_step(next_boundary)) return false;
            process_chunk(*m_cutter.cut_chunk(next_boundary), hooks);
        }
        return true;
    };

    for (const auto& ev : scenario.events) {
        const AbsMs t = ev.t_abs_ms();
        if (!advance_to(t)) return;
        pace(t);
        m_clock_ms = std::max(m_clock_ms, t);
        if (hooks.before_step && !hooks.before_step(t)) return;
        if (const auto* f = std::get_if<FrameRecord>(&ev.payload)) {
            m_cache.push_frame(*f);
        } else {
            const auto& q = std::get<QueryEvent>(ev.payload);
            m_session.enqueue_query(q.text, q.t_abs_ms);
        }
    }

    // Final partial chunk covers through the last event.
    if (auto last = m_cutter.flush(m_clock_ms + 1)) {
        if (hooks.before_step && !hooks.before_step(last->end_ms)) return;
        process_chunk(*last, hooks);
    }
    m_session.finish();
}

std::unique_ptr<ModelBackend> backend_for(const SessionConfig& cfg, const RuntimeConfig& runtime) {
    std::string selector = cfg.backend;
    if (selector.empty()) {
        const char* env = std::getenv("STREAMCLAW_BACKEND");
        selector = env ? env : "mock";
    }
    return make_backend(selector, runtime.kv.layers);
}

int run_scenario(const SessionConfig& cfg, std::ostream& err) {
    RuntimeConfig runtime;
    Scenario scenario;
    std::unique_ptr<ModelBackend> backend;
    try {
        if (!cfg.config_path.empty()) runtime = load_config(cfg.config_path);
        scenario = load_scenario(cfg.scenario_path);
        backend = backend_for(cfg, runtime);
    } catch (const Error& e) {
        err << cfg.scenario_path.string() << ": " << e.what() << "\n";
        return kExitParse;
    }

    std::ofstream transcript;
    std::ofstream signals;
    std::ofstream memlog;
    if (!cfg.transcript_path.empty()) transcript.open(cfg.transcript_path, std::ios::trunc);
    if (!cfg.signals_path.empty()) signals.open(cfg.signals_path, std::ios::trunc);
    if (!cfg.memlog_path.empty()) memlog.open(cfg.memlog_path, std::ios::trunc);

    try {
        Session session(*backend, runtime);
        if (transcript.is_open()) {
            session.set_event_sink([&](const OutEvent& ev) { transcript << out_event_to_json(ev).dump() << '\n'; });
        }
        if (signals.is_open()) {
            session.set_signal_sink([&](const ProactiveSignal& s) { signals << signal_to_json(s).dump() << '\n'; });
        }
        if (memlog.is_open()) session.memory().set_mutation_log(&memlog);

        const auto frames = scenario.frames();
        const AbsMs origin = scenario.events.empty() ? 0 : scenario.events.front().t_abs_ms();
        session.tools().register_source(scenario.id, frames, origin);
        session.set_clip_source(scenario.id);

        ScenarioReplayer replayer(session, runtime);
        replayer.replay(scenario, cfg.speed);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::BackendUnavailable: return kExitBackend;
            case ErrorCode::SkillNotFound:
            case ErrorCode::ManifestInvalid:
            case ErrorCode::ConfigInvalid: return kExitParse;
            default: return kExitFailure;
        }
    }
    return kExitOk;
}

}  // namespace streamclaw
