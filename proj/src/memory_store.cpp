// Copyright (C) 2026 StreamClaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamclaw/memory_store.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "streamclaw/error.hpp"
#include "streamclaw/text.hpp"

namespace streamclaw {

std::string_view to_string(NodeLevel level) {
    switch (level) {
        case NodeLevel::Segment: return "segment";
        case NodeLevel::AtomicAction: return "atomic_action";
        case NodeLevel::Event: return "event";
    }
    return "segment";
}

NodeLevel node_level_from_string(std::string_view s) {
    if (s == "segment") return NodeLevel::Segment;
    if (s == "atomic_action") return NodeLevel::AtomicAction;
    if (s == "event") return NodeLevel::Event;
    throw Error(ErrorCode::ConfigInvalid, "unknown node level '" + std::string(s) + "'");
}

Json node_to_json(const MemoryNode& n) {
    Json j;
    j["node_id"] = n.node_id;
    j["level"] = to_string(n.level);
    j["start_ms"] = n.start_ms;
    j["tau"] = n.tau;
    j["s"] = n.s;
    j["c"] = n.c;
    j["salience"] = n.salience;
    j["children"] = n.children;
    j["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
    j["labels"] = n.labels;
    j["z"] = {{"frame_ids", n.z.frame_ids}, {"centroid", n.z.centroid}};
    j["emb"] = n.emb;
    return j;
}

MemoryNode node_from_json(const Json& j) {
    MemoryNode n;
    n.node_id = j.at("node_id").get<std::uint64_t>();
    n.level = node_level_from_string(j.at("level").get<std::string>());
    n.start_ms = j.at("start_ms").get<AbsMs>();
    n.tau = j.at("tau").get<AbsMs>();
    n.s = j.at("s").get<std::string>();
    n.c = j.at("c").get<std::string>();
    n.salience = j.at("salience").get<double>();
    n.children = j.at("children").get<std::vector<std::uint64_t>>();
    if (!j.at("parent").is_null()) n.parent = j.at("parent").get<std::uint64_t>();
    n.labels = j.at("labels").get<std::vector<std::string>>();
    n.z.frame_ids = j.at("z").at("frame_ids").get<std::vector<std::uint64_t>>();
    n.z.centroid = j.at("z").at("centroid").get<Feature>();
    n.emb = j.at("emb").get<Feature>();
    return n;
}

void MemoryConfig::validate() const {
    if (salience_window == 0 || merge_candidates == 0 || batch_size == 0) {
        throw Error(ErrorCode::ConfigInvalid, "memory window/candidate/batch sizes must be positive");
    }
    if (!(temporal_scale_s > 0.0) || event_gap_s < 0.0) {
        throw Error(ErrorCode::ConfigInvalid, "memory.temporal_scale_s must be positive and event_gap_s non-negative");
    }
}

void RetrievalCommand::validate() const {
    if (top_k < 1 || budget < top_k) {
        throw Error(ErrorCode::ConfigInvalid, "retrieval needs budget >= top_k >= 1");
    }
    if (hit_threshold < 0.0) {
        throw Error(ErrorCode::ConfigInvalid, "retrieval hit threshold must be non-negative");
    }
}

void run_batches_async(std::vector<std::function<void()>>& tasks) {
    if (tasks.empty()) return;
    std::vector<std::future<void>> pending;
    pending.reserve(tasks.size() - 1);
    for (std::size_t i = 1; i < tasks.size(); ++i) {
        pending.push_back(std::async(std::launch::async, tasks[i]));
    }
    tasks[0]();
    for (auto& f : pending) f.get();
}

MemoryStore::MemoryStore(ModelBackend& backend, MemoryConfig config)
    : m_backend(backend), m_config(std::move(config)) {
    m_config.validate();
}

void MemoryStore::set_mutation_log(std::ostream* log) {
    std::unique_lock lock(m_mutex);
    m_log = log;
}

MemoryNode& MemoryStore::at(std::uint64_t id) {
    auto it = m_nodes.find(id);
    if (it == m_nodes.end()) {
        throw Error(ErrorCode::UnknownEntry, "no memory node " + std::to_string(id));
    }
    return it->second;
}

void MemoryStore::log_upsert(const MemoryNode& node) {
    if (m_log) {
        Json line;
        line["op"] = "upsert";
        line["node"] = node_to_json(node);
        *m_log << line.dump() << '\n';
    }
}

std::uint64_t MemoryStore::write_segment(const Chunk& chunk, const std::string& s, const std::string& c_detail) {
    std::unique_lock lock(m_mutex);
    if (m_last_tau && chunk.end_ms < *m_last_tau) {
        throw Error(ErrorCode::TimestampRegression, "segment ending at " + std::to_string(chunk.end_ms) +
                                                        " precedes last write at " + std::to_string(*m_last_tau));
    }
    m_last_tau = chunk.end_ms;

    MemoryNode seg;
    seg.node_id = m_next_id++;
    seg.level = NodeLevel::Segment;
    seg.start_ms = chunk.start_ms;
    seg.tau = chunk.end_ms;
    seg.s = s;
    seg.c = c_detail;
    seg.emb = m_backend.embed_text(s);

    std::vector<Feature> feats;
    std::unordered_set<std::string> seen;
    for (const auto& f : chunk.frames) {
        const Feature feat = f.feature_or_zero();
        m_frame_feats[f.frame_id] = feat;
        seg.z.frame_ids.push_back(f.frame_id);
        feats.push_back(feat);
        for (const auto& l : f.labels) {
            if (seen.insert(l).second) seg.labels.push_back(l);
        }
    }
    if (seg.labels.empty() && !s.empty()) {
        seg.labels.push_back(s);
    }
    seg.z.centroid = centroid(feats);

    if (m_segment_order.empty() || is_zero(seg.emb)) {
        seg.salience = 1.0;
    } else {
        double best = -1.0;
        const std::size_t n = m_segment_order.size();
        const std::size_t from = n > m_config.salience_window ? n - m_config.salience_window : 0;
        for (std::size_t i = from; i < n; ++i) {
            best = std::max(best, cosine(seg.emb, m_nodes.at(m_segment_order[i]).emb));
        }
        seg.salience = std::clamp(1.0 - best, 0.0, 1.0);
    }

    const auto id = seg.node_id;
    m_nodes.emplace(id, std::move(seg));
    m_segment_order.push_back(id);

    const auto aa = induce_locked(id);
    if (aa.created) {
        aggregate_locked(aa.node_id);
    }

    // One upsert per touched node, ancestors after descendants.
    std::vector<std::uint64_t> touched{id};
    for (auto cur = m_nodes.at(id).parent; cur; cur = m_nodes.at(*cur).parent) {
        touched.push_back(*cur);
    }
    for (auto t : touched) log_upsert(m_nodes.at(t));
    if (m_log) m_log->flush();
    return id;
}

MergeOutcome MemoryStore::induce_atomic_action(std::uint64_t seg_id) {
    std::unique_lock lock(m_mutex);
    return induce_locked(seg_id);
}

MergeOutcome MemoryStore::aggregate_event(std::uint64_t aa_id) {
    std::unique_lock lock(m_mutex);
    return aggregate_locked(aa_id);
}

void MemoryStore::refresh_from_children(MemoryNode& parent) {
    std::sort(parent.children.begin(), parent.children.end(), [&](std::uint64_t a, std::uint64_t b) {
        const auto& na = m_nodes.at(a);
        const auto& nb = m_nodes.at(b);
        if (na.tau != nb.tau) return na.tau < nb.tau;
        return a < b;
    });

    Chunk synthetic;
    parent.z.frame_ids.clear();
    parent.labels.clear();
    parent.salience = 0.0;
    std::unordered_set<std::string> seen;
    bool first = true;
    for (auto cid : parent.children) {
        const auto& child = m_nodes.at(cid);
        if (first) {
            parent.start_ms = child.start_ms;
            parent.tau = child.tau;
            first = false;
        } else {
            parent.start_ms = std::min(parent.start_ms, child.start_ms);
            parent.tau = std::max(parent.tau, child.tau);
        }
        parent.salience = std::max(parent.salience, child.salience);
        parent.z.frame_ids.insert(parent.z.frame_ids.end(), child.z.frame_ids.begin(), child.z.frame_ids.end());
        for (const auto& l : child.labels) {
            if (seen.insert(l).second) parent.labels.push_back(l);
        }
        FrameRecord f;
        f.labels = child.labels;
        f.summary = child.c;
        synthetic.frames.push_back(std::move(f));
    }

    std::vector<Feature> feats;
    feats.reserve(parent.z.frame_ids.size());
    for (auto fid : parent.z.frame_ids) feats.push_back(m_frame_feats.at(fid));
    parent.z.centroid = centroid(feats);

    const Caption cap = m_backend.caption_chunk(synthetic);
    parent.s = cap.summary;
    parent.c = cap.detail;
    parent.emb = m_backend.embed_text(parent.s);
}

std::uint64_t MemoryStore::create_parent(NodeLevel level, std::uint64_t child_id) {
    MemoryNode node;
    node.node_id = m_next_id++;
    node.level = level;
    node.children.push_back(child_id);
    const auto id = node.node_id;
    auto& stored = m_nodes.emplace(id, std::move(node)).first->second;
    m_nodes.at(child_id).parent = id;
    refresh_from_children(stored);
    return id;
}

MergeOutcome MemoryStore::induce_locked(std::uint64_t seg_id) {
    const MemoryNode& seg = at(seg_id);
    if (seg.level != NodeLevel::Segment) {
        throw Error(ErrorCode::UnknownEntry, "node " + std::to_string(seg_id) + " is not a segment");
    }

    std::vector<const MemoryNode*> candidates;
    for (const auto& [id, n] : m_nodes) {
        if (n.level == NodeLevel::AtomicAction) candidates.push_back(&n);
    }
    std::sort(candidates.begin(), candidates.end(), [](const MemoryNode* a, const MemoryNode* b) {
        if (a->tau != b->tau) return a->tau > b->tau;
        return a->node_id > b->node_id;
    });
    if (candidates.size() > m_config.merge_candidates) {
        candidates.resize(m_config.merge_candidates);
    }

    for (const MemoryNode* a : candidates) {
        const double dt_s = static_cast<double>(std::max<AbsMs>(0, seg.start_ms - a->tau)) / 1000.0;
        const double score = m_config.alpha * cosine(seg.emb, a->emb) +
                             m_config.beta * std::exp(-dt_s / m_config.temporal_scale_s);
        if (score >= m_config.atomic_threshold) {
            const auto aa_id = a->node_id;
            auto& aa = at(aa_id);
            aa.children.push_back(seg_id);
            at(seg_id).parent = aa_id;
            refresh_from_children(aa);
            if (aa.parent) {
                refresh_from_children(at(*aa.parent));
            }
            return {aa_id, false};
        }
    }
    return {create_parent(NodeLevel::AtomicAction, seg_id), true};
}

MergeOutcome MemoryStore::aggregate_locked(std::uint64_t aa_id) {
    const MemoryNode& aa = at(aa_id);
    if (aa.level != NodeLevel::AtomicAction) {
        throw Error(ErrorCode::UnknownEntry, "node " + std::to_string(aa_id) + " is not an atomic action");
    }

    const MemoryNode* latest = nullptr;
    for (const auto& [id, n] : m_nodes) {
        if (n.level != NodeLevel::Event) continue;
        if (!latest || n.tau > latest->tau || (n.tau == latest->tau && n.node_id > latest->node_id)) {
            latest = &n;
        }
    }

    if (latest) {
        const double scene_sim = cosine(aa.z.centroid, latest->z.centroid);
        const AbsMs gap = aa.start_ms - latest->tau;
        const auto max_gap = static_cast<AbsMs>(std::llround(m_config.event_gap_s * 1000.0));
        if (scene_sim >= m_config.event_threshold && gap <= max_gap) {
            const auto ev_id = latest->node_id;
            auto& ev = at(ev_id);
            ev.children.push_back(aa_id);
            at(aa_id).parent = ev_id;
            refresh_from_children(ev);
            return {ev_id, false};
        }
    }
    return {create_parent(NodeLevel::Event, aa_id), true};
}

RetrievalResult MemoryStore::retrieve(const RetrievalCommand& cmd, const AgentView& view,
                                      const BatchRunner& runner) const {
    cmd.validate();

    struct Candidate {
        std::uint64_t id;
        AbsMs start_ms;
        AbsMs tau;
        double salience;
        Feature emb;
        std::string s;
        std::string c;
    };
    std::vector<Candidate> candidates;
    {
        std::shared_lock lock(m_mutex);
        for (const auto& [id, n] : m_nodes) {
            if (view.levels.contains(n.level)) {
                candidates.push_back({id, n.start_ms, n.tau, n.salience, n.emb, n.s, n.c});
            }
        }
    }

    switch (cmd.traversal) {
        case Traversal::Forward:
            std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
                if (a.tau != b.tau) return a.tau < b.tau;
                return a.id < b.id;
            });
            break;
        case Traversal::Reverse:
            std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
                if (a.tau != b.tau) return a.tau > b.tau;
                return a.id > b.id;
            });
            break;
        case Traversal::SalienceFirst:
            std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
                if (a.salience != b.salience) return a.salience > b.salience;
                if (a.tau != b.tau) return a.tau > b.tau;
                return a.id > b.id;
            });
            break;
    }
    if (candidates.size() > cmd.budget) {
        candidates.resize(cmd.budget);
    }

    const Feature q = m_backend.embed_text(cmd.query);
    std::vector<double> relevance(candidates.size(), 0.0);
    const std::size_t batch = m_config.batch_size;

    RetrievalResult result;
    std::size_t next = 0;
    std::size_t batches_in_wave = 1;
    while (next < candidates.size()) {
        // Waves double in width: 1, 2, 4, ... batches.
        std::vector<std::function<void()>> tasks;
        const std::size_t wave_begin = next;
        for (std::size_t b = 0; b < batches_in_wave && next < candidates.size(); ++b) {
            const std::size_t lo = next;
            const std::size_t hi = std::min(candidates.size(), lo + batch);
            tasks.emplace_back([&, lo, hi] {
                for (std::size_t i = lo; i < hi; ++i) {
                    relevance[i] = cosine(q, candidates[i].emb);
                }
            });
            next = hi;
        }
        runner(tasks);
        ++result.waves;
        result.scored = next;

        if (cmd.mode == RetrievalMode::SingleFact) {
            const bool hit = std::any_of(relevance.begin() + static_cast<std::ptrdiff_t>(wave_begin),
                                         relevance.begin() + static_cast<std::ptrdiff_t>(next),
                                         [&](double r) { return r >= cmd.hit_threshold; });
            if (hit) break;
        }
        batches_in_wave *= 2;
    }

    std::vector<std::size_t> order(result.scored);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (relevance[a] != relevance[b]) return relevance[a] > relevance[b];
        if (candidates[a].tau != candidates[b].tau) return candidates[a].tau < candidates[b].tau;
        return candidates[a].id < candidates[b].id;
    });
    for (std::size_t i = 0; i < std::min(cmd.top_k, order.size()); ++i) {
        const auto& cand = candidates[order[i]];
        result.hits.push_back({cand.id, relevance[order[i]], cand.s, cand.c, cand.start_ms, cand.tau});
    }
    return result;
}

std::vector<MemoryNode> MemoryStore::view_nodes(const AgentView& view, AbsMs since_ms, AbsMs until_ms) const {
    std::vector<MemoryNode> out;
    if (since_ms >= until_ms) {
        return out;
    }
    std::shared_lock lock(m_mutex);
    for (const auto& [id, n] : m_nodes) {
        if (view.levels.contains(n.level) && n.start_ms < until_ms && n.tau >= since_ms) {
            out.push_back(n);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const MemoryNode& a, const MemoryNode& b) {
        if (a.tau != b.tau) return a.tau < b.tau;
        return a.node_id < b.node_id;
    });
    return out;
}

std::vector<std::uint64_t> MemoryStore::prune_by_salience() {
    std::unique_lock lock(m_mutex);
    std::vector<std::uint64_t> removed;
    for (auto it = m_segment_order.begin(); it != m_segment_order.end();) {
        const auto& seg = m_nodes.at(*it);
        if (seg.salience < m_config.prune_salience && seg.parent) {
            auto& parent = m_nodes.at(*seg.parent);
            if (parent.children.size() >= 2) {
                const auto id = *it;
                std::erase(parent.children, id);
                m_nodes.erase(id);
                removed.push_back(id);
                if (m_log) {
                    Json line;
                    line["op"] = "delete";
                    line["node_id"] = id;
                    *m_log << line.dump() << '\n';
                    log_upsert(parent);
                }
                it = m_segment_order.erase(it);
                continue;
            }
        }
        ++it;
    }
    if (m_log) m_log->flush();
    return removed;
}

std::optional<MemoryNode> MemoryStore::node(std::uint64_t id) const {
    std::shared_lock lock(m_mutex);
    auto it = m_nodes.find(id);
    if (it == m_nodes.end()) return std::nullopt;
    return it->second;
}

std::vector<MemoryNode> MemoryStore::nodes() const {
    std::shared_lock lock(m_mutex);
    std::vector<MemoryNode> out;
    out.reserve(m_nodes.size());
    for (const auto& [id, n] : m_nodes) out.push_back(n);
    return out;
}

MemoryStats MemoryStore::stats() const {
    std::shared_lock lock(m_mutex);
    MemoryStats s;
    for (const auto& [id, n] : m_nodes) {
        switch (n.level) {
            case NodeLevel::Segment: ++s.segments; break;
            case NodeLevel::AtomicAction: ++s.atomic_actions; break;
            case NodeLevel::Event: ++s.events; break;
        }
    }
    return s;
}

std::vector<MemoryNode> MemoryStore::replay(std::istream& log) {
    std::map<std::uint64_t, MemoryNode> forest;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(log, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const Json j = Json::parse(line);
            const auto op = j.at("op").get<std::string>();
            if (op == "upsert") {
                auto n = node_from_json(j.at("node"));
                forest[n.node_id] = std::move(n);
            } else if (op == "delete") {
                forest.erase(j.at("node_id").get<std::uint64_t>());
            } else {
                throw Error(ErrorCode::ScenarioParse, "unknown op '" + op + "'");
            }
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ScenarioParse, "memory log line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::ScenarioParse, "memory log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::vector<MemoryNode> out;
    out.reserve(forest.size());
    for (auto& [id, n] : forest) out.push_back(std::move(n));
    return out;
}

std::string MemoryStore::render_forest(const std::vector<MemoryNode>& nodes) {
    std::map<std::uint64_t, const MemoryNode*> by_id;
    for (const auto& n : nodes) by_id[n.node_id] = &n;

    std::ostringstream out;
    std::function<void(const MemoryNode&, int)> emit = [&](const MemoryNode& n, int depth) {
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << to_string(n.level) << " #" << n.node_id
            << " [" << n.start_ms << "-" << n.tau << "] salience=" << n.salience << " s=\"" << n.s << "\"\n";
        for (auto cid : n.children) {
            if (auto it = by_id.find(cid); it != by_id.end()) emit(*it->second, depth + 1);
        }
    };
    for (const auto& n : nodes) {
        if (!n.parent || !by_id.contains(*n.parent)) emit(n, 0);
    }
    return out.str();
}

}  // namespace streamclaw
