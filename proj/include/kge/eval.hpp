#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "kge/error.hpp"
#include "kge/kg.hpp"
#include "kge/model.hpp"
#include "kge/sampler.hpp"

namespace kge {

// Realistic = mean of optimistic and pessimistic positions among equal
// scores; the tie-robust convention. The other two are kept for comparisons.
enum class TieBreak { realistic, optimistic, pessimistic };

struct EvalConfig {
    int chunk = 4096;  // candidates scored per block; no effect on results
    TieBreak tie = TieBreak::realistic;
    bool rank_dump = false;
    int threads = 1;

    void validate() const {
        if (chunk < 1) throw ConfigError("eval.chunk must be >= 1");
        if (threads < 1) throw ConfigError("eval.threads must be >= 1");
    }
};

struct Metrics {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    std::int64_t count = 0;
};

struct RankEntry {
    Triple triple;
    Side side;
    double rank;
};

struct EvalReport {
    Metrics overall;
    Metrics subject_side;
    Metrics object_side;
    std::vector<std::pair<RelationId, Metrics>> per_relation;  // sorted by id
    std::vector<RankEntry> ranks;                              // filled when rank_dump is on
};

namespace detail {

inline double rank_from_counts(std::int64_t higher, std::int64_t equal, TieBreak tie) {
    switch (tie) {
        case TieBreak::optimistic: return static_cast<double>(higher + 1);
        case TieBreak::pessimistic: return static_cast<double>(higher + equal + 1);
        default: return static_cast<double>(higher) + static_cast<double>(equal) / 2.0 + 1.0;
    }
}

// Binary search for the candidate entity among the known-true triples that
// share the fixed (entity, predicate) pair. The spans come from the graph's
// prefix indexes, so they are sorted by the varying slot.
inline bool excluded_candidate(std::span<const Triple> known, Side side, EntityId candidate) {
    if (side == Side::object) {
        auto it = std::lower_bound(known.begin(), known.end(), candidate,
                                   [](const Triple& t, EntityId e) { return t.object < e; });
        return it != known.end() && it->object == candidate;
    }
    auto it = std::lower_bound(known.begin(), known.end(), candidate,
                               [](const Triple& t, EntityId e) { return t.subject < e; });
    return it != known.end() && it->subject == candidate;
}

}  // namespace detail

// Filtered rank of the target among all single-side corruptions that do not
// form a known-true triple. The target itself always stays in the candidate
// set. Candidates are scored in chunks; the chunk size only bounds transient
// memory.
inline double filtered_rank(const ModelState& state, const Triple& target, Side side,
                            const KnowledgeGraph& graph, TieBreak tie = TieBreak::realistic,
                            int chunk = 4096) {
    if (!graph.known(target))
        throw DataError("filtered_rank target not in filter index: " + graph.render(target) +
                        " (split bookkeeping bug)");
    const auto known = side == Side::object
                           ? graph.known_with_subject_predicate(target.subject, target.predicate)
                           : graph.known_with_predicate_object(target.predicate, target.object);
    const Query query = compose_query(state, target, side);
    const EntityId true_entity = side == Side::object ? target.object : target.subject;
    const double target_score = score_candidate(query, state.entity_row(true_entity));

    std::int64_t higher = 0, equal = 0;
    const auto n = static_cast<EntityId>(graph.num_entities());
    for (EntityId block = 0; block < n; block += static_cast<EntityId>(chunk)) {
        const EntityId end = std::min<EntityId>(n, block + static_cast<EntityId>(chunk));
        for (EntityId e = block; e < end; ++e) {
            if (e == true_entity) continue;
            if (detail::excluded_candidate(known, side, e)) continue;
            const double sc = score_candidate(query, state.entity_row(e));
            if (sc > target_score)
                ++higher;
            else if (sc == target_score)
                ++equal;
        }
    }
    return detail::rank_from_counts(higher, equal, tie);
}

namespace detail {

inline Metrics metrics_from_ranks(std::span<const double> ranks) {
    Metrics m;
    m.count = static_cast<std::int64_t>(ranks.size());
    if (ranks.empty()) return m;
    for (double r : ranks) {
        m.mrr += 1.0 / r;
        if (r <= 1.0) m.hits1 += 1.0;
        if (r <= 3.0) m.hits3 += 1.0;
        if (r <= 10.0) m.hits10 += 1.0;
    }
    const auto n = static_cast<double>(ranks.size());
    m.mrr /= n;
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    return m;
}

}  // namespace detail

// Filtered link-prediction evaluation: both sides of every triple are ranked,
// so the report aggregates 2 * |split| ranks. Triples are independent; with
// threads > 1 they are ranked in parallel with results written by index, so
// the report does not depend on the thread count.
inline EvalReport evaluate(const ModelState& state, std::span<const Triple> split,
                           const KnowledgeGraph& graph, const EvalConfig& cfg = {}) {
    cfg.validate();
    if (split.empty()) throw DataError("evaluate: empty split");

    std::vector<double> subject_ranks(split.size());
    std::vector<double> object_ranks(split.size());
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            subject_ranks[i] = filtered_rank(state, split[i], Side::subject, graph, cfg.tie, cfg.chunk);
            object_ranks[i] = filtered_rank(state, split[i], Side::object, graph, cfg.tie, cfg.chunk);
        }
    };
    const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), split.size());
    if (nthreads <= 1) {
        worker(0, split.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t per = (split.size() + nthreads - 1) / nthreads;
        for (std::size_t t = 0; t < nthreads; ++t) {
            const std::size_t begin = t * per;
            const std::size_t end = std::min(split.size(), begin + per);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    EvalReport report;
    std::vector<double> all;
    all.reserve(2 * split.size());
    all.insert(all.end(), subject_ranks.begin(), subject_ranks.end());
    all.insert(all.end(), object_ranks.begin(), object_ranks.end());
    report.overall = detail::metrics_from_ranks(all);
    report.subject_side = detail::metrics_from_ranks(subject_ranks);
    report.object_side = detail::metrics_from_ranks(object_ranks);

    std::map<RelationId, std::vector<double>> by_relation;
    for (std::size_t i = 0; i < split.size(); ++i) {
        auto& v = by_relation[split[i].predicate];
        v.push_back(subject_ranks[i]);
        v.push_back(object_ranks[i]);
    }
    for (const auto& [rel, ranks] : by_relation)
        report.per_relation.emplace_back(rel, detail::metrics_from_ranks(ranks));

    if (cfg.rank_dump) {
        report.ranks.reserve(2 * split.size());
        for (std::size_t i = 0; i < split.size(); ++i)
            report.ranks.push_back({split[i], Side::subject, subject_ranks[i]});
        for (std::size_t i = 0; i < split.size(); ++i)
            report.ranks.push_back({split[i], Side::object, object_ranks[i]});
    }
    return report;
}

namespace detail {

inline std::string fmt_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

// Tab-separated report: one row per scope (overall, each side, each relation).
inline std::string render_report_tsv(const EvalReport& report, const KnowledgeGraph& graph) {
    std::string out = "scope\tkey\tmrr\thits@1\thits@3\thits@10\tranks\n";
    auto row = [&out](const std::string& scope, const std::string& key, const Metrics& m) {
        out += scope + '\t' + key + '\t' + detail::fmt_metric(m.mrr) + '\t' +
               detail::fmt_metric(m.hits1) + '\t' + detail::fmt_metric(m.hits3) + '\t' +
               detail::fmt_metric(m.hits10) + '\t' + std::to_string(m.count) + '\n';
    };
    row("overall", "-", report.overall);
    row("side", "subject", report.subject_side);
    row("side", "object", report.object_side);
    for (const auto& [rel, m] : report.per_relation) row("relation", graph.relations().label(rel), m);
    return out;
}

inline std::string render_rank_dump_tsv(const EvalReport& report, const KnowledgeGraph& graph) {
    std::string out = "subject\tpredicate\tobject\tside\trank\n";
    char buf[32];
    for (const auto& r : report.ranks) {
        std::snprintf(buf, sizeof(buf), "%g", r.rank);
        out += graph.entities().label(r.triple.subject) + '\t' +
               graph.relations().label(r.triple.predicate) + '\t' +
               graph.entities().label(r.triple.object) + '\t' + to_string(r.side) + '\t' + buf + '\n';
    }
    return out;
}

}  // namespace kge
