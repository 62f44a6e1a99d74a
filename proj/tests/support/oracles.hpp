#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "kge/model.hpp"

namespace testsupport {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite difference of f around one coordinate, restoring it after.
template <typename F>
double central_diff(F f, double& coord, double h) {
    const double orig = coord;
    coord = orig + h;
    const double hi = f();
    coord = orig - h;
    const double lo = f();
    coord = orig;
    return (hi - lo) / (2.0 * h);
}

// Filtered rank recomputed by materializing every corrupted triple, scoring
// it whole, and sorting. Exclusions come from a std::set built by the caller,
// not from the graph's prefix indexes.
inline double oracle_filtered_rank(const kge::ModelState& state, const kge::Triple& target,
                                   kge::Side side, const std::set<kge::Triple>& known,
                                   std::int64_t num_entities,
                                   kge::TieBreak tie = kge::TieBreak::realistic) {
    const kge::EntityId true_entity =
        side == kge::Side::object ? target.object : target.subject;
    std::vector<std::pair<double, kge::EntityId>> scored;
    for (kge::EntityId e = 0; e < num_entities; ++e) {
        kge::Triple candidate = target;
        (side == kge::Side::object ? candidate.object : candidate.subject) = e;
        if (e != true_entity && known.count(candidate) > 0) continue;
        scored.emplace_back(kge::score(state, candidate), e);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t first = scored.size(), last = 0;
    const double target_score = kge::score(state, target);
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (scored[i].first == target_score) {
            first = std::min(first, i);
            last = i;
        }
    }
    switch (tie) {
        case kge::TieBreak::optimistic: return static_cast<double>(first + 1);
        case kge::TieBreak::pessimistic: return static_cast<double>(last + 1);
        default: return (static_cast<double>(first + 1) + static_cast<double>(last + 1)) / 2.0;
    }
}

// MRR and Hits recomputed directly from a rank list.
inline kge::Metrics oracle_metrics(std::span<const double> ranks) {
    kge::Metrics m;
    m.count = static_cast<std::int64_t>(ranks.size());
    for (double r : ranks) {
        m.mrr += 1.0 / r;
        m.hits1 += r <= 1.0 ? 1.0 : 0.0;
        m.hits3 += r <= 3.0 ? 1.0 : 0.0;
        m.hits10 += r <= 10.0 ? 1.0 : 0.0;
    }
    if (!ranks.empty()) {
        const auto n = static_cast<double>(ranks.size());
        m.mrr /= n;
        m.hits1 /= n;
        m.hits3 /= n;
        m.hits10 /= n;
    }
    return m;
}

// Pearson chi-square statistic for equiprobable cells.
inline double chi_square_uniform(std::span<const std::int64_t> counts) {
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

// Domain and range sets per relation label, rebuilt from labeled triples with
// plain maps of sets.
struct RescannedClasses {
    std::map<std::string, std::set<std::string>> domain;
    std::map<std::string, std::set<std::string>> range;
};

inline RescannedClasses rescan_classes(const std::vector<kge::LabeledTriple>& train) {
    RescannedClasses r;
    for (const auto& t : train) {
        r.domain[t.predicate].insert(t.subject);
        r.range[t.predicate].insert(t.object);
    }
    return r;
}

}  // namespace testsupport
