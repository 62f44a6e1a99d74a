#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kge/classes.hpp"
#include "kge/error.hpp"
#include "kge/kg.hpp"
#include "kge/rng.hpp"

namespace kge {

enum class Side : std::uint8_t { subject, object };
enum class Provenance : std::uint8_t { random, type_constrained };

// How the corrupted side is chosen for each negative. The default flips a
// fair coin per corruption.
enum class SidePolicy : std::uint8_t { both, subject_only, object_only };

struct SamplerConfig {
    int eta = 10;        // negatives per positive
    double nu = 0.0;     // fraction of type-constrained negatives, in [0, 1]
    SidePolicy side_policy = SidePolicy::both;
    std::uint64_t seed = 0;

    void validate() const {
        if (eta < 1) throw ConfigError("sampler.eta must be >= 1, got " + std::to_string(eta));
        if (!(nu >= 0.0 && nu <= 1.0))
            throw ConfigError("sampler.nu must be in [0, 1], got " + std::to_string(nu));
    }
};

struct Corruption {
    Triple triple;
    Side side;
    Provenance provenance;
};

// Flat batch of corruptions: eta per positive, grouped by positive in input
// order.
struct NegativeBatch {
    std::vector<Triple> positives;
    std::vector<Corruption> corruptions;
    int eta = 0;

    std::span<const Corruption> for_positive(std::size_t i) const {
        return {corruptions.data() + i * static_cast<std::size_t>(eta),
                static_cast<std::size_t>(eta)};
    }
};

struct SplitCounts {
    int type_constrained;
    int random;
};

// Split eta into the type-constrained and random shares. nu is the proportion
// of type-constrained negatives; the type-constrained share takes the ceiling
// so the two counts always sum to eta. The 1e-9 slack keeps products like
// 20 * 0.55 from rounding up across an integer boundary.
inline SplitCounts split_counts(int eta, double nu) {
    const int tc = static_cast<int>(std::ceil(static_cast<double>(eta) * nu - 1e-9));
    return {tc, eta - tc};
}

namespace detail {

inline Side choose_side(SidePolicy policy, Rng& rng) {
    switch (policy) {
        case SidePolicy::subject_only: return Side::subject;
        case SidePolicy::object_only: return Side::object;
        default: return rng.coin() ? Side::object : Side::subject;
    }
}

inline Triple replace(const Triple& t, Side side, EntityId e) {
    return side == Side::subject ? Triple{e, t.predicate, t.object}
                                 : Triple{t.subject, t.predicate, e};
}

}  // namespace detail

// Uniform corruption: the replacement entity is drawn uniformly from the
// whole entity set. Collisions with the true entity or with known-true
// triples are tolerated; they are the false negatives this family of
// samplers accepts.
inline void sample_uniform(const Triple& positive, int count, const KnowledgeGraph& graph,
                           SidePolicy policy, Rng& rng, std::vector<Corruption>& out) {
    const auto n = static_cast<std::uint64_t>(graph.num_entities());
    for (int i = 0; i < count; ++i) {
        const Side side = detail::choose_side(policy, rng);
        const auto e = static_cast<EntityId>(rng.below(n));
        out.push_back({detail::replace(positive, side, e), side, Provenance::random});
    }
}

// Type-constrained corruption: subject replacements are drawn uniformly (with
// replacement) from the members of the relation's domain class, object
// replacements from its range class.
inline void sample_type_constrained(const Triple& positive, int count, const ClassIndex& classes,
                                    SidePolicy policy, Rng& rng, std::vector<Corruption>& out) {
    const auto domain = classes.members(classes.domain_of(positive.predicate));
    const auto range = classes.members(classes.range_of(positive.predicate));
    for (int i = 0; i < count; ++i) {
        const Side side = detail::choose_side(policy, rng);
        const auto& pool = side == Side::subject ? domain : range;
        if (pool.empty())
            throw DataError("empty " + std::string(side == Side::subject ? "domain" : "range") +
                            " class for predicate id " + std::to_string(positive.predicate));
        const EntityId e = pool[rng.below(pool.size())];
        out.push_back({detail::replace(positive, side, e), side, Provenance::type_constrained});
    }
}

// Mixed sampling: the random share is drawn first, then the type-constrained
// share. Duplicates across the two pools are kept so the batch always holds
// exactly eta corruptions per positive.
inline void sample_mixed(const Triple& positive, const SamplerConfig& config,
                         const KnowledgeGraph& graph, const ClassIndex& classes, Rng& rng,
                         std::vector<Corruption>& out) {
    const auto counts = split_counts(config.eta, config.nu);
    sample_uniform(positive, counts.random, graph, config.side_policy, rng, out);
    sample_type_constrained(positive, counts.type_constrained, classes, config.side_policy, rng, out);
}

// Seed of the per-positive substream. Keyed by (seed, global positive index)
// so corruptions do not depend on how positives are batched.
inline std::uint64_t positive_stream_seed(std::uint64_t seed, std::uint64_t global_index) {
    return derive_seed(derive_seed(seed, 0x504F53ULL /* "POS" */), global_index);
}

inline NegativeBatch sample_batch(std::span<const Triple> positives, const SamplerConfig& config,
                                  const KnowledgeGraph& graph, const ClassIndex& classes,
                                  std::uint64_t first_global_index = 0) {
    config.validate();
    if (positives.empty()) throw DataError("sample_batch: empty positives");
    NegativeBatch batch;
    batch.eta = config.eta;
    batch.positives.assign(positives.begin(), positives.end());
    batch.corruptions.reserve(positives.size() * static_cast<std::size_t>(config.eta));
    for (std::size_t i = 0; i < positives.size(); ++i) {
        Rng rng(positive_stream_seed(config.seed, first_global_index + i));
        sample_mixed(positives[i], config, graph, classes, rng, batch.corruptions);
    }
    return batch;
}

inline const char* to_string(Side s) { return s == Side::subject ? "subject" : "object"; }
inline const char* to_string(Provenance p) {
    return p == Provenance::random ? "random" : "type_constrained";
}
inline const char* to_string(SidePolicy p) {
    switch (p) {
        case SidePolicy::both: return "both";
        case SidePolicy::subject_only: return "subject_only";
        default: return "object_only";
    }
}

inline SidePolicy side_policy_from_string(const std::string& name) {
    if (name == "both") return SidePolicy::both;
    if (name == "subject_only") return SidePolicy::subject_only;
    if (name == "object_only") return SidePolicy::object_only;
    throw ConfigError("unknown side policy '" + name + "' (both|subject_only|object_only)");
}

}  // namespace kge
