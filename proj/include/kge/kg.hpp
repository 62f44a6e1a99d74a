#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kge/error.hpp"
#include "kge/rng.hpp"

namespace kge {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
    EntityId subject;
    RelationId predicate;
    EntityId object;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct LabeledTriple {
    std::string subject;
    std::string predicate;
    std::string object;

    friend bool operator==(const LabeledTriple&, const LabeledTriple&) = default;
};

enum class Split { train, valid, test };

// Dense label <-> id vocabulary. Ids are assigned by first appearance.
class Vocabulary {
public:
    EntityId get_or_add(const std::string& label) {
        auto it = index_.find(label);
        if (it != index_.end()) return it->second;
        const auto id = static_cast<EntityId>(labels_.size());
        labels_.push_back(label);
        index_.emplace(labels_.back(), id);
        return id;
    }

    std::optional<EntityId> lookup(std::string_view label) const {
        auto it = index_.find(std::string(label));
        return it == index_.end() ? std::nullopt : std::optional<EntityId>(it->second);
    }

    const std::string& label(EntityId id) const { return labels_.at(static_cast<std::size_t>(id)); }
    std::int64_t size() const { return static_cast<std::int64_t>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, EntityId> index_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

inline bool sp_less(const Triple& a, const Triple& b) {
    if (a.subject != b.subject) return a.subject < b.subject;
    return a.predicate < b.predicate;
}

inline bool po_less(const Triple& a, const Triple& b) {
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    return a.object < b.object;
}

}  // namespace detail

// Indexed triple store over dense vocabularies plus the filter index of all
// known-true triples (train u valid u test). Immutable after construction;
// concurrent reads are safe.
class KnowledgeGraph {
public:
    static KnowledgeGraph build(const std::vector<LabeledTriple>& train,
                                const std::vector<LabeledTriple>& valid,
                                const std::vector<LabeledTriple>& test) {
        KnowledgeGraph g;
        // Vocabulary order: first appearance over train, then valid, then test;
        // within a triple subject before object.
        for (const auto* split : {&train, &valid, &test}) {
            for (const auto& t : *split) {
                g.entities_.get_or_add(t.subject);
                g.relations_.get_or_add(t.predicate);
                g.entities_.get_or_add(t.object);
            }
        }
        // Every valid/test entity and relation must be covered by train.
        {
            std::vector<char> ent_seen(static_cast<std::size_t>(g.entities_.size()), 0);
            std::vector<char> rel_seen(static_cast<std::size_t>(g.relations_.size()), 0);
            for (const auto& t : train) {
                ent_seen[static_cast<std::size_t>(*g.entities_.lookup(t.subject))] = 1;
                ent_seen[static_cast<std::size_t>(*g.entities_.lookup(t.object))] = 1;
                rel_seen[static_cast<std::size_t>(*g.relations_.lookup(t.predicate))] = 1;
            }
            std::vector<std::string> missing;
            for (const auto* split : {&valid, &test}) {
                for (const auto& t : *split) {
                    if (!ent_seen[static_cast<std::size_t>(*g.entities_.lookup(t.subject))])
                        missing.push_back("entity '" + t.subject + "'");
                    if (!ent_seen[static_cast<std::size_t>(*g.entities_.lookup(t.object))])
                        missing.push_back("entity '" + t.object + "'");
                    if (!rel_seen[static_cast<std::size_t>(*g.relations_.lookup(t.predicate))])
                        missing.push_back("relation '" + t.predicate + "'");
                }
            }
            if (!missing.empty()) {
                std::sort(missing.begin(), missing.end());
                missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
                std::string msg = "valid/test contain items absent from train:";
                const std::size_t shown = std::min<std::size_t>(missing.size(), 10);
                for (std::size_t i = 0; i < shown; ++i) msg += " " + missing[i];
                if (missing.size() > shown)
                    msg += " (+" + std::to_string(missing.size() - shown) + " more)";
                throw DataError(msg);
            }
        }
        g.train_ = g.to_ids(train);
        g.valid_ = g.to_ids(valid);
        g.test_ = g.to_ids(test);
        for (const auto* split : {&g.train_, &g.valid_, &g.test_}) {
            auto sorted = *split;
            std::sort(sorted.begin(), sorted.end());
            auto dup = std::adjacent_find(sorted.begin(), sorted.end());
            if (dup != sorted.end())
                throw DataError("duplicate triple within split: " + g.render(*dup));
        }
        g.build_filter_index();
        return g;
    }

    std::int64_t num_entities() const { return entities_.size(); }
    std::int64_t num_relations() const { return relations_.size(); }
    const Vocabulary& entities() const { return entities_; }
    const Vocabulary& relations() const { return relations_; }

    const std::vector<Triple>& train() const { return train_; }
    const std::vector<Triple>& valid() const { return valid_; }
    const std::vector<Triple>& test() const { return test_; }

    const std::vector<Triple>& split(Split s) const {
        switch (s) {
            case Split::train: return train_;
            case Split::valid: return valid_;
            default: return test_;
        }
    }

    std::int64_t filter_size() const { return static_cast<std::int64_t>(spo_.size()); }

    // True iff the triple was registered from some split.
    bool known(const Triple& t) const {
        return std::binary_search(spo_.begin(), spo_.end(), t);
    }

    // All known-true triples sharing (subject, predicate), sorted by object.
    std::span<const Triple> known_with_subject_predicate(EntityId s, RelationId p) const {
        const Triple lo{s, p, 0};
        auto [first, last] = std::equal_range(spo_.begin(), spo_.end(), lo, detail::sp_less);
        return {spo_.data() + (first - spo_.begin()), static_cast<std::size_t>(last - first)};
    }

    // All known-true triples sharing (predicate, object), sorted by subject.
    std::span<const Triple> known_with_predicate_object(RelationId p, EntityId o) const {
        const Triple lo{0, p, o};
        auto [first, last] = std::equal_range(pos_.begin(), pos_.end(), lo, detail::po_less);
        return {pos_.data() + (first - pos_.begin()), static_cast<std::size_t>(last - first)};
    }

    std::string render(const Triple& t) const {
        return "(" + entities_.label(t.subject) + ", " + relations_.label(t.predicate) + ", " +
               entities_.label(t.object) + ")";
    }

    std::vector<LabeledTriple> labeled(Split s) const {
        std::vector<LabeledTriple> out;
        out.reserve(split(s).size());
        for (const auto& t : split(s))
            out.push_back({entities_.label(t.subject), relations_.label(t.predicate),
                           entities_.label(t.object)});
        return out;
    }

    // Order-sensitive digest of both vocabularies; checkpoints carry it so a
    // model can never be evaluated against mismatched ids.
    std::uint64_t vocab_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto feed = [&h](std::string_view s) {
            for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
            h = (h ^ 0x1f) * 0x100000001b3ULL;
        };
        for (const auto& l : entities_.labels()) feed(l);
        h = (h ^ 0x7c) * 0x100000001b3ULL;
        for (const auto& l : relations_.labels()) feed(l);
        return h;
    }

private:
    std::vector<Triple> to_ids(const std::vector<LabeledTriple>& in) const {
        std::vector<Triple> out;
        out.reserve(in.size());
        for (const auto& t : in)
            out.push_back({*entities_.lookup(t.subject), *relations_.lookup(t.predicate),
                           *entities_.lookup(t.object)});
        return out;
    }

    void build_filter_index() {
        spo_.reserve(train_.size() + valid_.size() + test_.size());
        for (const auto* split : {&train_, &valid_, &test_})
            spo_.insert(spo_.end(), split->begin(), split->end());
        std::sort(spo_.begin(), spo_.end());
        spo_.erase(std::unique(spo_.begin(), spo_.end()), spo_.end());
        pos_ = spo_;
        std::sort(pos_.begin(), pos_.end(), [](const Triple& a, const Triple& b) {
            if (a.predicate != b.predicate) return a.predicate < b.predicate;
            if (a.object != b.object) return a.object < b.object;
            return a.subject < b.subject;
        });
    }

    Vocabulary entities_;
    Vocabulary relations_;
    std::vector<Triple> train_;
    std::vector<Triple> valid_;
    std::vector<Triple> test_;
    std::vector<Triple> spo_;  // filter index sorted by (s, p, o)
    std::vector<Triple> pos_;  // filter index sorted by (p, o, s)
};

// Reads a tab-separated triple file: one (subject, predicate, object) per
// line, no header. Labels keep interior whitespace; surrounding whitespace is
// trimmed. Blank lines are skipped.
inline std::vector<LabeledTriple> load_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triple file: " + path.string());
    std::vector<LabeledTriple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        const auto tab3 = tab2 == std::string::npos ? std::string::npos : line.find('\t', tab2 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos || tab3 != std::string::npos)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 3 tab-separated fields");
        LabeledTriple t{std::string(detail::trim(std::string_view(line).substr(0, tab1))),
                        std::string(detail::trim(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1))),
                        std::string(detail::trim(std::string_view(line).substr(tab2 + 1)))};
        if (t.subject.empty() || t.predicate.empty() || t.object.empty())
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty field");
        out.push_back(std::move(t));
    }
    if (out.empty()) throw DataError("empty triple file: " + path.string());
    return out;
}

inline void write_triples(const std::filesystem::path& path, const std::vector<LabeledTriple>& triples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write triple file: " + path.string());
    for (const auto& t : triples) out << t.subject << '\t' << t.predicate << '\t' << t.object << '\n';
}

struct SplitSpec {
    std::size_t valid_size = 0;
    std::size_t test_size = 0;
    std::uint64_t seed = 0;
};

struct SplitResult {
    std::vector<LabeledTriple> train;
    std::vector<LabeledTriple> valid;
    std::vector<LabeledTriple> test;
};

// Random split that guarantees every entity and relation of valid u test also
// appears in train. Triples are visited in seeded shuffled order and held out
// only while each of their labels retains at least one other occurrence in
// the remaining pool; triples that would break coverage stay in train. Test
// triples are drawn first, then valid.
inline SplitResult random_split(const std::vector<LabeledTriple>& triples, const SplitSpec& spec) {
    const std::size_t holdout = spec.valid_size + spec.test_size;
    if (holdout >= triples.size())
        throw DataError("split sizes (" + std::to_string(spec.valid_size) + " valid + " +
                        std::to_string(spec.test_size) + " test) must leave a nonempty train set of " +
                        std::to_string(triples.size()) + " triples");

    std::unordered_map<std::string, std::size_t> ent_count;
    std::unordered_map<std::string, std::size_t> rel_count;
    for (const auto& t : triples) {
        ++ent_count[t.subject];
        ++ent_count[t.object];
        ++rel_count[t.predicate];
    }

    std::vector<std::size_t> order(triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(spec.seed, 0x53504C4954ULL));  // "SPLIT"
    shuffle(order, rng);

    std::vector<char> held(triples.size(), 0);
    std::vector<std::size_t> held_order;
    held_order.reserve(holdout);
    for (std::size_t idx : order) {
        if (held_order.size() == holdout) break;
        const auto& t = triples[idx];
        const std::size_t need_subject = t.subject == t.object ? 3 : 2;
        if (ent_count[t.subject] < need_subject) continue;
        if (t.subject != t.object && ent_count[t.object] < 2) continue;
        if (rel_count[t.predicate] < 2) continue;
        --ent_count[t.subject];
        --ent_count[t.object];
        --rel_count[t.predicate];
        held[idx] = 1;
        held_order.push_back(idx);
    }
    if (held_order.size() < holdout)
        throw DataError("cannot hold out " + std::to_string(holdout) +
                        " triples without losing entity/relation coverage; use smaller sizes");

    SplitResult r;
    for (std::size_t i = 0; i < held_order.size(); ++i) {
        const auto& t = triples[held_order[i]];
        (i < spec.test_size ? r.test : r.valid).push_back(t);
    }
    for (std::size_t i = 0; i < triples.size(); ++i)
        if (!held[i]) r.train.push_back(triples[i]);
    return r;
}

}  // namespace kge
