#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "kge/error.hpp"
#include "kge/kg.hpp"

namespace kge {

using ClassId = std::int32_t;

enum class ClassSource { relation_inferred, ontology };

// Entity class structure used by type-constrained corruption: entity -> class
// sets, class -> member lists, and a (domain, range) class pair per relation.
// Built either from an ontology file or inferred from training triples.
class ClassIndex {
public:
    ClassSource source() const { return source_; }
    std::int64_t num_classes() const { return static_cast<std::int64_t>(member_lists_.size()); }
    const std::string& class_label(ClassId c) const { return labels_.at(static_cast<std::size_t>(c)); }

    // Members are sorted by entity id.
    std::span<const EntityId> members(ClassId c) const {
        return member_lists_.at(static_cast<std::size_t>(c));
    }

    std::span<const ClassId> classes_of(EntityId e) const {
        return entity_classes_.at(static_cast<std::size_t>(e));
    }

    bool member_of(EntityId e, ClassId c) const {
        const auto& m = member_lists_.at(static_cast<std::size_t>(c));
        return std::binary_search(m.begin(), m.end(), e);
    }

    ClassId domain_of(RelationId p) const { return domain_class_.at(static_cast<std::size_t>(p)); }
    ClassId range_of(RelationId p) const { return range_class_.at(static_cast<std::size_t>(p)); }

    static ClassIndex make(ClassSource source, std::vector<std::string> labels,
                           std::vector<std::vector<EntityId>> member_lists,
                           std::vector<ClassId> domain_class, std::vector<ClassId> range_class,
                           std::int64_t num_entities) {
        ClassIndex idx;
        idx.source_ = source;
        idx.labels_ = std::move(labels);
        idx.member_lists_ = std::move(member_lists);
        idx.domain_class_ = std::move(domain_class);
        idx.range_class_ = std::move(range_class);
        for (auto& m : idx.member_lists_) {
            std::sort(m.begin(), m.end());
            m.erase(std::unique(m.begin(), m.end()), m.end());
        }
        idx.entity_classes_.assign(static_cast<std::size_t>(num_entities), {});
        for (std::size_t c = 0; c < idx.member_lists_.size(); ++c)
            for (EntityId e : idx.member_lists_[c])
                idx.entity_classes_[static_cast<std::size_t>(e)].push_back(static_cast<ClassId>(c));
        return idx;
    }

private:
    ClassSource source_ = ClassSource::relation_inferred;
    std::vector<std::string> labels_;
    std::vector<std::vector<EntityId>> member_lists_;
    std::vector<std::vector<ClassId>> entity_classes_;
    std::vector<ClassId> domain_class_;
    std::vector<ClassId> range_class_;
};

// Two classes per relation p, from training triples only: domain(p) holds the
// distinct subjects of p, range(p) the distinct objects. Identical sets across
// relations are kept separate, so the class count is always 2 * |relations|.
inline ClassIndex infer_classes(const KnowledgeGraph& graph) {
    if (graph.train().empty()) throw DataError("cannot infer classes: no training triples");
    const auto num_rel = static_cast<std::size_t>(graph.num_relations());
    std::vector<std::vector<EntityId>> member_lists(2 * num_rel);
    std::vector<std::string> labels(2 * num_rel);
    std::vector<ClassId> domain_class(num_rel), range_class(num_rel);
    for (std::size_t p = 0; p < num_rel; ++p) {
        domain_class[p] = static_cast<ClassId>(2 * p);
        range_class[p] = static_cast<ClassId>(2 * p + 1);
        labels[2 * p] = "domain(" + graph.relations().label(static_cast<RelationId>(p)) + ")";
        labels[2 * p + 1] = "range(" + graph.relations().label(static_cast<RelationId>(p)) + ")";
    }
    for (const auto& t : graph.train()) {
        member_lists[static_cast<std::size_t>(2 * t.predicate)].push_back(t.subject);
        member_lists[static_cast<std::size_t>(2 * t.predicate + 1)].push_back(t.object);
    }
    return ClassIndex::make(ClassSource::relation_inferred, std::move(labels), std::move(member_lists),
                            std::move(domain_class), std::move(range_class), graph.num_entities());
}

// Ontology file format:
//   [entities]
//   entity_label<TAB>class_label        (one line per membership)
//   [signatures]
//   predicate_label<TAB>domain_class<TAB>range_class
// Every graph entity needs at least one class and every graph relation a
// signature. Entities or predicates unknown to the graph are ignored.
inline ClassIndex load_ontology_classes(const std::filesystem::path& path, const KnowledgeGraph& graph) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ontology file: " + path.string());

    Vocabulary class_vocab;
    std::vector<std::vector<EntityId>> member_lists;
    const auto num_rel = static_cast<std::size_t>(graph.num_relations());
    std::vector<ClassId> domain_class(num_rel, -1), range_class(num_rel, -1);

    auto class_id = [&](const std::string& label) {
        const ClassId c = class_vocab.get_or_add(label);
        if (static_cast<std::size_t>(c) >= member_lists.size()) member_lists.emplace_back();
        return c;
    };

    enum class Section { none, entities, signatures } section = Section::none;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (view.empty()) continue;
        if (view == "[entities]") { section = Section::entities; continue; }
        if (view == "[signatures]") { section = Section::signatures; continue; }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.emplace_back(detail::trim(std::string_view(line).substr(start, tab - start)));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        const auto where = path.string() + ":" + std::to_string(lineno);
        if (section == Section::entities) {
            if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
                throw DataError(where + ": expected entity<TAB>class");
            if (auto e = graph.entities().lookup(fields[0]))
                member_lists[static_cast<std::size_t>(class_id(fields[1]))].push_back(*e);
        } else if (section == Section::signatures) {
            if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
                throw DataError(where + ": expected predicate<TAB>domain_class<TAB>range_class");
            if (auto p = graph.relations().lookup(fields[0])) {
                domain_class[static_cast<std::size_t>(*p)] = class_id(fields[1]);
                range_class[static_cast<std::size_t>(*p)] = class_id(fields[2]);
            }
        } else {
            throw DataError(where + ": content before [entities]/[signatures] section");
        }
    }

    auto idx = ClassIndex::make(ClassSource::ontology, class_vocab.labels(), std::move(member_lists),
                                std::move(domain_class), std::move(range_class), graph.num_entities());

    std::vector<std::string> uncovered;
    for (EntityId e = 0; e < graph.num_entities(); ++e)
        if (idx.classes_of(e).empty()) uncovered.push_back(graph.entities().label(e));
    if (!uncovered.empty()) {
        std::string msg = "ontology assigns no class to " + std::to_string(uncovered.size()) +
                          " graph entities:";
        const std::size_t shown = std::min<std::size_t>(uncovered.size(), 10);
        for (std::size_t i = 0; i < shown; ++i) msg += " " + uncovered[i];
        if (uncovered.size() > shown) msg += " ...";
        throw DataError(msg);
    }
    for (RelationId p = 0; p < graph.num_relations(); ++p)
        if (idx.domain_of(p) < 0 || idx.range_of(p) < 0)
            throw DataError("ontology defines no signature for predicate '" +
                            graph.relations().label(p) + "'");
    return idx;
}

}  // namespace kge
