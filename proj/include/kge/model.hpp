#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kge/error.hpp"
#include "kge/kg.hpp"
#include "kge/rng.hpp"
#include "kge/sampler.hpp"

namespace kge {

enum class ModelKind : std::uint32_t { transe = 0, distmult = 1, complex = 2, rotate = 3 };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::transe: return "transe";
        case ModelKind::distmult: return "distmult";
        case ModelKind::complex: return "complex";
        default: return "rotate";
    }
}

// Keeps the epsilon out of the score itself: scores are exact, only the
// gradient of the L2 norm is guarded at zero distance.
inline constexpr double kNormGuard = 1e-12;

// Sparse per-row gradient accumulator. Lookup via hash map, iteration in
// insertion order so updates are deterministic.
class GradAccum {
public:
    void reset(int width) {
        width_ = width;
        index_.clear();
        rows_.clear();
        values_.clear();
    }

    std::span<double> row(std::int64_t r) {
        auto [it, inserted] = index_.try_emplace(r, rows_.size());
        if (inserted) {
            rows_.push_back(r);
            values_.resize(values_.size() + static_cast<std::size_t>(width_), 0.0);
        }
        return {values_.data() + it->second * static_cast<std::size_t>(width_),
                static_cast<std::size_t>(width_)};
    }

    std::size_t size() const { return rows_.size(); }
    std::int64_t row_id(std::size_t i) const { return rows_[i]; }
    std::span<const double> row_values(std::size_t i) const {
        return {values_.data() + i * static_cast<std::size_t>(width_),
                static_cast<std::size_t>(width_)};
    }
    int width() const { return width_; }

private:
    int width_ = 0;
    std::unordered_map<std::int64_t, std::size_t> index_;
    std::vector<std::int64_t> rows_;
    std::vector<double> values_;
};

// Embedding tables for one of the four models. Complex-valued models store
// each row as two contiguous halves (real parts, then imaginary parts), so
// dim means complex dimension and rows hold 2*dim reals. RotatE relations are
// phases in radians; the effective relation coordinate e^{i*theta} has unit
// modulus by construction.
class ModelState {
public:
    static int entity_width(ModelKind kind, int dim) {
        return (kind == ModelKind::complex || kind == ModelKind::rotate) ? 2 * dim : dim;
    }
    static int relation_width(ModelKind kind, int dim) {
        return kind == ModelKind::complex ? 2 * dim : dim;
    }

    // Entries are uniform in [-6/sqrt(dim), +6/sqrt(dim)]; RotatE phases are
    // uniform in [-pi, pi].
    static ModelState init(ModelKind kind, int dim, std::int64_t num_entities,
                           std::int64_t num_relations, std::uint64_t seed) {
        if (dim < 1) throw ConfigError("model dim must be >= 1, got " + std::to_string(dim));
        ModelState s;
        s.kind_ = kind;
        s.dim_ = dim;
        s.num_entities_ = num_entities;
        s.num_relations_ = num_relations;
        s.entity_.resize(static_cast<std::size_t>(num_entities) * s.ewidth());
        s.relation_.resize(static_cast<std::size_t>(num_relations) * s.rwidth());
        const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
        Rng rng(derive_seed(seed, 0x494E4954ULL));  // "INIT"
        for (auto& v : s.entity_) v = rng.in_range(-bound, bound);
        if (kind == ModelKind::rotate) {
            for (auto& v : s.relation_) v = rng.in_range(-std::numbers::pi, std::numbers::pi);
        } else {
            for (auto& v : s.relation_) v = rng.in_range(-bound, bound);
        }
        return s;
    }

    ModelKind kind() const { return kind_; }
    int dim() const { return dim_; }
    std::int64_t num_entities() const { return num_entities_; }
    std::int64_t num_relations() const { return num_relations_; }
    std::size_t ewidth() const { return static_cast<std::size_t>(entity_width(kind_, dim_)); }
    std::size_t rwidth() const { return static_cast<std::size_t>(relation_width(kind_, dim_)); }

    std::span<const double> entity_row(EntityId e) const {
        check_entity(e);
        return {entity_.data() + static_cast<std::size_t>(e) * ewidth(), ewidth()};
    }
    std::span<const double> relation_row(RelationId p) const {
        check_relation(p);
        return {relation_.data() + static_cast<std::size_t>(p) * rwidth(), rwidth()};
    }
    std::span<double> entity_row(EntityId e) {
        check_entity(e);
        return {entity_.data() + static_cast<std::size_t>(e) * ewidth(), ewidth()};
    }
    std::span<double> relation_row(RelationId p) {
        check_relation(p);
        return {relation_.data() + static_cast<std::size_t>(p) * rwidth(), rwidth()};
    }

    std::vector<double>& entity_table() { return entity_; }
    std::vector<double>& relation_table() { return relation_; }
    const std::vector<double>& entity_table() const { return entity_; }
    const std::vector<double>& relation_table() const { return relation_; }

    // Rounds every entry through float32, the checkpoint precision. Used for
    // validation snapshots so a persisted checkpoint reproduces exactly the
    // metrics that were logged for it.
    ModelState quantized() const {
        ModelState s = *this;
        for (auto& v : s.entity_) v = static_cast<double>(static_cast<float>(v));
        for (auto& v : s.relation_) v = static_cast<double>(static_cast<float>(v));
        return s;
    }

private:
    void check_entity(EntityId e) const {
        if (e < 0 || e >= num_entities_)
            throw DataError("entity id out of range: " + std::to_string(e));
    }
    void check_relation(RelationId p) const {
        if (p < 0 || p >= num_relations_)
            throw DataError("relation id out of range: " + std::to_string(p));
    }

    ModelKind kind_ = ModelKind::transe;
    int dim_ = 0;
    std::int64_t num_entities_ = 0;
    std::int64_t num_relations_ = 0;
    std::vector<double> entity_;
    std::vector<double> relation_;
};

// Every model factors into a composed query vector plus a cheap kernel over
// the candidate entity row:
//   TransE / RotatE:    f(e) = -|| q - e ||_2      (rotation is an isometry)
//   DistMult / ComplEx: f(e) = <q, e>
// which makes ranking against all entities a single pass per (triple, side).
struct Query {
    std::vector<double> q;
    bool is_distance;  // true: negated L2 kernel, false: dot kernel
};

namespace detail {

inline void compose_into(const ModelState& s, const Triple& t, Side candidate_side, Query& out) {
    const int k = s.dim();
    out.q.resize(s.ewidth());
    switch (s.kind()) {
        case ModelKind::transe: {
            out.is_distance = true;
            const auto r = s.relation_row(t.predicate);
            if (candidate_side == Side::object) {
                const auto sub = s.entity_row(t.subject);
                for (int i = 0; i < k; ++i) out.q[i] = sub[i] + r[i];
            } else {
                const auto obj = s.entity_row(t.object);
                for (int i = 0; i < k; ++i) out.q[i] = obj[i] - r[i];
            }
            break;
        }
        case ModelKind::distmult: {
            out.is_distance = false;
            const auto r = s.relation_row(t.predicate);
            const auto fixed =
                candidate_side == Side::object ? s.entity_row(t.subject) : s.entity_row(t.object);
            for (int i = 0; i < k; ++i) out.q[i] = fixed[i] * r[i];
            break;
        }
        case ModelKind::complex: {
            out.is_distance = false;
            const auto r = s.relation_row(t.predicate);
            if (candidate_side == Side::object) {
                // f(o) = Re(sum s_j r_j conj(o_j)) = <s*r, o> over paired reals
                const auto sub = s.entity_row(t.subject);
                for (int i = 0; i < k; ++i) {
                    out.q[i] = sub[i] * r[i] - sub[k + i] * r[k + i];
                    out.q[k + i] = sub[i] * r[k + i] + sub[k + i] * r[i];
                }
            } else {
                // f(s) = Re(sum s_j w_j), w = r * conj(o); dot form needs conj(w)
                const auto obj = s.entity_row(t.object);
                for (int i = 0; i < k; ++i) {
                    const double wr = r[i] * obj[i] + r[k + i] * obj[k + i];
                    const double wi = -r[i] * obj[k + i] + r[k + i] * obj[i];
                    out.q[i] = wr;
                    out.q[k + i] = -wi;
                }
            }
            break;
        }
        case ModelKind::rotate: {
            out.is_distance = true;
            const auto theta = s.relation_row(t.predicate);
            if (candidate_side == Side::object) {
                const auto sub = s.entity_row(t.subject);
                for (int i = 0; i < k; ++i) {
                    const double c = std::cos(theta[i]), sn = std::sin(theta[i]);
                    out.q[i] = sub[i] * c - sub[k + i] * sn;
                    out.q[k + i] = sub[i] * sn + sub[k + i] * c;
                }
            } else {
                // f(s) = -||s o e^{i theta} - o|| = -||s - o o e^{-i theta}||
                const auto obj = s.entity_row(t.object);
                for (int i = 0; i < k; ++i) {
                    const double c = std::cos(theta[i]), sn = std::sin(theta[i]);
                    out.q[i] = obj[i] * c + obj[k + i] * sn;
                    out.q[k + i] = -obj[i] * sn + obj[k + i] * c;
                }
            }
            break;
        }
    }
}

inline double kernel(const Query& query, std::span<const double> entity_row) {
    const std::size_t n = query.q.size();
    if (query.is_distance) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = query.q[i] - entity_row[i];
            d2 += d * d;
        }
        return -std::sqrt(d2);
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += query.q[i] * entity_row[i];
    return dot;
}

}  // namespace detail

inline Query compose_query(const ModelState& s, const Triple& t, Side candidate_side) {
    Query q;
    detail::compose_into(s, t, candidate_side, q);
    return q;
}

inline double score_candidate(const Query& query, std::span<const double> entity_row) {
    return detail::kernel(query, entity_row);
}

// Plausibility score of one triple; higher is more plausible.
inline double score(const ModelState& s, const Triple& t) {
    thread_local Query query;
    detail::compose_into(s, t, Side::object, query);
    return detail::kernel(query, s.entity_row(t.object));
}

inline void score_batch(const ModelState& s, std::span<const Triple> triples,
                        std::span<double> out) {
    for (std::size_t i = 0; i < triples.size(); ++i) out[i] = score(s, triples[i]);
}

// Accumulates weight * (d score / d row) for every embedding row the triple
// touches. The L2 models guard the norm gradient with kNormGuard so the zero
// distance singularity yields a finite (zero) gradient.
inline void score_gradient(const ModelState& s, const Triple& t, double weight, GradAccum& entity,
                           GradAccum& relation) {
    const int k = s.dim();
    const auto sub = s.entity_row(t.subject);
    const auto rel = s.relation_row(t.predicate);
    const auto obj = s.entity_row(t.object);
    // Insert all rows before taking spans; an insertion can reallocate the
    // accumulator's storage and would dangle earlier spans.
    entity.row(t.subject);
    entity.row(t.object);
    auto gs = entity.row(t.subject);
    auto go = entity.row(t.object);
    auto gr = relation.row(t.predicate);
    switch (s.kind()) {
        case ModelKind::transe: {
            double d2 = 0.0;
            for (int i = 0; i < k; ++i) {
                const double d = sub[i] + rel[i] - obj[i];
                d2 += d * d;
            }
            const double c = weight / std::sqrt(d2 + kNormGuard);
            for (int i = 0; i < k; ++i) {
                const double d = sub[i] + rel[i] - obj[i];
                gs[i] -= c * d;
                gr[i] -= c * d;
                go[i] += c * d;
            }
            break;
        }
        case ModelKind::distmult: {
            for (int i = 0; i < k; ++i) {
                gs[i] += weight * rel[i] * obj[i];
                gr[i] += weight * sub[i] * obj[i];
                go[i] += weight * sub[i] * rel[i];
            }
            break;
        }
        case ModelKind::complex: {
            // f = sum (ac - bd) e + (ad + bc) g with s=a+bi, r=c+di, o=e+gi
            for (int i = 0; i < k; ++i) {
                const double a = sub[i], b = sub[k + i];
                const double c = rel[i], d = rel[k + i];
                const double e = obj[i], g = obj[k + i];
                gs[i] += weight * (c * e + d * g);
                gs[k + i] += weight * (-d * e + c * g);
                gr[i] += weight * (a * e + b * g);
                gr[k + i] += weight * (-b * e + a * g);
                go[i] += weight * (a * c - b * d);
                go[k + i] += weight * (a * d + b * c);
            }
            break;
        }
        case ModelKind::rotate: {
            double d2 = 0.0;
            for (int i = 0; i < k; ++i) {
                const double c = std::cos(rel[i]), sn = std::sin(rel[i]);
                const double rr = sub[i] * c - sub[k + i] * sn;
                const double ri = sub[i] * sn + sub[k + i] * c;
                const double dr = rr - obj[i];
                const double di = ri - obj[k + i];
                d2 += dr * dr + di * di;
            }
            const double cg = weight / std::sqrt(d2 + kNormGuard);
            for (int i = 0; i < k; ++i) {
                const double c = std::cos(rel[i]), sn = std::sin(rel[i]);
                const double rr = sub[i] * c - sub[k + i] * sn;
                const double ri = sub[i] * sn + sub[k + i] * c;
                const double dr = rr - obj[i];
                const double di = ri - obj[k + i];
                gs[i] -= cg * (dr * c + di * sn);
                gs[k + i] -= cg * (-dr * sn + di * c);
                go[i] += cg * dr;
                go[k + i] += cg * di;
                gr[i] -= cg * (dr * -ri + di * rr);
            }
            break;
        }
    }
}

// L^p penalty over the given embedding rows: lambda * sum_i |v_i|^p, where
// |.| is the complex modulus per coordinate for complex-valued tables.
// Returns the penalty and accumulates its gradient. p in {2, 3}.
inline double regularizer_rows(std::span<const double> row, bool paired, int dim, int p,
                               double lambda, std::span<double> grad) {
    double penalty = 0.0;
    if (paired) {
        for (int i = 0; i < dim; ++i) {
            const double a = row[i], b = row[dim + i];
            const double mod2 = a * a + b * b;
            if (p == 2) {
                penalty += mod2;
                grad[i] += lambda * 2.0 * a;
                grad[dim + i] += lambda * 2.0 * b;
            } else {
                const double mod = std::sqrt(mod2);
                penalty += mod2 * mod;
                grad[i] += lambda * 3.0 * mod * a;
                grad[dim + i] += lambda * 3.0 * mod * b;
            }
        }
    } else {
        for (int i = 0; i < dim; ++i) {
            const double v = row[i];
            if (p == 2) {
                penalty += v * v;
                grad[i] += lambda * 2.0 * v;
            } else {
                penalty += std::abs(v) * v * v;
                grad[i] += lambda * 3.0 * std::abs(v) * v;
            }
        }
    }
    return lambda * penalty;
}

// Applies the regularizer to every row already present in the accumulators
// (exactly the rows the batch touched). RotatE relation rows are phases with
// unit-modulus effective coordinates, so they contribute a constant and are
// skipped.
inline double regularize(const ModelState& s, int p, double lambda, GradAccum& entity,
                         GradAccum& relation) {
    if (p != 2 && p != 3) throw ConfigError("regularizer p must be 2 or 3, got " + std::to_string(p));
    if (lambda < 0.0) throw ConfigError("regularizer lambda must be >= 0");
    if (lambda == 0.0) return 0.0;
    const bool entity_paired = s.kind() == ModelKind::complex || s.kind() == ModelKind::rotate;
    const bool relation_paired = s.kind() == ModelKind::complex;
    double penalty = 0.0;
    for (std::size_t i = 0; i < entity.size(); ++i) {
        const auto e = static_cast<EntityId>(entity.row_id(i));
        penalty += regularizer_rows(s.entity_row(e), entity_paired, s.dim(), p, lambda,
                                    entity.row(e));
    }
    if (s.kind() != ModelKind::rotate) {
        for (std::size_t i = 0; i < relation.size(); ++i) {
            const auto r = static_cast<RelationId>(relation.row_id(i));
            penalty += regularizer_rows(s.relation_row(r), relation_paired, s.dim(), p, lambda,
                                        relation.row(r));
        }
    }
    return penalty;
}

inline ModelKind model_kind_from_string(const std::string& name) {
    if (name == "transe") return ModelKind::transe;
    if (name == "distmult") return ModelKind::distmult;
    if (name == "complex") return ModelKind::complex;
    if (name == "rotate") return ModelKind::rotate;
    throw ConfigError("unknown model kind '" + name + "' (transe|distmult|complex|rotate)");
}

}  // namespace kge
