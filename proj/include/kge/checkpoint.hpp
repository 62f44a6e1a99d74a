#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "kge/error.hpp"
#include "kge/model.hpp"

namespace kge {

// Binary checkpoint, little-endian throughout:
//   "KGECKPT1"
//   u32 model kind, u32 dim, u64 entities, u64 relations
//   u64 vocab hash, u64 config digest, f64 best validation MRR
//   f32 entity table, f32 relation table (row-major)
//   entity labels, relation labels (u64 count, per label u32 length + bytes)
// Tables are stored in float32; training snapshots are quantized through
// float32 before validation, so a reloaded checkpoint reproduces the logged
// metrics exactly.

static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires a little-endian host");

struct Checkpoint {
    ModelState state;
    std::uint64_t vocab_hash = 0;
    std::uint64_t config_digest = 0;
    double best_valid_mrr = 0.0;
    std::vector<std::string> entity_labels;
    std::vector<std::string> relation_labels;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'K', 'G', 'E', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    if (!in) throw DataError("truncated checkpoint: " + path);
    return value;
}

inline void write_labels(std::ofstream& out, const std::vector<std::string>& labels) {
    write_pod<std::uint64_t>(out, labels.size());
    for (const auto& label : labels) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(label.size()));
        out.write(label.data(), static_cast<std::streamsize>(label.size()));
    }
}

inline std::vector<std::string> read_labels(std::ifstream& in, const std::string& path,
                                            std::uint64_t expected) {
    const auto count = read_pod<std::uint64_t>(in, path);
    if (count != expected)
        throw DataError("checkpoint label count mismatch in " + path + ": expected " +
                        std::to_string(expected) + ", found " + std::to_string(count));
    std::vector<std::string> labels(count);
    for (auto& label : labels) {
        const auto len = read_pod<std::uint32_t>(in, path);
        label.resize(len);
        in.read(label.data(), static_cast<std::streamsize>(len));
        if (!in) throw DataError("truncated checkpoint: " + path);
    }
    return labels;
}

inline void write_table(std::ofstream& out, const std::vector<double>& table) {
    std::vector<float> buf(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) buf[i] = static_cast<float>(table[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline void read_table(std::ifstream& in, const std::string& path, std::vector<double>& table) {
    std::vector<float> buf(table.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint: " + path);
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!std::isfinite(buf[i]))
            throw DataError("checkpoint contains a non-finite value: " + path);
        table[i] = static_cast<double>(buf[i]);
    }
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.state.kind()));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.state.dim()));
    detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(c.state.num_entities()));
    detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(c.state.num_relations()));
    detail::write_pod<std::uint64_t>(out, c.vocab_hash);
    detail::write_pod<std::uint64_t>(out, c.config_digest);
    detail::write_pod<double>(out, c.best_valid_mrr);
    detail::write_table(out, c.state.entity_table());
    detail::write_table(out, c.state.relation_table());
    detail::write_labels(out, c.entity_labels);
    detail::write_labels(out, c.relation_labels);
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0)
        throw DataError("not a checkpoint file: " + path);
    const auto kind_raw = detail::read_pod<std::uint32_t>(in, path);
    if (kind_raw > static_cast<std::uint32_t>(ModelKind::rotate))
        throw DataError("checkpoint has unknown model kind " + std::to_string(kind_raw) + ": " +
                        path);
    const auto kind = static_cast<ModelKind>(kind_raw);
    const auto dim = static_cast<int>(detail::read_pod<std::uint32_t>(in, path));
    if (dim < 1) throw DataError("checkpoint has invalid dimension: " + path);
    const auto num_entities =
        static_cast<std::int64_t>(detail::read_pod<std::uint64_t>(in, path));
    const auto num_relations =
        static_cast<std::int64_t>(detail::read_pod<std::uint64_t>(in, path));
    if (num_entities < 1 || num_relations < 1)
        throw DataError("checkpoint has empty tables: " + path);

    Checkpoint c;
    c.vocab_hash = detail::read_pod<std::uint64_t>(in, path);
    c.config_digest = detail::read_pod<std::uint64_t>(in, path);
    c.best_valid_mrr = detail::read_pod<double>(in, path);
    c.state = ModelState::init(kind, dim, num_entities, num_relations, 0);
    detail::read_table(in, path, c.state.entity_table());
    detail::read_table(in, path, c.state.relation_table());
    c.entity_labels = detail::read_labels(in, path, static_cast<std::uint64_t>(num_entities));
    c.relation_labels = detail::read_labels(in, path, static_cast<std::uint64_t>(num_relations));
    return c;
}

}  // namespace kge
