#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "kge/error.hpp"
#include "kge/model.hpp"
#include "kge/sampler.hpp"
#include "kge/train.hpp"

namespace kge {

// One training run described as an INI file with sections [dataset], [model],
// [sampler], [training], [eval], [output]. Unknown sections or keys are
// errors. Doubles serialize with %.17g, so parse(serialize(x)) == x.
struct RunConfig {
    std::string train_path;
    std::string valid_path;
    std::string test_path;
    std::string ontology_path;  // empty: infer entity classes from train triples
    ModelKind model = ModelKind::distmult;
    int dim = 128;
    TrainConfig training;
    std::string output_dir = "run";

    void validate() const {
        if (train_path.empty()) throw ConfigError("dataset.train is required");
        if (valid_path.empty()) throw ConfigError("dataset.valid is required");
        if (test_path.empty()) throw ConfigError("dataset.test is required");
        if (dim < 1) throw ConfigError("model.dim must be >= 1");
        if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
        training.validate();
    }
};

namespace detail {

inline std::string trim_copy(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(where + ": not a number: '" + value + "'");
    }
    if (used != value.size()) throw ConfigError(where + ": not a number: '" + value + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(where + ": not an integer: '" + value + "'");
    }
    if (used != value.size()) throw ConfigError(where + ": not an integer: '" + value + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(where + ": not an unsigned integer: '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError(where + ": not an unsigned integer: '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(where + ": expected true or false, got '" + value + "'");
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::istringstream stream(text);
    std::string raw;
    int line_no = 0;
    bool sampler_seed_given = false;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string line = detail::trim_copy(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header '" + line + "'");
            section = detail::trim_copy(line.substr(1, line.size() - 2));
            if (section != "dataset" && section != "model" && section != "sampler" &&
                section != "training" && section != "eval" && section != "output")
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key before any [section]");
        const std::string key = detail::trim_copy(line.substr(0, eq));
        const std::string value = detail::trim_copy(line.substr(eq + 1));
        const std::string where = section + "." + key;
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(where).second)
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " + where);

        if (section == "dataset") {
            if (key == "train") cfg.train_path = value;
            else if (key == "valid") cfg.valid_path = value;
            else if (key == "test") cfg.test_path = value;
            else if (key == "ontology") cfg.ontology_path = value;
            else throw ConfigError("unknown key " + where);
        } else if (section == "model") {
            if (key == "kind") cfg.model = model_kind_from_string(value);
            else if (key == "dim") cfg.dim = static_cast<int>(detail::parse_int(value, where));
            else throw ConfigError("unknown key " + where);
        } else if (section == "sampler") {
            auto& s = cfg.training.sampler;
            if (key == "eta") s.eta = static_cast<int>(detail::parse_int(value, where));
            else if (key == "nu") s.nu = detail::parse_double(value, where);
            else if (key == "side_policy") s.side_policy = side_policy_from_string(value);
            else if (key == "seed") {
                s.seed = detail::parse_u64(value, where);
                sampler_seed_given = true;
            } else throw ConfigError("unknown key " + where);
        } else if (section == "training") {
            auto& t = cfg.training;
            if (key == "loss") t.loss = loss_kind_from_string(value);
            else if (key == "adversarial_temperature")
                t.adversarial_temperature = detail::parse_double(value, where);
            else if (key == "margin") t.margin = detail::parse_double(value, where);
            else if (key == "lr") t.lr = detail::parse_double(value, where);
            else if (key == "batch_size") t.batch_size = static_cast<int>(detail::parse_int(value, where));
            else if (key == "epochs") t.epochs = static_cast<int>(detail::parse_int(value, where));
            else if (key == "reg_p") t.reg_p = static_cast<int>(detail::parse_int(value, where));
            else if (key == "reg_lambda") t.reg_lambda = detail::parse_double(value, where);
            else if (key == "patience") t.patience = static_cast<int>(detail::parse_int(value, where));
            else if (key == "validation_frequency")
                t.validation_frequency = static_cast<int>(detail::parse_int(value, where));
            else if (key == "seed") t.seed = detail::parse_u64(value, where);
            else if (key == "log_timing") t.log_timing = detail::parse_bool(value, where);
            else throw ConfigError("unknown key " + where);
        } else if (section == "eval") {
            if (key == "chunk") cfg.training.eval.chunk = static_cast<int>(detail::parse_int(value, where));
            else throw ConfigError("unknown key " + where);
        } else {
            if (key == "dir") cfg.output_dir = value;
            else throw ConfigError("unknown key " + where);
        }
    }
    if (!sampler_seed_given)
        cfg.training.sampler.seed = derive_seed(cfg.training.seed, 0x53414D50ULL);  // "SAMP"
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

inline std::string serialize_run_config(const RunConfig& cfg) {
    std::string out;
    out += "[dataset]\n";
    out += "train = " + cfg.train_path + "\n";
    out += "valid = " + cfg.valid_path + "\n";
    out += "test = " + cfg.test_path + "\n";
    if (!cfg.ontology_path.empty()) out += "ontology = " + cfg.ontology_path + "\n";
    out += "\n[model]\n";
    out += "kind = " + std::string(to_string(cfg.model)) + "\n";
    out += "dim = " + std::to_string(cfg.dim) + "\n";
    const auto& s = cfg.training.sampler;
    out += "\n[sampler]\n";
    out += "eta = " + std::to_string(s.eta) + "\n";
    out += "nu = " + detail::fmt_double(s.nu) + "\n";
    out += "side_policy = " + std::string(to_string(s.side_policy)) + "\n";
    out += "seed = " + std::to_string(s.seed) + "\n";
    const auto& t = cfg.training;
    out += "\n[training]\n";
    out += "loss = " + std::string(to_string(t.loss)) + "\n";
    out += "adversarial_temperature = " + detail::fmt_double(t.adversarial_temperature) + "\n";
    out += "margin = " + detail::fmt_double(t.margin) + "\n";
    out += "lr = " + detail::fmt_double(t.lr) + "\n";
    out += "batch_size = " + std::to_string(t.batch_size) + "\n";
    out += "epochs = " + std::to_string(t.epochs) + "\n";
    out += "reg_p = " + std::to_string(t.reg_p) + "\n";
    out += "reg_lambda = " + detail::fmt_double(t.reg_lambda) + "\n";
    out += "patience = " + std::to_string(t.patience) + "\n";
    out += "validation_frequency = " + std::to_string(t.validation_frequency) + "\n";
    out += "seed = " + std::to_string(t.seed) + "\n";
    out += "log_timing = " + std::string(t.log_timing ? "true" : "false") + "\n";
    out += "\n[eval]\n";
    out += "chunk = " + std::to_string(t.eval.chunk) + "\n";
    out += "\n[output]\n";
    out += "dir = " + cfg.output_dir + "\n";
    return out;
}

inline std::uint64_t config_digest(const RunConfig& cfg) {
    const std::string text = serialize_run_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

}  // namespace kge
