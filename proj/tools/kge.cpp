#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kge/kge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int threads_from_env() {
    const char* raw = std::getenv("KGE_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    try {
        const int n = std::stoi(raw);
        if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw kge::ConfigError(std::string("KGE_THREADS must be a positive integer, got '") + raw +
                           "'");
}

kge::KnowledgeGraph load_graph(const kge::RunConfig& cfg) {
    return kge::KnowledgeGraph::build(kge::load_triples(cfg.train_path),
                                      kge::load_triples(cfg.valid_path),
                                      kge::load_triples(cfg.test_path));
}

kge::ClassIndex load_classes(const kge::RunConfig& cfg, const kge::KnowledgeGraph& graph) {
    if (cfg.ontology_path.empty()) return kge::infer_classes(graph);
    return kge::load_ontology_classes(cfg.ontology_path, graph);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw kge::DataError("cannot write " + path.string());
    out << content;
    if (!out) throw kge::DataError("failed writing " + path.string());
}

kge::TieBreak tie_from_string(const std::string& name) {
    if (name == "realistic") return kge::TieBreak::realistic;
    if (name == "optimistic") return kge::TieBreak::optimistic;
    if (name == "pessimistic") return kge::TieBreak::pessimistic;
    throw kge::ConfigError("unknown tie break '" + name +
                           "' (realistic|optimistic|pessimistic)");
}

json metrics_json(const kge::Metrics& m) {
    return {{"mrr", m.mrr},
            {"hits@1", m.hits1},
            {"hits@3", m.hits3},
            {"hits@10", m.hits10},
            {"ranks", m.count}};
}

struct RunOutcome {
    double best_valid_mrr = 0.0;
    int best_epoch = 0;
    kge::Metrics test;
};

// Shared by train and nu-sweep: trains per config, writes the resolved
// config, training log, best checkpoint, validation and test reports, and a
// machine-readable summary into the run directory.
RunOutcome run_training(const kge::RunConfig& cfg, const kge::KnowledgeGraph& graph,
                        const kge::ClassIndex& classes, bool echo) {
    fs::create_directories(cfg.output_dir);
    write_file(fs::path(cfg.output_dir) / "config.ini", kge::serialize_run_config(cfg));

    std::string log_text;
    kge::TrainConfig tcfg = cfg.training;
    tcfg.on_log = [&](const std::string& line) {
        log_text += line + '\n';
        if (echo) std::cout << line << '\n' << std::flush;
    };
    kge::TrainResult result = kge::train(graph, classes, cfg.model, cfg.dim, tcfg);
    write_file(fs::path(cfg.output_dir) / "train.log", log_text);

    kge::Checkpoint ckpt;
    ckpt.state = result.best_state;
    ckpt.vocab_hash = graph.vocab_hash();
    ckpt.config_digest = kge::config_digest(cfg);
    ckpt.best_valid_mrr = result.best_valid_mrr;
    ckpt.entity_labels = graph.entities().labels();
    ckpt.relation_labels = graph.relations().labels();
    kge::save_checkpoint((fs::path(cfg.output_dir) / "model.ckpt").string(), ckpt);

    kge::EvalConfig ecfg = cfg.training.eval;
    const kge::EvalReport valid_report = kge::evaluate(result.best_state, graph.valid(), graph, ecfg);
    const kge::EvalReport test_report = kge::evaluate(result.best_state, graph.test(), graph, ecfg);
    write_file(fs::path(cfg.output_dir) / "valid_report.tsv",
               kge::render_report_tsv(valid_report, graph));
    write_file(fs::path(cfg.output_dir) / "test_report.tsv",
               kge::render_report_tsv(test_report, graph));

    json summary = {{"model", kge::to_string(cfg.model)},
                    {"dim", cfg.dim},
                    {"loss", kge::to_string(cfg.training.loss)},
                    {"eta", cfg.training.sampler.eta},
                    {"nu", cfg.training.sampler.nu},
                    {"seed", cfg.training.seed},
                    {"best_epoch", result.best_epoch},
                    {"epochs_run", result.epochs_run},
                    {"stopped_early", result.stopped_early},
                    {"steps", result.steps},
                    {"best_valid_mrr", result.best_valid_mrr},
                    {"valid", metrics_json(valid_report.overall)},
                    {"test", metrics_json(test_report.overall)}};
    if (cfg.training.log_timing) summary["mean_ms_per_step"] = result.mean_ms_per_step;
    write_file(fs::path(cfg.output_dir) / "summary.json", summary.dump(2) + "\n");

    if (echo)
        std::cout << "best epoch " << result.best_epoch << ": valid MRR "
                  << kge::detail::fmt_metric(result.best_valid_mrr) << ", test MRR "
                  << kge::detail::fmt_metric(test_report.overall.mrr) << '\n';
    return {result.best_valid_mrr, result.best_epoch, test_report.overall};
}

int cmd_train(const std::string& config_path) {
    kge::RunConfig cfg = kge::load_run_config(config_path);
    cfg.validate();
    cfg.training.eval.threads = threads_from_env();
    const kge::KnowledgeGraph graph = load_graph(cfg);
    const kge::ClassIndex classes = load_classes(cfg, graph);
    run_training(cfg, graph, classes, true);
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& split_name, const std::string& out_path,
                 const std::string& ranks_path, const std::string& tie_name, int chunk) {
    kge::RunConfig cfg = kge::load_run_config(config_path);
    const kge::KnowledgeGraph graph = load_graph(cfg);
    const kge::Checkpoint ckpt = kge::load_checkpoint(checkpoint_path);
    if (ckpt.vocab_hash != graph.vocab_hash())
        throw kge::DataError("checkpoint vocabulary hash does not match the dataset (" +
                             std::to_string(ckpt.vocab_hash) + " vs " +
                             std::to_string(graph.vocab_hash()) +
                             "); entity/relation ids would be misaligned");

    kge::Split split;
    if (split_name == "valid") split = kge::Split::valid;
    else if (split_name == "test") split = kge::Split::test;
    else throw kge::ConfigError("--split must be valid or test, got '" + split_name + "'");

    kge::EvalConfig ecfg = cfg.training.eval;
    if (chunk > 0) ecfg.chunk = chunk;
    ecfg.tie = tie_from_string(tie_name);
    ecfg.threads = threads_from_env();
    ecfg.rank_dump = !ranks_path.empty();

    const kge::EvalReport report = kge::evaluate(ckpt.state, graph.split(split), graph, ecfg);
    const std::string tsv = kge::render_report_tsv(report, graph);
    if (out_path.empty()) {
        std::cout << tsv;
    } else {
        write_file(out_path, tsv);
        std::cout << split_name << " MRR " << kge::detail::fmt_metric(report.overall.mrr)
                  << ", hits@1 " << kge::detail::fmt_metric(report.overall.hits1) << ", hits@3 "
                  << kge::detail::fmt_metric(report.overall.hits3) << ", hits@10 "
                  << kge::detail::fmt_metric(report.overall.hits10) << '\n';
    }
    if (!ranks_path.empty()) write_file(ranks_path, kge::render_rank_dump_tsv(report, graph));
    return 0;
}

int cmd_split(const std::string& input, std::size_t valid_size, std::size_t test_size,
              std::uint64_t seed, const std::string& out_dir) {
    const auto triples = kge::load_triples(input);
    const kge::SplitResult split =
        kge::random_split(triples, {valid_size, test_size, seed});
    fs::create_directories(out_dir);
    kge::write_triples(fs::path(out_dir) / "train.tsv", split.train);
    kge::write_triples(fs::path(out_dir) / "valid.tsv", split.valid);
    kge::write_triples(fs::path(out_dir) / "test.tsv", split.test);
    std::cout << "train " << split.train.size() << ", valid " << split.valid.size() << ", test "
              << split.test.size() << '\n';
    return 0;
}

int cmd_infer_classes(const std::string& train_path, bool members) {
    const kge::KnowledgeGraph graph =
        kge::KnowledgeGraph::build(kge::load_triples(train_path), {}, {});
    const kge::ClassIndex classes = kge::infer_classes(graph);
    std::int64_t singletons = 0;
    if (members) {
        std::cout << "class\tentity\n";
        for (kge::ClassId c = 0; c < classes.num_classes(); ++c)
            for (kge::EntityId e : classes.members(c))
                std::cout << classes.class_label(c) << '\t' << graph.entities().label(e) << '\n';
    } else {
        std::cout << "class\tsize\n";
        for (kge::ClassId c = 0; c < classes.num_classes(); ++c)
            std::cout << classes.class_label(c) << '\t' << classes.members(c).size() << '\n';
    }
    for (kge::ClassId c = 0; c < classes.num_classes(); ++c)
        if (classes.members(c).size() == 1) ++singletons;
    std::cerr << "classes " << classes.num_classes() << ", singletons " << singletons << '\n';
    return 0;
}

int cmd_inspect_negatives(const std::string& config_path, int count) {
    kge::RunConfig cfg = kge::load_run_config(config_path);
    cfg.validate();
    const kge::KnowledgeGraph graph = load_graph(cfg);
    const kge::ClassIndex classes = load_classes(cfg, graph);
    const auto& train = graph.train();
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(count), train.size());
    const std::span<const kge::Triple> positives(train.data(), n);
    const kge::NegativeBatch batch =
        kge::sample_batch(positives, cfg.training.sampler, graph, classes);

    std::cout << "subject\tpredicate\tobject\tcorrupted_subject\tcorrupted_predicate\t"
                 "corrupted_object\tside\tprovenance\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = positives[i];
        for (const auto& c : batch.for_positive(i)) {
            std::cout << graph.entities().label(p.subject) << '\t'
                      << graph.relations().label(p.predicate) << '\t'
                      << graph.entities().label(p.object) << '\t'
                      << graph.entities().label(c.triple.subject) << '\t'
                      << graph.relations().label(c.triple.predicate) << '\t'
                      << graph.entities().label(c.triple.object) << '\t' << kge::to_string(c.side)
                      << '\t' << kge::to_string(c.provenance) << '\n';
        }
    }
    return 0;
}

// Per-run seeds are base seed + list index, so the run at index 0 reproduces a
// standalone train with the same config.
int cmd_nu_sweep(const std::string& config_path, const std::vector<double>& nus) {
    if (nus.empty()) throw kge::ConfigError("--nus needs at least one value");
    kge::RunConfig base = kge::load_run_config(config_path);
    base.validate();
    base.training.eval.threads = threads_from_env();
    const kge::KnowledgeGraph graph = load_graph(base);
    const kge::ClassIndex classes = load_classes(base, graph);

    fs::create_directories(base.output_dir);
    std::string sweep =
        "nu\tbest_valid_mrr\tbest_epoch\ttest_mrr\ttest_hits@1\ttest_hits@3\ttest_hits@10\n";
    for (std::size_t i = 0; i < nus.size(); ++i) {
        char nu_text[32];
        std::snprintf(nu_text, sizeof(nu_text), "%g", nus[i]);
        kge::RunConfig cfg = base;
        cfg.training.sampler.nu = nus[i];
        cfg.training.seed = base.training.seed + i;
        cfg.training.sampler.seed = base.training.sampler.seed + i;
        cfg.output_dir = (fs::path(base.output_dir) / (std::string("nu_") + nu_text)).string();
        cfg.training.validate();
        std::cout << "nu " << nu_text << " -> " << cfg.output_dir << '\n' << std::flush;
        const RunOutcome run = run_training(cfg, graph, classes, false);
        sweep += std::string(nu_text) + '\t' + kge::detail::fmt_metric(run.best_valid_mrr) + '\t' +
                 std::to_string(run.best_epoch) + '\t' + kge::detail::fmt_metric(run.test.mrr) +
                 '\t' + kge::detail::fmt_metric(run.test.hits1) + '\t' +
                 kge::detail::fmt_metric(run.test.hits3) + '\t' +
                 kge::detail::fmt_metric(run.test.hits10) + '\n';
    }
    write_file(fs::path(base.output_dir) / "sweep.tsv", sweep);
    std::cout << sweep;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge graph embedding training and evaluation"};
    app.require_subcommand(1);

    std::string train_config;
    auto* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("config", train_config, "run config (INI)")->required();

    std::string eval_config, eval_checkpoint, eval_split = "test", eval_out, eval_ranks,
                eval_tie = "realistic";
    int eval_chunk = 0;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
    evaluate->add_option("--config", eval_config, "run config naming the dataset")->required();
    evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    evaluate->add_option("--split", eval_split, "valid or test");
    evaluate->add_option("--out", eval_out, "write the report TSV here instead of stdout");
    evaluate->add_option("--ranks", eval_ranks, "write a per-triple rank dump TSV");
    evaluate->add_option("--tie", eval_tie, "tie handling: realistic, optimistic, pessimistic");
    evaluate->add_option("--chunk", eval_chunk, "candidate scoring chunk size");

    std::string split_input, split_out;
    std::size_t split_valid = 0, split_test = 0;
    std::uint64_t split_seed = 0;
    auto* split = app.add_subcommand("split", "random train/valid/test split with coverage");
    split->add_option("--input", split_input, "triples TSV")->required();
    split->add_option("--valid-size", split_valid, "validation triples")->required();
    split->add_option("--test-size", split_test, "test triples")->required();
    split->add_option("--seed", split_seed, "shuffle seed");
    split->add_option("--out", split_out, "output directory")->required();

    std::string infer_train;
    bool infer_members = false;
    auto* infer = app.add_subcommand("infer-classes", "infer entity classes from train triples");
    infer->add_option("--train", infer_train, "training triples TSV")->required();
    infer->add_flag("--members", infer_members, "dump one row per (class, entity)");

    std::string inspect_config;
    int inspect_count = 10;
    auto* inspect = app.add_subcommand("inspect-negatives",
                                       "dump sampled corruptions with provenance");
    inspect->add_option("config", inspect_config, "run config (INI)")->required();
    inspect->add_option("--count", inspect_count, "number of leading train positives")
        ->check(CLI::PositiveNumber);

    std::string sweep_config;
    std::vector<double> sweep_nus;
    auto* sweep = app.add_subcommand("nu-sweep", "train once per nu, all else fixed");
    sweep->add_option("config", sweep_config, "run config (INI)")->required();
    sweep->add_option("--nus", sweep_nus, "nu values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(train_config);
        if (*evaluate)
            return cmd_evaluate(eval_config, eval_checkpoint, eval_split, eval_out, eval_ranks,
                                eval_tie, eval_chunk);
        if (*split) return cmd_split(split_input, split_valid, split_test, split_seed, split_out);
        if (*infer) return cmd_infer_classes(infer_train, infer_members);
        if (*inspect) return cmd_inspect_negatives(inspect_config, inspect_count);
        if (*sweep) return cmd_nu_sweep(sweep_config, sweep_nus);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const kge::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const kge::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const kge::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    }
}
