#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kge/checkpoint.hpp"
#include "kge/config.hpp"
#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "support/tempdir.hpp"

using namespace kge;
namespace fs = std::filesystem;
using testsupport::TempDir;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "";
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out);
    out << content;
}

CliResult run_cli(const std::string& args, const TempDir& dir, const std::string& env = "") {
    const std::string out_path = dir.path() + "/cli_stdout.txt";
    const std::string err_path = dir.path() + "/cli_stderr.txt";
    const std::string cmd =
        env + (env.empty() ? "" : " ") + KGE_CLI_PATH + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

// The friendship-cycle toy dataset, written to disk for the CLI to consume.
void write_toy_dataset(const std::string& dir) {
    std::string train, valid, test;
    auto p = [](int i) { return "p" + std::to_string(i); };
    auto c = [](int i) { return "c" + std::to_string(i); };
    for (int i = 0; i < 6; ++i) train += p(i) + "\tlives_in\t" + c(i) + "\n";
    for (int i = 0; i < 3; ++i) train += p(i) + "\tfriends\t" + p(i + 1) + "\n";
    valid = p(3) + "\tfriends\t" + p(4) + "\n" + p(4) + "\tfriends\t" + p(5) + "\n";
    test = p(5) + "\tfriends\t" + p(0) + "\n";
    spit(dir + "/train.tsv", train);
    spit(dir + "/valid.tsv", valid);
    spit(dir + "/test.tsv", test);
}

std::string toy_config(const std::string& dir, const std::string& out_dir, double nu,
                       const std::string& extra = "") {
    return "[dataset]\n"
           "train = " + dir + "/train.tsv\n"
           "valid = " + dir + "/valid.tsv\n"
           "test = " + dir + "/test.tsv\n"
           "[model]\nkind = distmult\ndim = 8\n"
           "[sampler]\neta = 4\nnu = " + std::to_string(nu) + "\n"
           "[training]\nloss = multiclass_nll\nlr = 0.05\nbatch_size = 16\n"
           "epochs = 20\nvalidation_frequency = 10\npatience = 5\nseed = 42\n" +
           extra +
           "[output]\ndir = " + out_dir + "\n";
}

}  // namespace

TEST_CASE("cli trains, checkpoints, and evaluate reproduces the logged MRR") {
    TempDir dir;
    write_toy_dataset(dir.path());
    const std::string cfg_path = dir.path() + "/run.ini";
    const std::string out_dir = dir.path() + "/run";
    spit(cfg_path, toy_config(dir.path(), out_dir, 0.5));

    const auto train_run = run_cli("train " + cfg_path, dir);
    INFO(train_run.err);
    REQUIRE(train_run.code == 0);
    CHECK(train_run.out.find("epoch\ttrain_loss") != std::string::npos);
    CHECK(train_run.out.find("best epoch ") != std::string::npos);
    for (const char* name :
         {"config.ini", "train.log", "model.ckpt", "valid_report.tsv", "test_report.tsv",
          "summary.json"})
        CHECK(fs::exists(fs::path(out_dir) / name));

    // The stored best MRR, the summary, and a fresh in-process evaluation of
    // the checkpoint all agree exactly.
    const Checkpoint ckpt = load_checkpoint(out_dir + "/model.ckpt");
    const auto summary = nlohmann::json::parse(slurp(out_dir + "/summary.json"));
    CHECK(summary["best_valid_mrr"].get<double>() == ckpt.best_valid_mrr);
    CHECK(summary["nu"].get<double>() == 0.5);

    const auto graph = KnowledgeGraph::build(load_triples(dir.path() + "/train.tsv"),
                                             load_triples(dir.path() + "/valid.tsv"),
                                             load_triples(dir.path() + "/test.tsv"));
    REQUIRE(ckpt.vocab_hash == graph.vocab_hash());
    const auto report = evaluate(ckpt.state, graph.valid(), graph);
    CHECK(report.overall.mrr == ckpt.best_valid_mrr);

    // The CLI's evaluate renders the same bytes as the in-process evaluation.
    const auto eval_run = run_cli("evaluate --config " + cfg_path + " --checkpoint " + out_dir +
                                      "/model.ckpt --split valid",
                                  dir);
    REQUIRE(eval_run.code == 0);
    CHECK(eval_run.out == render_report_tsv(report, graph));
    CHECK(eval_run.out == slurp(out_dir + "/valid_report.tsv"));
}

TEST_CASE("cli evaluate writes identical reports on repeated runs") {
    TempDir dir;
    write_toy_dataset(dir.path());
    const std::string cfg_path = dir.path() + "/run.ini";
    const std::string out_dir = dir.path() + "/run";
    spit(cfg_path, toy_config(dir.path(), out_dir, 0.0));
    REQUIRE(run_cli("train " + cfg_path, dir).code == 0);

    const std::string base = "evaluate --config " + cfg_path + " --checkpoint " + out_dir +
                             "/model.ckpt --split test";
    const auto a = run_cli(base + " --out " + dir.path() + "/a.tsv --ranks " + dir.path() +
                               "/ranks_a.tsv",
                           dir);
    const auto b = run_cli(base + " --out " + dir.path() + "/b.tsv --ranks " + dir.path() +
                               "/ranks_b.tsv --chunk 2",
                           dir, "KGE_THREADS=3");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    // Chunk size and thread count have no effect on the written bytes.
    CHECK(slurp(dir.path() + "/a.tsv") == slurp(dir.path() + "/b.tsv"));
    CHECK(slurp(dir.path() + "/ranks_a.tsv") == slurp(dir.path() + "/ranks_b.tsv"));
    CHECK(slurp(dir.path() + "/ranks_a.tsv").substr(0, 40).find("subject\tpredicate\tobject") !=
          std::string::npos);
    // With --out the report goes to the file and stdout gets a one-line summary.
    CHECK(a.out.find("test MRR ") != std::string::npos);
    CHECK(a.out.find("scope\tkey") == std::string::npos);
}

TEST_CASE("cli rejects a checkpoint from a different vocabulary") {
    TempDir dir;
    write_toy_dataset(dir.path());
    const std::string cfg_path = dir.path() + "/run.ini";
    const std::string out_dir = dir.path() + "/run";
    spit(cfg_path, toy_config(dir.path(), out_dir, 0.0));
    REQUIRE(run_cli("train " + cfg_path, dir).code == 0);

    // Renaming an entity changes the vocabulary hash but not the shape.
    auto train_text = slurp(dir.path() + "/train.tsv");
    train_text.replace(train_text.find("p0"), 2, "q0");
    while (train_text.find("p0") != std::string::npos)
        train_text.replace(train_text.find("p0"), 2, "q0");
    spit(dir.path() + "/train.tsv", train_text);
    auto test_text = slurp(dir.path() + "/test.tsv");
    test_text.replace(test_text.find("p0"), 2, "q0");
    spit(dir.path() + "/test.tsv", test_text);

    const auto r = run_cli("evaluate --config " + cfg_path + " --checkpoint " + out_dir +
                               "/model.ckpt --split test",
                           dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("data error") != std::string::npos);
    CHECK(r.err.find("vocabulary hash") != std::string::npos);
}

TEST_CASE("cli distinguishes config, data, and numeric failures by exit code") {
    TempDir dir;
    write_toy_dataset(dir.path());
    const std::string cfg_path = dir.path() + "/run.ini";
    const std::string out_dir = dir.path() + "/run";

    SECTION("invalid sampler fraction is a config error") {
        spit(cfg_path, toy_config(dir.path(), out_dir, 1.5));
        const auto r = run_cli("train " + cfg_path, dir);
        CHECK(r.code == 1);
        CHECK(r.err.find("config error") != std::string::npos);
        CHECK(r.err.find("nu") != std::string::npos);
    }
    SECTION("unknown key is a config error") {
        spit(cfg_path, toy_config(dir.path(), out_dir, 0.5, "momentum = 0.9\n"));
        const auto r = run_cli("train " + cfg_path, dir);
        CHECK(r.code == 1);
        CHECK(r.err.find("unknown key training.momentum") != std::string::npos);
    }
    SECTION("corrupt checkpoint is a data error") {
        spit(cfg_path, toy_config(dir.path(), out_dir, 0.0));
        REQUIRE(run_cli("train " + cfg_path, dir).code == 0);
        auto bytes = slurp(out_dir + "/model.ckpt");
        bytes[0] = 'X';
        spit(out_dir + "/model.ckpt", bytes);
        const auto r = run_cli("evaluate --config " + cfg_path + " --checkpoint " + out_dir +
                                   "/model.ckpt --split test",
                               dir);
        CHECK(r.code == 2);
        CHECK(r.err.find("not a checkpoint") != std::string::npos);
    }
    SECTION("diverging training is a numeric error") {
        spit(cfg_path, toy_config(dir.path(), out_dir, 0.0, "") );
        auto text = slurp(cfg_path);
        text.replace(text.find("lr = 0.05"), 9, "lr = 1e200");
        spit(cfg_path, text);
        const auto r = run_cli("train " + cfg_path, dir);
        CHECK(r.code == 3);
        CHECK(r.err.find("numeric error") != std::string::npos);
        CHECK(r.err.find("epoch") != std::string::npos);
    }
    SECTION("missing dataset file is a data error") {
        spit(cfg_path, toy_config(dir.path() + "/nowhere", out_dir, 0.0));
        const auto r = run_cli("train " + cfg_path, dir);
        CHECK(r.code == 2);
    }
    SECTION("bad thread count is a config error") {
        spit(cfg_path, toy_config(dir.path(), out_dir, 0.0));
        const auto r = run_cli("train " + cfg_path, dir, "KGE_THREADS=abc");
        CHECK(r.code == 1);
        CHECK(r.err.find("KGE_THREADS") != std::string::npos);
    }
}

TEST_CASE("cli split writes deterministic coverage-safe splits") {
    TempDir dir;
    std::string pool;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            if (i != j) pool += "n" + std::to_string(i) + "\tlinks\tn" + std::to_string(j) + "\n";
    spit(dir.path() + "/pool.tsv", pool);

    const std::string args = "split --input " + dir.path() + "/pool.tsv --valid-size 6 "
                             "--test-size 5 --seed 3 --out ";
    const auto first = run_cli(args + dir.path() + "/s1", dir);
    REQUIRE(first.code == 0);
    CHECK(first.out == "train 45, valid 6, test 5\n");
    const auto second = run_cli(args + dir.path() + "/s2", dir);
    REQUIRE(second.code == 0);

    for (const char* name : {"/train.tsv", "/valid.tsv", "/test.tsv"}) {
        CHECK(slurp(dir.path() + "/s1" + name) == slurp(dir.path() + "/s2" + name));
        CHECK(!slurp(dir.path() + "/s1" + name).empty());
    }
    // The written splits build cleanly, so coverage held.
    CHECK_NOTHROW(KnowledgeGraph::build(load_triples(dir.path() + "/s1/train.tsv"),
                                        load_triples(dir.path() + "/s1/valid.tsv"),
                                        load_triples(dir.path() + "/s1/test.tsv")));

    // An infeasible request fails as a data error.
    spit(dir.path() + "/tiny.tsv", "A\tr\tB\nB\tr\tC\nC\tr\tA\n");
    const auto bad = run_cli("split --input " + dir.path() + "/tiny.tsv --valid-size 2 "
                                 "--test-size 2 --seed 1 --out " + dir.path() + "/s3",
                             dir);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("data error") != std::string::npos);
}

TEST_CASE("cli infer-classes reports domains, ranges, and singleton counts") {
    TempDir dir;
    spit(dir.path() + "/train.tsv", "A\tr\tB\nC\tr\tB\nB\ts\tA\n");

    const auto sizes = run_cli("infer-classes --train " + dir.path() + "/train.tsv", dir);
    REQUIRE(sizes.code == 0);
    CHECK(sizes.out.find("class\tsize\n") == 0);
    CHECK(sizes.out.find("domain(r)\t2\n") != std::string::npos);
    CHECK(sizes.out.find("range(r)\t1\n") != std::string::npos);
    CHECK(sizes.out.find("domain(s)\t1\n") != std::string::npos);
    CHECK(sizes.out.find("range(s)\t1\n") != std::string::npos);
    CHECK(sizes.err == "classes 4, singletons 3\n");

    const auto members = run_cli("infer-classes --train " + dir.path() + "/train.tsv --members",
                                 dir);
    REQUIRE(members.code == 0);
    CHECK(members.out.find("class\tentity\n") == 0);
    CHECK(members.out.find("domain(r)\tA\n") != std::string::npos);
    CHECK(members.out.find("domain(r)\tC\n") != std::string::npos);
    CHECK(members.out.find("range(r)\tB\n") != std::string::npos);
}

TEST_CASE("cli inspect-negatives tags provenance per corruption") {
    TempDir dir;
    write_toy_dataset(dir.path());
    const std::string cfg_path = dir.path() + "/run.ini";
    spit(cfg_path, toy_config(dir.path(), dir.path() + "/run", 1.0));
    auto text = slurp(cfg_path);
    text.replace(text.find("eta = 4"), 7, "eta = 10");
    spit(cfg_path, text);

    const auto all_tc = run_cli("inspect-negatives " + cfg_path + " --count 3", dir);
    REQUIRE(all_tc.code == 0);
    std::size_t rows = 0, tc = 0, rnd = 0, pos = 0;
    while ((pos = all_tc.out.find('\n', pos)) != std::string::npos) {
        ++rows;
        ++pos;
    }
    CHECK(rows == 1 + 3 * 10);  // header plus eta rows per positive
    pos = 0;
    while ((pos = all_tc.out.find("\ttype_constrained\n", pos)) != std::string::npos) {
        ++tc;
        ++pos;
    }
    CHECK(tc == 30);

    // At nu = 0.5 each positive gets an even split, random share first.
    auto half = slurp(cfg_path);
    half.replace(half.find("nu = 1.0"), 8, "nu = 0.5");
    spit(cfg_path, half);
    const auto mixed = run_cli("inspect-negatives " + cfg_path + " --count 2", dir);
    REQUIRE(mixed.code == 0);
    tc = rnd = 0;
    pos = 0;
    while ((pos = mixed.out.find("\ttype_constrained\n", pos)) != std::string::npos) {
        ++tc;
        ++pos;
    }
    pos = 0;
    while ((pos = mixed.out.find("\trandom\n", pos)) != std::string::npos) {
        ++rnd;
        ++pos;
    }
    CHECK(tc == 10);
    CHECK(rnd == 10);
}

TEST_CASE("cli nu-sweep trains one run per value and matches a standalone run at index zero") {
    TempDir dir;
    write_toy_dataset(dir.path());
    const std::string sweep_cfg = dir.path() + "/sweep.ini";
    const std::string solo_cfg = dir.path() + "/solo.ini";
    spit(sweep_cfg, toy_config(dir.path(), dir.path() + "/sweep", 0.0));
    spit(solo_cfg, toy_config(dir.path(), dir.path() + "/solo", 0.0));

    const auto sweep = run_cli("nu-sweep " + sweep_cfg + " --nus 0,0.5,1", dir);
    INFO(sweep.err);
    REQUIRE(sweep.code == 0);
    const std::string table = slurp(dir.path() + "/sweep/sweep.tsv");
    CHECK(table.find("nu\tbest_valid_mrr\tbest_epoch\ttest_mrr") == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);  // header + 3 runs
    for (const char* sub : {"nu_0", "nu_0.5", "nu_1"})
        CHECK(fs::exists(fs::path(dir.path()) / "sweep" / sub / "summary.json"));

    REQUIRE(run_cli("train " + solo_cfg, dir).code == 0);
    // Same nu and seeds at index 0: the training log matches byte for byte.
    CHECK(slurp(dir.path() + "/sweep/nu_0/train.log") == slurp(dir.path() + "/solo/train.log"));
    CHECK(!slurp(dir.path() + "/sweep/nu_0/train.log").empty());
    CHECK(slurp(dir.path() + "/sweep/nu_0.5/train.log") != slurp(dir.path() + "/solo/train.log"));
}

TEST_CASE("cli usage errors are config-level failures") {
    TempDir dir;
    CHECK(run_cli("", dir).code == 1);                    // missing subcommand
    CHECK(run_cli("trian foo.ini", dir).code == 1);       // unknown verb
    CHECK(run_cli("train", dir).code == 1);               // missing argument
    CHECK(run_cli("--help", dir).code == 0);
    const auto r = run_cli("evaluate --config x --checkpoint y --split train", dir);
    CHECK(r.code == 1);  // the unreadable config file surfaces first
    CHECK(r.err.find("config error") != std::string::npos);
}
