#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "unibi/run_config.hpp"

using namespace unibi;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

struct Workdir {
    fs::path root;
    explicit Workdir(const std::string& name) {
        root = fs::temp_directory_path() / name;
        fs::remove_all(root);
        fs::create_directories(root);
    }
    fs::path file(const std::string& name) const { return root / name; }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(UNIBI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& contents) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << contents;
}

const char* kTinyConfig = R"({
  "synthetic": [{"heads": 10, "tails_per_head": 2, "tails": 10, "heads_per_tail": 2}],
  "model": "unibi-o2",
  "dim": 4,
  "gamma": 5,
  "batch_size": 32,
  "max_epochs": 3,
  "eval_every": 3,
  "seed": 3
})";

} // namespace

TEST_CASE("profiles carry the published hyperparameters") {
    RunConfig rc;
    apply_profile(rc, "unibi-o2:wn18rr");
    CHECK(rc.model.kind == ModelKind::UniBiO2);
    CHECK(rc.model.dim == 500);
    CHECK(rc.model.entity_constraint);
    CHECK(rc.model.relation_constraint);
    CHECK(rc.train.gamma == 20.0);
    CHECK(rc.train.reg_weight == 2.0);
    CHECK(rc.train.batch_size == 100);
    CHECK(rc.train.learning_rate == 1e-3);
    CHECK(rc.train.max_epochs == 200);

    apply_profile(rc, "rescal:wn18rr");
    CHECK(rc.model.dim == 256);
    CHECK(rc.train.gamma == 1.0);
    CHECK_FALSE(rc.model.entity_constraint);

    apply_profile(rc, "cp:fb15k-237");
    CHECK(rc.train.dura == std::array<double, 4>{0.5, 0.5, 1.5, 1.5});
    apply_profile(rc, "unibi-o3:yago3-10-dr");
    CHECK(rc.train.dura == std::array<double, 4>{1.0, 1.0, 1.0, 1.0});
    CHECK(rc.train.gamma == 30.0);

    CHECK_THROWS_WITH(apply_profile(rc, "no-such:profile"),
                      Catch::Matchers::ContainsSubstring("unknown profile"));
}

TEST_CASE("config JSON is validated strictly") {
    RunConfig rc;
    nlohmann::json bad = {{"gamma", 5.0}, {"mystery_key", 1}};
    CHECK_THROWS_WITH(apply_config_json(rc, bad, "test"),
                      Catch::Matchers::ContainsSubstring("mystery_key"));

    nlohmann::json good = {{"gamma", 5.0}, {"model", "unibi-o3"}, {"dim", 12}};
    apply_config_json(rc, good, "test");
    CHECK(rc.train.gamma == 5.0);
    CHECK(rc.model.kind == ModelKind::UniBiO3);
    CHECK(rc.model.dim == 12);

    // dim not a multiple of the block size fails validation before compute.
    nlohmann::json odd = {{"model", "unibi-o3"}, {"dim", 10}};
    RunConfig rc2;
    apply_config_json(rc2, odd, "test");
    CHECK_THROWS_WITH(rc2.validate(), Catch::Matchers::ContainsSubstring("divisible by 4"));
}

TEST_CASE("cli: train then eval on a tiny synthetic graph") {
    Workdir wd("unibi_cli_train");
    write_file(wd.file("config.json"), kTinyConfig);
    fs::path out = wd.file("out");

    int rc = run_cli("train --config " + wd.file("config.json").string() + " --out " + out.string());
    REQUIRE(rc == 0);
    CHECK(fs::exists(out / "checkpoint.unibi"));
    CHECK(fs::exists(out / "train_trace.csv"));

    // Re-running without --force refuses to clobber outputs.
    rc = run_cli("train --config " + wd.file("config.json").string() + " --out " + out.string());
    CHECK(rc == 1);

    fs::path eval_out = wd.file("eval_out");
    std::string eval_args = "eval --config " + wd.file("config.json").string() + " --checkpoint " +
                            (out / "checkpoint.unibi").string() + " --out " + eval_out.string();
    rc = run_cli(eval_args);
    REQUIRE(rc == 0);
    CHECK(fs::exists(eval_out / "eval.csv"));
    std::string first = slurp(eval_out / "eval.csv");

    rc = run_cli(eval_args + " --force");
    REQUIRE(rc == 0);
    CHECK(slurp(eval_out / "eval.csv") == first); // deterministic bytes

    // A checkpoint trained elsewhere must be rejected on vocabulary mismatch.
    Workdir wd2("unibi_cli_mismatch");
    write_file(wd2.file("config.json"), R"({
      "synthetic": [{"heads": 6, "tails_per_head": 1, "tails": 6, "heads_per_tail": 1}],
      "model": "unibi-o2", "dim": 4, "max_epochs": 1, "eval_every": 1, "seed": 3
    })");
    rc = run_cli("eval --config " + wd2.file("config.json").string() + " --checkpoint " +
                 (out / "checkpoint.unibi").string() + " --out " + wd2.file("o").string());
    CHECK(rc == 1);
}

TEST_CASE("cli: training twice with one seed produces identical outputs") {
    Workdir wd("unibi_cli_repro");
    write_file(wd.file("config.json"), kTinyConfig);
    fs::path a = wd.file("a"), b = wd.file("b");
    REQUIRE(run_cli("train --config " + wd.file("config.json").string() + " --out " + a.string()) == 0);
    REQUIRE(run_cli("train --config " + wd.file("config.json").string() + " --out " + b.string()) == 0);
    CHECK(slurp(a / "checkpoint.unibi") == slurp(b / "checkpoint.unibi"));
    CHECK(slurp(a / "train_trace.csv") == slurp(b / "train_trace.csv"));
}

TEST_CASE("cli: eval can dump per-query ranks") {
    Workdir wd("unibi_cli_ranks");
    std::string cfg(kTinyConfig);
    cfg.insert(cfg.rfind('}'), ", \"dump_ranks\": true");
    write_file(wd.file("config.json"), cfg);
    fs::path out = wd.file("out");
    REQUIRE(run_cli("train --config " + wd.file("config.json").string() + " --out " + out.string()) == 0);
    fs::path eout = wd.file("eval");
    REQUIRE(run_cli("eval --config " + wd.file("config.json").string() + " --checkpoint " +
                    (out / "checkpoint.unibi").string() + " --out " + eout.string()) == 0);
    std::string dump = slurp(eout / "ranks_test.csv");
    CHECK(dump.rfind("head,relation,tail,rank\n", 0) == 0);
}

TEST_CASE("cli: missing dataset directory exits with status 2") {
    Workdir wd("unibi_cli_missing");
    int rc = run_cli("train --data-dir /nonexistent/nowhere --out " + wd.file("out").string());
    CHECK(rc == 2);
}

TEST_CASE("cli: corrupt checkpoint magic is reported") {
    Workdir wd("unibi_cli_corrupt");
    write_file(wd.file("config.json"), kTinyConfig);
    write_file(wd.file("bad.unibi"), "NOTMAGIC plus garbage");
    int rc = run_cli("eval --config " + wd.file("config.json").string() + " --checkpoint " +
                     wd.file("bad.unibi").string() + " --out " + wd.file("out").string());
    CHECK(rc == 1);
}

TEST_CASE("cli: stats emits the relation statistics CSV") {
    Workdir wd("unibi_cli_stats");
    write_file(wd.file("config.json"), kTinyConfig);
    int rc = run_cli("stats --config " + wd.file("config.json").string() + " --out " +
                     wd.file("out").string());
    REQUIRE(rc == 0);
    std::string csv = slurp(wd.file("out") / "relation_stats.csv");
    CHECK(csv.rfind("relation,hptr,tphr,complexity,category\n", 0) == 0);
}

TEST_CASE("cli: verify passes with reduced sample counts") {
    Workdir wd("unibi_cli_verify");
    int rc = run_cli("verify --dim 8 --verify-matrices 40 --verify-samples 500 --seed 5");
    CHECK(rc == 0);
}

TEST_CASE("cli: identity experiment writes one trace per ablation") {
    Workdir wd("unibi_cli_identity");
    write_file(wd.file("config.json"), R"({
      "synthetic": [{"heads": 8, "tails_per_head": 2, "tails": 8, "heads_per_tail": 2}],
      "model": "unibi-o2", "dim": 4, "gamma": 5, "batch_size": 32,
      "max_epochs": 2, "eval_every": 2, "identity_fraction": 1.0, "seed": 4
    })");
    int rc = run_cli("identity-exp --config " + wd.file("config.json").string() + " --out " +
                     wd.file("out").string());
    REQUIRE(rc == 0);
    for (const char* name : {"identity_ec_rc.csv", "identity_ec_only.csv", "identity_rc_only.csv",
                             "identity_none.csv"})
        CHECK(fs::exists(wd.file("out") / name));
}

TEST_CASE("cli: complexity report from a trained checkpoint") {
    Workdir wd("unibi_cli_complexity");
    write_file(wd.file("config.json"), kTinyConfig);
    fs::path out = wd.file("out");
    REQUIRE(run_cli("train --config " + wd.file("config.json").string() + " --out " + out.string()) == 0);
    int rc = run_cli("complexity-report --config " + wd.file("config.json").string() +
                     " --checkpoint " + (out / "checkpoint.unibi").string() + " --out " +
                     wd.file("rep").string());
    REQUIRE(rc == 0);
    std::string csv = slurp(wd.file("rep") / "complexity_report.csv");
    CHECK(csv.find("spearman,") != std::string::npos);
}

TEST_CASE("cli: unknown config keys abort") {
    Workdir wd("unibi_cli_badkey");
    write_file(wd.file("config.json"), R"({"definitely_not_a_key": 1})");
    int rc = run_cli("train --config " + wd.file("config.json").string() + " --out " +
                     wd.file("out").string());
    CHECK(rc == 1);
}
