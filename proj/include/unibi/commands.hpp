#pragma once

// Subcommand implementations behind the CLI: train, eval, stats,
// identity-exp, complexity-report, verify. Each returns a process exit code;
// outputs are never overwritten without force.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "unibi/checkpoint.hpp"
#include "unibi/common.hpp"
#include "unibi/diagnostics.hpp"
#include "unibi/evaluator.hpp"
#include "unibi/kg.hpp"
#include "unibi/run_config.hpp"
#include "unibi/scoring.hpp"
#include "unibi/trainer.hpp"

namespace unibi {

namespace cmd_detail {

inline int effective_threads(const RunConfig& rc) {
    if (rc.threads > 0) return rc.threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline std::ofstream open_output(const RunConfig& rc, const std::string& name) {
    std::filesystem::create_directories(rc.out_dir);
    std::filesystem::path path = std::filesystem::path(rc.out_dir) / name;
    require(rc.force || !std::filesystem::exists(path),
            "refusing to overwrite existing output (use --force): ", path.string());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open output file: ", path.string());
    return out;
}

inline std::string output_path(const RunConfig& rc, const std::string& name) {
    return (std::filesystem::path(rc.out_dir) / name).string();
}

// Shared data pipeline: load or generate, make reciprocal, optionally inject
// the identity relation.
inline Dataset prepare_dataset(const RunConfig& rc) {
    Dataset ds;
    if (!rc.data_dir.empty()) {
        ds = load_dataset(rc.data_dir);
    } else {
        require(!rc.synthetic.empty(), "no dataset configured: set data_dir or synthetic");
        ds = generate_synthetic(rc.synthetic, rc.synthetic_seed);
    }
    ds = augment_reciprocal(ds);
    if (rc.identity_fraction > 0.0)
        ds = inject_identity(ds, rc.identity_fraction, rc.seed, rc.identity_copies);
    log_info("dataset: ", ds.vocab.n_entities(), " entities, ", ds.vocab.n_relations(),
             " relations, ", ds.train.size(), "/", ds.valid.size(), "/", ds.test.size(),
             " train/valid/test triples");
    return ds;
}

} // namespace cmd_detail

inline int cmd_train(RunConfig rc) {
    rc.validate();
    if (!rc.data_dir.empty() && !std::filesystem::exists(rc.data_dir + "/train.txt")) {
        log_error("missing dataset path: ", rc.data_dir, "/train.txt");
        return 2;
    }
    Dataset ds = cmd_detail::prepare_dataset(rc);
    ModelState state =
        init_state(rc.model, ds.vocab.n_entities(), ds.vocab.n_relations(), rc.seed);

    TrainHooks hooks;
    for (const std::string& name : rc.track_relations) {
        Index r = ds.vocab.find_relation(name);
        require(r >= 0, "unknown tracked relation: \"", name, "\"");
        hooks.track_relations.push_back(r);
    }
    if (ds.identity_relation) hooks.track_relations.push_back(*ds.identity_relation);

    auto [best, trace] = fit(std::move(state), ds, rc.train, hooks);

    FilterIndex filter = build_filter_index(ds);
    EvalResult valid = evaluate(best, ds.valid, filter, !rc.unfiltered, cmd_detail::effective_threads(rc));
    {
        auto out = cmd_detail::open_output(rc, "train_trace.csv");
        write_train_trace_csv(out, trace, ds.vocab);
    }
    CheckpointMeta meta;
    meta.vocab_hash = ds.vocab.fingerprint();
    meta.epoch = trace.best_epoch;
    meta.metrics["valid_mrr"] = valid.mrr;
    meta.metrics["valid_hits1"] = valid.hits_at.at(1);
    meta.metrics["valid_hits10"] = valid.hits_at.at(10);
    {
        std::string path = cmd_detail::output_path(rc, "checkpoint.unibi");
        require(rc.force || !std::filesystem::exists(path),
                "refusing to overwrite existing output (use --force): ", path);
        save_checkpoint(path, best, meta);
    }
    std::cout << "best_epoch=" << trace.best_epoch << " valid_mrr=" << csv_double(valid.mrr)
              << " valid_hits@1=" << csv_double(valid.hits_at.at(1))
              << " valid_hits@10=" << csv_double(valid.hits_at.at(10)) << "\n";
    return 0;
}

inline int cmd_eval(RunConfig rc) {
    rc.validate();
    require(!rc.checkpoint.empty(), "eval requires --checkpoint");
    Dataset ds = cmd_detail::prepare_dataset(rc);
    auto [state, meta] = load_checkpoint(rc.checkpoint);
    require(meta.vocab_hash == ds.vocab.fingerprint(),
            "checkpoint does not match this dataset (vocabulary hash mismatch)");
    FilterIndex filter = build_filter_index(ds);
    int threads = cmd_detail::effective_threads(rc);
    EvalResult valid = evaluate(state, ds.valid, filter, !rc.unfiltered, threads);
    EvalResult test = evaluate(state, ds.test, filter, !rc.unfiltered, threads);
    auto out = cmd_detail::open_output(rc, "eval.csv");
    write_eval_csv_header(out);
    write_eval_csv_row(out, "valid", valid);
    write_eval_csv_row(out, "test", test);
    if (rc.dump_ranks) {
        auto rv = cmd_detail::open_output(rc, "ranks_valid.csv");
        write_rank_dump(rv, valid, ds.vocab);
        auto rt = cmd_detail::open_output(rc, "ranks_test.csv");
        write_rank_dump(rt, test, ds.vocab);
    }
    std::cout << "valid_mrr=" << csv_double(valid.mrr) << " test_mrr=" << csv_double(test.mrr)
              << " test_hits@10=" << csv_double(test.hits_at.at(10)) << "\n";
    return 0;
}

inline int cmd_stats(RunConfig rc) {
    require(!rc.data_dir.empty() || !rc.synthetic.empty(),
            "stats requires a dataset (data_dir or synthetic)");
    Dataset ds = rc.data_dir.empty() ? generate_synthetic(rc.synthetic, rc.synthetic_seed)
                                     : load_dataset(rc.data_dir);
    auto stats = relation_stats(ds.train, ds.vocab);
    auto out = cmd_detail::open_output(rc, "relation_stats.csv");
    write_relation_stats_csv(out, stats, ds.vocab);
    std::cout << "entities=" << ds.vocab.n_entities() << " relations=" << ds.vocab.n_relations()
              << " train=" << ds.train.size() << " valid=" << ds.valid.size()
              << " test=" << ds.test.size() << "\n";
    return 0;
}

inline int cmd_identity_exp(RunConfig rc) {
    if (rc.identity_fraction <= 0.0) rc.identity_fraction = 1.0;
    if (rc.synthetic.empty() && rc.data_dir.empty())
        rc.synthetic = {{100, 5, 100, 5}}; // 20 complete 5x5 blocks, 200 entities
    rc.validate();
    Dataset ds = cmd_detail::prepare_dataset(rc);

    std::vector<IdentityRunConfig> runs;
    auto add_run = [&](const std::string& label, bool ec, bool rc_flag) {
        ModelConfig mc = rc.model;
        mc.entity_constraint = ec;
        mc.relation_constraint = rc_flag;
        runs.push_back({label, mc, rc.train});
    };
    if (is_unibi(rc.model.kind)) {
        add_run("ec_rc", true, true);
        add_run("ec_only", true, false);
        add_run("rc_only", false, true);
        add_run("none", false, false);
    } else {
        add_run("as_configured", rc.model.entity_constraint, rc.model.relation_constraint);
    }

    auto results = run_identity_experiment(ds, runs, rc.identity_copies, rc.seed);
    for (const auto& run : results) {
        auto out = cmd_detail::open_output(rc, "identity_" + run.label + ".csv");
        write_identity_trace_csv(out, run);
        std::cout << run.label << ": final_delta=" << csv_double(run.final_delta);
        if (rc.identity_copies == 2)
            std::cout << " initial_error=" << csv_double(run.initial_error)
                      << " final_error=" << csv_double(run.final_error);
        std::cout << "\n";
    }
    return 0;
}

inline int cmd_complexity_report(RunConfig rc) {
    rc.validate();
    require(!rc.checkpoint.empty(), "complexity-report requires --checkpoint");
    Dataset ds = cmd_detail::prepare_dataset(rc);
    auto [state, meta] = load_checkpoint(rc.checkpoint);
    require(meta.vocab_hash == ds.vocab.fingerprint(),
            "checkpoint does not match this dataset (vocabulary hash mismatch)");
    ComplexityReport report = complexity_report(state, ds);
    auto out = cmd_detail::open_output(rc, "complexity_report.csv");
    write_complexity_report_csv(out, report, ds.vocab);
    std::cout << "relations=" << report.rows.size() << " spearman="
              << (report.spearman_defined ? csv_double(report.spearman) : "n/a") << "\n";
    return 0;
}

inline int cmd_verify(RunConfig rc) {
    ModelConfig mc = rc.model;
    mc.entity_constraint = true;
    mc.relation_constraint = true;
    mc.validate();

    int failures = 0;
    auto report = [&](const char* name, bool ok, double value) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (worst " << csv_double(value)
                  << ")\n";
        if (!ok) ++failures;
    };

    ModelState state = init_state(mc, 64, 8, rc.seed);
    try {
        double worst = verify_bound(state, rc.verify_samples, rc.seed + 1);
        report("score bound |s| <= 1", true, worst);
    } catch (const Error& e) {
        log_error(e.what());
        report("score bound |s| <= 1", false, 0.0);
    }
    try {
        auto suite = run_counterexample_suite(rc.verify_matrices, 2, 6, rc.seed + 2);
        report("self-score dichotomy", true, suite.worst_margin);
    } catch (const Error& e) {
        log_error(e.what());
        report("self-score dichotomy", false, 0.0);
    }
    try {
        double worst = verify_necessary_condition(state, 1000, rc.seed + 3);
        report("necessary condition ||Me|| <= 1", true, worst);
    } catch (const Error& e) {
        log_error(e.what());
        report("necessary condition ||Me|| <= 1", false, 0.0);
    }
    return failures == 0 ? 0 : 1;
}

} // namespace unibi
