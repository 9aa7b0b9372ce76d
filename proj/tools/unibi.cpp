// Command-line driver: train / eval / stats / identity-exp /
// complexity-report / verify. Configuration comes from an optional JSON file
// plus flag overrides (flags win). UNIBI_LOG={error,warn,info,debug} controls
// verbosity.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "unibi/commands.hpp"
#include "unibi/run_config.hpp"

namespace {

struct FlagOverrides {
    std::string config_path;
    std::string profile;
    std::string data_dir;
    std::string out_dir;
    std::string model;
    std::string checkpoint;
    int dim = -1;
    double gamma = -1.0;
    double reg = -1.0;
    bool no_ec = false;
    bool no_rc = false;
    double identity_fraction = -1.0;
    int identity_copies = -1;
    long long seed = -1;
    int threads = -1;
    bool force = false;
    bool unfiltered = false;
    int max_epochs = -1;
    int batch_size = -1;
    int verify_matrices = -1;
    int verify_samples = -1;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    cmd->add_option("--profile", f.profile, "named hyperparameter profile, e.g. unibi-o2:wn18rr");
    cmd->add_option("--data-dir", f.data_dir, "directory with train.txt/valid.txt/test.txt");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--model", f.model, "unibi-o2|unibi-o3|cp|complex|rescal");
    cmd->add_option("--dim", f.dim, "embedding dimension");
    cmd->add_option("--gamma", f.gamma, "softmax scale");
    cmd->add_option("--reg", f.reg, "regularization weight (lambda)");
    cmd->add_flag("--no-ec", f.no_ec, "disable the entity constraint");
    cmd->add_flag("--no-rc", f.no_rc, "disable the relation constraint");
    cmd->add_option("--identity-fraction", f.identity_fraction,
                    "inject (e, identity, e) for this fraction of entities");
    cmd->add_option("--identity-copies", f.identity_copies, "1 or 2 identity relations");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    cmd->add_flag("--force", f.force, "overwrite existing outputs");
    cmd->add_flag("--unfiltered", f.unfiltered, "rank against unfiltered candidates");
    cmd->add_option("--checkpoint", f.checkpoint, "checkpoint path");
    cmd->add_option("--max-epochs", f.max_epochs, "maximum training epochs");
    cmd->add_option("--batch-size", f.batch_size, "minibatch size");
    cmd->add_option("--verify-matrices", f.verify_matrices, "matrices for the dichotomy suite");
    cmd->add_option("--verify-samples", f.verify_samples, "samples for the bound check");
}

unibi::RunConfig build_config(const FlagOverrides& f) {
    unibi::RunConfig rc;
    if (!f.profile.empty()) unibi::apply_profile(rc, f.profile);
    if (!f.config_path.empty()) unibi::load_config_file(rc, f.config_path);
    if (!f.data_dir.empty()) rc.data_dir = f.data_dir;
    if (!f.out_dir.empty()) rc.out_dir = f.out_dir;
    if (!f.model.empty()) rc.model.kind = unibi::model_kind_from_string(f.model);
    if (!f.checkpoint.empty()) rc.checkpoint = f.checkpoint;
    if (f.dim > 0) rc.model.dim = f.dim;
    if (f.gamma >= 0) rc.train.gamma = f.gamma;
    if (f.reg >= 0) rc.train.reg_weight = f.reg;
    if (f.no_ec) rc.model.entity_constraint = false;
    if (f.no_rc) rc.model.relation_constraint = false;
    if (f.identity_fraction >= 0) rc.identity_fraction = f.identity_fraction;
    if (f.identity_copies > 0) rc.identity_copies = f.identity_copies;
    if (f.seed >= 0) {
        rc.seed = static_cast<std::uint64_t>(f.seed);
        rc.train.seed = rc.seed;
    }
    if (f.threads >= 0) rc.threads = f.threads;
    if (f.force) rc.force = true;
    if (f.unfiltered) rc.unfiltered = true;
    if (f.max_epochs > 0) rc.train.max_epochs = f.max_epochs;
    if (f.batch_size > 0) rc.train.batch_size = f.batch_size;
    if (f.verify_matrices > 0) rc.verify_matrices = f.verify_matrices;
    if (f.verify_samples > 0) rc.verify_samples = f.verify_samples;
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"UniBi knowledge-graph completion"};
    app.require_subcommand(1);

    FlagOverrides train_f, eval_f, stats_f, identity_f, complexity_f, verify_f;
    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (filtered MRR / Hits@k)");
    auto* stats = app.add_subcommand("stats", "per-relation complexity statistics");
    auto* identity = app.add_subcommand("identity-exp", "identity-law experiment with ablations");
    auto* complexity = app.add_subcommand("complexity-report", "imbalance vs relation complexity");
    auto* verify = app.add_subcommand("verify", "run the boundedness/dichotomy/condition verifiers");
    add_common_flags(train, train_f);
    add_common_flags(eval, eval_f);
    add_common_flags(stats, stats_f);
    add_common_flags(identity, identity_f);
    add_common_flags(complexity, complexity_f);
    add_common_flags(verify, verify_f);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return unibi::cmd_train(build_config(train_f));
        if (eval->parsed()) return unibi::cmd_eval(build_config(eval_f));
        if (stats->parsed()) return unibi::cmd_stats(build_config(stats_f));
        if (identity->parsed()) return unibi::cmd_identity_exp(build_config(identity_f));
        if (complexity->parsed()) return unibi::cmd_complexity_report(build_config(complexity_f));
        if (verify->parsed()) return unibi::cmd_verify(build_config(verify_f));
    } catch (const unibi::Error& e) {
        unibi::log_error(e.what());
        return 1;
    } catch (const std::exception& e) {
        unibi::log_error("unexpected error: ", e.what());
        return 1;
    }
    return 0;
}
