#pragma once

// Run configuration: JSON file merged with flag overrides (last wins), plus
// the named hyperparameter profiles per (model, dataset) pair. Unknown JSON
// keys are rejected before any compute happens.

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "unibi/common.hpp"
#include "unibi/kg.hpp"
#include "unibi/model.hpp"
#include "unibi/trainer.hpp"

namespace unibi {

struct RunConfig {
    std::string data_dir;                         // benchmark dir with {train,valid,test}.txt
    std::vector<SyntheticRelationSpec> synthetic; // used when data_dir is empty
    std::uint64_t synthetic_seed = 7;

    ModelConfig model;
    TrainConfig train;

    double identity_fraction = 0.0; // 0 disables injection
    int identity_copies = 1;
    int verify_matrices = 500;
    int verify_samples = 10000;
    std::vector<std::string> track_relations;

    std::string out_dir = "out";
    std::string checkpoint;
    bool force = false;
    bool unfiltered = false;
    bool dump_ranks = false;
    int threads = 0; // 0 = all hardware threads
    std::uint64_t seed = 1;

    void validate() const {
        model.validate();
        train.validate();
        if (identity_fraction != 0.0)
            require(identity_fraction > 0.0 && identity_fraction <= 1.0,
                    "identity fraction must be in (0, 1], got ", identity_fraction);
        require(identity_copies == 1 || identity_copies == 2, "identity copies must be 1 or 2");
        require(verify_matrices > 0 && verify_samples > 0, "verifier sample counts must be positive");
        require(threads >= 0, "threads must be >= 0");
    }
};

struct Profile {
    ModelKind kind;
    int dim;
    double reg;
    double gamma;
    int batch;
    bool constrained;
};

// Grid-search results per (model, dataset); learning rate 1e-3 and 200 max
// epochs throughout. The unconstrained UniBi variants run with EC/RC off.
inline const std::map<std::string, Profile>& profiles() {
    static const std::map<std::string, Profile> table = {
        {"cp:wn18rr", {ModelKind::Cp, 500, 1e-1, 1, 100, false}},
        {"cp:fb15k-237", {ModelKind::Cp, 500, 5e-2, 1, 100, false}},
        {"cp:yago3-10-dr", {ModelKind::Cp, 500, 5e-3, 1, 1000, false}},
        {"complex:wn18rr", {ModelKind::Complex, 500, 1e-1, 1, 100, false}},
        {"complex:fb15k-237", {ModelKind::Complex, 500, 5e-2, 1, 100, false}},
        {"complex:yago3-10-dr", {ModelKind::Complex, 500, 1e-2, 1, 1000, false}},
        {"rescal:wn18rr", {ModelKind::Rescal, 256, 1e-1, 1, 1000, false}},
        {"rescal:fb15k-237", {ModelKind::Rescal, 500, 5e-2, 1, 1000, false}},
        {"rescal:yago3-10-dr", {ModelKind::Rescal, 500, 5e-2, 1, 1000, false}},
        {"unibi-o2:wn18rr", {ModelKind::UniBiO2, 500, 2, 20, 100, true}},
        {"unibi-o2:fb15k-237", {ModelKind::UniBiO2, 500, 2, 25, 1000, true}},
        {"unibi-o2:yago3-10-dr", {ModelKind::UniBiO2, 500, 1.5, 30, 1000, true}},
        {"unibi-o2-unconstrained:wn18rr", {ModelKind::UniBiO2, 500, 1e-1, 1, 100, false}},
        {"unibi-o2-unconstrained:fb15k-237", {ModelKind::UniBiO2, 500, 5e-2, 1, 1000, false}},
        {"unibi-o2-unconstrained:yago3-10-dr", {ModelKind::UniBiO2, 500, 5e-2, 1, 1000, false}},
        {"unibi-o3:wn18rr", {ModelKind::UniBiO3, 500, 2, 15, 100, true}},
        {"unibi-o3:fb15k-237", {ModelKind::UniBiO3, 500, 1.5, 20, 1000, true}},
        {"unibi-o3:yago3-10-dr", {ModelKind::UniBiO3, 500, 1.5, 30, 1000, true}},
        {"unibi-o3-unconstrained:wn18rr", {ModelKind::UniBiO3, 500, 1e-1, 1, 100, false}},
        {"unibi-o3-unconstrained:fb15k-237", {ModelKind::UniBiO3, 500, 5e-2, 1, 1000, false}},
        {"unibi-o3-unconstrained:yago3-10-dr", {ModelKind::UniBiO3, 500, 5e-2, 1, 1000, false}},
    };
    return table;
}

// DURA weights: the grouped (0.5, 1.5) setting for CP and ComplEx, all ones
// otherwise.
inline std::array<double, 4> default_dura_weights(ModelKind kind) {
    if (kind == ModelKind::Cp || kind == ModelKind::Complex) return {0.5, 0.5, 1.5, 1.5};
    return {1.0, 1.0, 1.0, 1.0};
}

inline void apply_profile(RunConfig& rc, const std::string& name) {
    auto it = profiles().find(name);
    require(it != profiles().end(), "unknown profile: \"", name, "\"");
    const Profile& p = it->second;
    rc.model.kind = p.kind;
    rc.model.dim = p.dim;
    rc.model.entity_constraint = is_unibi(p.kind) ? p.constrained : false;
    rc.model.relation_constraint = rc.model.entity_constraint;
    rc.train.reg_weight = p.reg;
    rc.train.gamma = p.gamma;
    rc.train.batch_size = p.batch;
    rc.train.learning_rate = 1e-3;
    rc.train.max_epochs = 200;
    rc.train.dura = default_dura_weights(p.kind);
}

inline void apply_config_json(RunConfig& rc, const nlohmann::json& j, const std::string& origin) {
    require(j.is_object(), origin, ": config must be a JSON object");
    static const std::vector<std::string> known = {
        "profile",        "data_dir",         "synthetic",       "synthetic_seed",
        "model",          "dim",              "ec",              "rc",
        "gamma",          "reg",              "dura",            "learning_rate",
        "batch_size",     "max_epochs",       "eval_every",      "patience",
        "seed",           "identity_fraction", "identity_copies", "verify_matrices",
        "verify_samples", "track_relations",  "out_dir",         "checkpoint",
        "force",          "unfiltered",       "threads",         "dump_ranks"};
    for (auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const auto& k : known) ok = ok || k == key;
        require(ok, origin, ": unknown config key \"", key, "\"");
    }

    if (j.contains("profile")) apply_profile(rc, j.at("profile").get<std::string>());
    if (j.contains("data_dir")) rc.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("synthetic")) {
        rc.synthetic.clear();
        for (const auto& s : j.at("synthetic")) {
            SyntheticRelationSpec sp;
            sp.n_heads = s.at("heads").get<int>();
            sp.tails_per_head = s.at("tails_per_head").get<int>();
            sp.n_tails = s.at("tails").get<int>();
            sp.heads_per_tail = s.at("heads_per_tail").get<int>();
            rc.synthetic.push_back(sp);
        }
    }
    if (j.contains("synthetic_seed")) rc.synthetic_seed = j.at("synthetic_seed").get<std::uint64_t>();
    if (j.contains("model")) rc.model.kind = model_kind_from_string(j.at("model").get<std::string>());
    if (j.contains("dim")) rc.model.dim = j.at("dim").get<int>();
    if (j.contains("ec")) rc.model.entity_constraint = j.at("ec").get<bool>();
    if (j.contains("rc")) rc.model.relation_constraint = j.at("rc").get<bool>();
    if (j.contains("gamma")) rc.train.gamma = j.at("gamma").get<double>();
    if (j.contains("reg")) rc.train.reg_weight = j.at("reg").get<double>();
    if (j.contains("dura")) {
        auto arr = j.at("dura");
        require(arr.is_array() && arr.size() == 4, origin, ": dura must be an array of 4 weights");
        for (std::size_t i = 0; i < 4; ++i) rc.train.dura[i] = arr[i].get<double>();
    }
    if (j.contains("learning_rate")) rc.train.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) rc.train.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_epochs")) rc.train.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("eval_every")) rc.train.eval_every = j.at("eval_every").get<int>();
    if (j.contains("patience")) rc.train.patience = j.at("patience").get<int>();
    if (j.contains("seed")) {
        rc.seed = j.at("seed").get<std::uint64_t>();
        rc.train.seed = rc.seed;
    }
    if (j.contains("identity_fraction")) rc.identity_fraction = j.at("identity_fraction").get<double>();
    if (j.contains("identity_copies")) rc.identity_copies = j.at("identity_copies").get<int>();
    if (j.contains("verify_matrices")) rc.verify_matrices = j.at("verify_matrices").get<int>();
    if (j.contains("verify_samples")) rc.verify_samples = j.at("verify_samples").get<int>();
    if (j.contains("track_relations"))
        rc.track_relations = j.at("track_relations").get<std::vector<std::string>>();
    if (j.contains("out_dir")) rc.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("checkpoint")) rc.checkpoint = j.at("checkpoint").get<std::string>();
    if (j.contains("force")) rc.force = j.at("force").get<bool>();
    if (j.contains("unfiltered")) rc.unfiltered = j.at("unfiltered").get<bool>();
    if (j.contains("threads")) rc.threads = j.at("threads").get<int>();
    if (j.contains("dump_ranks")) rc.dump_ranks = j.at("dump_ranks").get<bool>();
}

inline void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config file: ", path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    require(!j.is_discarded(), path, ": invalid JSON");
    apply_config_json(rc, j, path);
}

} // namespace unibi
