#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "unibi/checkpoint.hpp"

using namespace unibi;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ModelState sample_state(ModelKind kind) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.dim = kind == ModelKind::UniBiO3 ? 8 : 6;
    return init_state(cfg, 9, 4, 12345);
}

} // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
    for (ModelKind kind : {ModelKind::UniBiO2, ModelKind::Cp, ModelKind::Rescal}) {
        ModelState state = sample_state(kind);
        CheckpointMeta meta;
        meta.vocab_hash = 0xdeadbeefcafef00dULL;
        meta.epoch = 17;
        meta.metrics = {{"valid_mrr", 0.731}, {"valid_hits1", 0.5}};

        auto p1 = temp_path("unibi_ckpt_a.bin");
        save_checkpoint(p1.string(), state, meta);
        auto [loaded, meta2] = load_checkpoint(p1.string());

        CHECK(loaded.entities.primary == state.entities.primary);
        CHECK(loaded.entities.tail_role == state.entities.tail_role);
        CHECK(loaded.rel_params == state.rel_params);
        CHECK(loaded.config.dim == state.config.dim);
        CHECK(loaded.config.kind == state.config.kind);
        CHECK(loaded.rng_seed == state.rng_seed);
        CHECK(meta2.vocab_hash == meta.vocab_hash);
        CHECK(meta2.epoch == meta.epoch);
        CHECK(meta2.metrics == meta.metrics);

        auto p2 = temp_path("unibi_ckpt_b.bin");
        save_checkpoint(p2.string(), loaded, meta2);
        CHECK(slurp(p1) == slurp(p2));
    }
}

TEST_CASE("corrupted magic is rejected") {
    ModelState state = sample_state(ModelKind::UniBiO2);
    auto p = temp_path("unibi_ckpt_bad.bin");
    save_checkpoint(p.string(), state, {});
    {
        std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.write("GARBAGE!", 8);
    }
    CHECK_THROWS_WITH(load_checkpoint(p.string()),
                      Catch::Matchers::ContainsSubstring("bad checkpoint"));
}

TEST_CASE("truncated checkpoints are rejected") {
    ModelState state = sample_state(ModelKind::UniBiO2);
    auto p = temp_path("unibi_ckpt_trunc.bin");
    save_checkpoint(p.string(), state, {});
    auto bytes = slurp(p);
    auto p2 = temp_path("unibi_ckpt_trunc2.bin");
    {
        std::ofstream out(p2, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS(load_checkpoint(p2.string()));
}

TEST_CASE("missing checkpoint file is an error") {
    CHECK_THROWS_WITH(load_checkpoint("/nonexistent/no.bin"),
                      Catch::Matchers::ContainsSubstring("cannot open"));
}
