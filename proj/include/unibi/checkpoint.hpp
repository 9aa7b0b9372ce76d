#pragma once

// Checkpoint container: magic "UNIBIKGC", format version, a JSON header
// (model config, vocabulary fingerprint, epoch, metrics), then the raw
// parameter arrays as little-endian 64-bit reals in declared order:
// entities.primary, entities.tail_role, rel_params.

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "unibi/common.hpp"
#include "unibi/model.hpp"

namespace unibi {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'U', 'N', 'I', 'B', 'I', 'K', 'G', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    std::uint64_t vocab_hash = 0;
    int epoch = 0;
    std::map<std::string, double> metrics; // finite values only
};

inline void save_checkpoint(const std::string& path, const ModelState& state,
                            const CheckpointMeta& meta) {
    nlohmann::json header;
    header["config"] = {{"dim", state.config.dim},
                        {"kind", to_string(state.config.kind)},
                        {"ec", state.config.entity_constraint},
                        {"rc", state.config.relation_constraint}};
    header["n_entities"] = state.n_entities;
    header["n_relations"] = state.n_relations;
    header["rng_seed"] = std::to_string(state.rng_seed);
    header["vocab_hash"] = std::to_string(meta.vocab_hash);
    header["epoch"] = meta.epoch;
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : meta.metrics)
        if (std::isfinite(v)) metrics[k] = v;
    header["metrics"] = metrics;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open checkpoint for writing: ", path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    std::string hdr = header.dump();
    std::uint64_t hdr_len = hdr.size();
    out.write(reinterpret_cast<const char*>(&hdr_len), sizeof(hdr_len));
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

    auto write_block = [&](const std::vector<double>& v) {
        std::uint64_t count = v.size();
        out.write(reinterpret_cast<const char*>(&count), sizeof(count));
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write_block(state.entities.primary);
    write_block(state.entities.tail_role);
    write_block(state.rel_params);
    require(out.good(), "failed writing checkpoint: ", path);
}

inline std::pair<ModelState, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open checkpoint: ", path);
    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.gcount() == sizeof(magic) && std::equal(magic, magic + 8, kCheckpointMagic),
            "bad checkpoint: wrong magic in ", path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    require(version == kCheckpointVersion, "bad checkpoint: unsupported format version ", version);
    std::uint64_t hdr_len = 0;
    in.read(reinterpret_cast<char*>(&hdr_len), sizeof(hdr_len));
    require(in.good() && hdr_len < (1ULL << 24), "bad checkpoint: corrupt header length");
    std::string hdr(hdr_len, '\0');
    in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
    require(in.good(), "bad checkpoint: truncated header");

    nlohmann::json header = nlohmann::json::parse(hdr, nullptr, false);
    require(!header.is_discarded(), "bad checkpoint: header is not valid JSON");

    ModelState state;
    state.config.dim = header.at("config").at("dim").get<int>();
    state.config.kind = model_kind_from_string(header.at("config").at("kind").get<std::string>());
    state.config.entity_constraint = header.at("config").at("ec").get<bool>();
    state.config.relation_constraint = header.at("config").at("rc").get<bool>();
    state.config.validate();
    state.n_entities = header.at("n_entities").get<Index>();
    state.n_relations = header.at("n_relations").get<Index>();
    state.rng_seed = std::stoull(header.at("rng_seed").get<std::string>());
    state.entities.dim = state.config.dim;

    CheckpointMeta meta;
    meta.vocab_hash = std::stoull(header.at("vocab_hash").get<std::string>());
    meta.epoch = header.at("epoch").get<int>();
    for (auto& [k, v] : header.at("metrics").items()) meta.metrics[k] = v.get<double>();

    auto read_block = [&](std::vector<double>& v) {
        std::uint64_t count = 0;
        in.read(reinterpret_cast<char*>(&count), sizeof(count));
        require(in.good(), "bad checkpoint: truncated block header");
        v.resize(count);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        require(in.good() || count == 0, "bad checkpoint: truncated parameter block");
    };
    read_block(state.entities.primary);
    read_block(state.entities.tail_role);
    read_block(state.rel_params);

    require(state.entities.primary.size() ==
                static_cast<std::size_t>(state.n_entities) * state.config.dim,
            "bad checkpoint: entity table size mismatch");
    require(state.rel_params.size() ==
                static_cast<std::size_t>(state.n_relations) * per_relation_size(state.config),
            "bad checkpoint: relation table size mismatch");
    return {std::move(state), std::move(meta)};
}

} // namespace unibi
