#pragma once

// Model state shared by the UniBi variants and the bilinear baselines:
// configuration, parameter storage, deterministic initialization, and the
// forward-pass tape consumed by the backward pass.
//
// Raw parameters are what the optimizer updates. Constraint normalizations
// (unit entities, unit block parameters, the spectral divisor) happen inside
// the forward pass and are never written back.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "unibi/common.hpp"
#include "unibi/kg.hpp"
#include "unibi/linalg.hpp"

namespace unibi {

enum class ModelKind { UniBiO2, UniBiO3, Cp, Complex, Rescal };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::UniBiO2: return "unibi-o2";
        case ModelKind::UniBiO3: return "unibi-o3";
        case ModelKind::Cp: return "cp";
        case ModelKind::Complex: return "complex";
        case ModelKind::Rescal: return "rescal";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "unibi-o2" || s == "unibi_o2") return ModelKind::UniBiO2;
    if (s == "unibi-o3" || s == "unibi_o3") return ModelKind::UniBiO3;
    if (s == "cp") return ModelKind::Cp;
    if (s == "complex") return ModelKind::Complex;
    if (s == "rescal") return ModelKind::Rescal;
    fail("unknown model kind: \"", s, "\"");
}

inline bool is_unibi(ModelKind k) { return k == ModelKind::UniBiO2 || k == ModelKind::UniBiO3; }

struct ModelConfig {
    int dim = 32;
    ModelKind kind = ModelKind::UniBiO2;
    bool entity_constraint = true;   // EC: divide scores by ||h|| ||t||
    bool relation_constraint = true; // RC: divide by the spectral radius

    int block_size() const {
        if (kind == ModelKind::UniBiO2) return 2;
        if (kind == ModelKind::UniBiO3) return 4;
        return 0;
    }

    void validate() const {
        require(dim > 0, "model dim must be positive, got ", dim);
        if (kind == ModelKind::UniBiO2)
            require(dim % 2 == 0, "unibi-o2 requires dim divisible by 2, got ", dim);
        if (kind == ModelKind::UniBiO3)
            require(dim % 4 == 0, "unibi-o3 requires dim divisible by 4, got ", dim);
        if (kind == ModelKind::Complex)
            require(dim % 2 == 0, "complex requires even dim, got ", dim);
    }
};

// Doubles per relation. UniBi stores head blocks (n), tail blocks (n) and the
// signed diagonal (n); CP a diagonal; ComplEx interleaved (re, im) pairs;
// RESCAL a full row-major matrix.
inline std::size_t per_relation_size(const ModelConfig& cfg) {
    auto n = static_cast<std::size_t>(cfg.dim);
    switch (cfg.kind) {
        case ModelKind::UniBiO2:
        case ModelKind::UniBiO3: return 3 * n;
        case ModelKind::Cp:
        case ModelKind::Complex: return n;
        case ModelKind::Rescal: return n * n;
    }
    return 0;
}

struct EntityTable {
    int dim = 0;
    std::vector<double> primary;   // n_entities x dim, row-major
    std::vector<double> tail_role; // second table, CP only (head/tail roles differ)

    std::span<double> row(Index e) {
        return {primary.data() + static_cast<std::size_t>(e) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> row(Index e) const {
        return {primary.data() + static_cast<std::size_t>(e) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> tail_row(Index e) {
        return {tail_role.data() + static_cast<std::size_t>(e) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> tail_row(Index e) const {
        return {tail_role.data() + static_cast<std::size_t>(e) * dim, static_cast<std::size_t>(dim)};
    }
};

struct ModelState {
    ModelConfig config;
    Index n_entities = 0;
    Index n_relations = 0;
    EntityTable entities;
    std::vector<double> rel_params; // n_relations x per_relation_size
    std::uint64_t rng_seed = 0;
    std::uint64_t version = 0; // bumped on every parameter mutation

    std::span<double> relation(Index r) {
        std::size_t sz = per_relation_size(config);
        return {rel_params.data() + static_cast<std::size_t>(r) * sz, sz};
    }
    std::span<const double> relation(Index r) const {
        std::size_t sz = per_relation_size(config);
        return {rel_params.data() + static_cast<std::size_t>(r) * sz, sz};
    }

    // UniBi sub-views.
    std::span<const double> head_block_params(Index r) const {
        return relation(r).subspan(0, static_cast<std::size_t>(config.dim));
    }
    std::span<const double> tail_block_params(Index r) const {
        return relation(r).subspan(static_cast<std::size_t>(config.dim),
                                   static_cast<std::size_t>(config.dim));
    }
    std::span<const double> xi(Index r) const {
        return relation(r).subspan(2 * static_cast<std::size_t>(config.dim),
                                   static_cast<std::size_t>(config.dim));
    }

    std::span<const double> head_entity(Index e) const { return entities.row(e); }
    std::span<const double> tail_entity(Index e) const {
        return config.kind == ModelKind::Cp ? entities.tail_row(e) : entities.row(e);
    }
};

// Gradient (and Adam moment) buffers mirror the raw parameter layout.
struct GradientBuffer {
    std::vector<double> entities;
    std::vector<double> entities_tail;
    std::vector<double> rel_params;

    static GradientBuffer like(const ModelState& state) {
        GradientBuffer g;
        g.entities.assign(state.entities.primary.size(), 0.0);
        g.entities_tail.assign(state.entities.tail_role.size(), 0.0);
        g.rel_params.assign(state.rel_params.size(), 0.0);
        return g;
    }
    void zero() {
        std::fill(entities.begin(), entities.end(), 0.0);
        std::fill(entities_tail.begin(), entities_tail.end(), 0.0);
        std::fill(rel_params.begin(), rel_params.end(), 0.0);
    }

    std::span<double> entity_row(const ModelState& state, Index e) {
        return {entities.data() + static_cast<std::size_t>(e) * state.config.dim,
                static_cast<std::size_t>(state.config.dim)};
    }
    std::span<double> tail_entity_row(const ModelState& state, Index e) {
        auto* base = state.config.kind == ModelKind::Cp ? entities_tail.data() : entities.data();
        return {base + static_cast<std::size_t>(e) * state.config.dim,
                static_cast<std::size_t>(state.config.dim)};
    }
    std::span<double> relation(const ModelState& state, Index r) {
        std::size_t sz = per_relation_size(state.config);
        return {rel_params.data() + static_cast<std::size_t>(r) * sz, sz};
    }
};

// Head-side transform of one query, shared by every model kind: after the
// core is built, score(h, r, j) = dot(z, tail view of j) for any candidate j.
struct QueryCore {
    std::vector<double> z;
    double divisor = 1.0; // |xi_max| / max modulus / rho when RC is on, else 1
    int argmax = 0;       // coordinate (or block) attaining the divisor

    // UniBi intermediates kept for the backward pass.
    std::vector<double> a;          // head-rotated entity
    std::vector<double> w;          // xi-weighted a
    std::vector<double> head_norms; // raw block parameter norms
    std::vector<double> tail_norms;

    // RESCAL under RC: top singular pair of the raw matrix.
    std::vector<double> u1, v1;
};

// One forward pass, cached for the backward pass.
struct ScoreTape {
    Index h = -1, r = -1, t = -1;
    double score = 0.0;
    std::uint64_t version = 0;

    // Entity views actually used by the forward (after EC normalization).
    std::vector<double> hn, tn;
    double h_norm = 1.0, t_norm = 1.0;

    QueryCore core;
};

namespace detail {

// Normalized view of one rotation block. Degenerate raw parameters fall back
// to the identity rotation and report norm 0 so the backward pass skips them.
inline double normalized_block(const double* raw, int k, double* out) {
    double n2 = 0.0;
    for (int i = 0; i < k; ++i) n2 += raw[i] * raw[i];
    double n = std::sqrt(n2);
    if (n < 1e-12) {
        out[0] = 1.0;
        for (int i = 1; i < k; ++i) out[i] = 0.0;
        return 0.0;
    }
    for (int i = 0; i < k; ++i) out[i] = raw[i] / n;
    return n;
}

// y = Diag[SO(k)...] x from raw (unnormalized) parameters; block_norms gets
// one entry per block.
inline void apply_blocks_raw(std::span<const double> raw_params, int k,
                             std::span<const double> x, std::span<double> y,
                             bool transposed, std::vector<double>& block_norms) {
    int n = static_cast<int>(x.size());
    block_norms.resize(static_cast<std::size_t>(n / k));
    double unit[4];
    for (int b = 0; b * k < n; ++b) {
        block_norms[static_cast<std::size_t>(b)] = normalized_block(raw_params.data() + b * k, k, unit);
        rot::apply(k, unit, x.data() + b * k, y.data() + b * k, transposed);
    }
}

// Backward of apply_blocks_raw: accumulates dL/dx into gx and dL/draw_params
// into gparams (chained through the block normalization).
inline void apply_blocks_raw_backward(std::span<const double> raw_params, int k,
                                      std::span<const double> x, std::span<const double> gy,
                                      bool transposed, std::span<const double> block_norms,
                                      std::span<double> gx, std::span<double> gparams) {
    int n = static_cast<int>(x.size());
    double unit[4], gunit[4];
    for (int b = 0; b * k < n; ++b) {
        double norm = block_norms[static_cast<std::size_t>(b)];
        normalized_block(raw_params.data() + b * k, k, unit);
        // dL/dx: apply the opposite orientation.
        rot::apply(k, unit, gy.data() + b * k, gx.data() + b * k, !transposed);
        if (norm <= 0.0) continue; // degenerate block: identity view, no parameter gradient
        for (int i = 0; i < k; ++i) gunit[i] = 0.0;
        rot::param_grad(k, x.data() + b * k, gy.data() + b * k, transposed, gunit);
        // Chain through u = p / ||p||: g_p = (g_u - (g_u . u) u) / ||p||.
        double proj = 0.0;
        for (int i = 0; i < k; ++i) proj += gunit[i] * unit[i];
        for (int i = 0; i < k; ++i)
            gparams[static_cast<std::size_t>(b * k + i)] += (gunit[i] - proj * unit[i]) / norm;
    }
}

// Largest-|value| index, ties to the lowest index.
inline int abs_argmax(std::span<const double> v) {
    int best = 0;
    double best_abs = std::abs(v[0]);
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        double a = std::abs(v[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    return best;
}

} // namespace detail

inline ModelState init_state(const ModelConfig& config, Index n_entities, Index n_relations,
                             std::uint64_t seed) {
    config.validate();
    require(n_entities > 0 && n_relations > 0, "entity and relation counts must be positive");

    ModelState st;
    st.config = config;
    st.n_entities = n_entities;
    st.n_relations = n_relations;
    st.rng_seed = seed;
    st.entities.dim = config.dim;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const double entity_scale = 1.0 / std::sqrt(static_cast<double>(config.dim));

    auto fill_normal = [&](std::vector<double>& v, std::size_t count, double scale) {
        v.resize(count);
        for (double& x : v) x = normal(rng) * scale;
    };

    std::size_t ent_count = static_cast<std::size_t>(n_entities) * config.dim;
    fill_normal(st.entities.primary, ent_count, entity_scale);
    if (config.kind == ModelKind::Cp) fill_normal(st.entities.tail_role, ent_count, entity_scale);

    st.rel_params.resize(static_cast<std::size_t>(n_relations) * per_relation_size(config));
    auto draw_unit_block = [&](double* out, int k) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (int i = 0; i < k; ++i) {
                out[i] = normal(rng);
                norm += out[i] * out[i];
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-12);
        for (int i = 0; i < k; ++i) out[i] /= norm;
    };
    auto draw_nonzero_uniform = [&] {
        double x;
        do {
            x = uniform(rng);
        } while (std::abs(x) < 1e-3);
        return x;
    };

    const int n = config.dim;
    for (Index r = 0; r < n_relations; ++r) {
        auto params = st.relation(r);
        switch (config.kind) {
            case ModelKind::UniBiO2:
            case ModelKind::UniBiO3: {
                int k = config.block_size();
                for (int b = 0; b * k < n; ++b) draw_unit_block(params.data() + b * k, k);
                for (int b = 0; b * k < n; ++b) draw_unit_block(params.data() + n + b * k, k);
                for (int i = 0; i < n; ++i) params[static_cast<std::size_t>(2 * n + i)] = draw_nonzero_uniform();
                break;
            }
            case ModelKind::Cp:
                for (int i = 0; i < n; ++i) params[static_cast<std::size_t>(i)] = draw_nonzero_uniform();
                break;
            case ModelKind::Complex:
                for (int j = 0; j * 2 < n; ++j) {
                    double re, im;
                    do {
                        re = uniform(rng);
                        im = uniform(rng);
                    } while (std::sqrt(re * re + im * im) < 1e-3);
                    params[static_cast<std::size_t>(2 * j)] = re;
                    params[static_cast<std::size_t>(2 * j + 1)] = im;
                }
                break;
            case ModelKind::Rescal:
                for (std::size_t i = 0; i < params.size(); ++i) params[i] = normal(rng) * entity_scale;
                break;
        }
    }
    return st;
}

} // namespace unibi
