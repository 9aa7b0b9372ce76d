#pragma once

// Kind dispatch plus the two scoring surfaces: pointwise score (with tape)
// and score-against-every-candidate (with a fused backward for training).

#include <cmath>
#include <span>
#include <vector>

#include "unibi/baselines.hpp"
#include "unibi/common.hpp"
#include "unibi/model.hpp"
#include "unibi/unibi.hpp"

namespace unibi {

namespace detail {

inline std::pair<std::vector<double>, double> entity_view(std::span<const double> raw, bool ec) {
    if (ec) return normalize(raw);
    return {std::vector<double>(raw.begin(), raw.end()), 1.0};
}

// Chain dL/d(view) back to the raw vector; with EC on this projects out the
// radial component and divides by the stored norm.
inline void entity_view_backward(std::span<const double> g_view, std::span<const double> view,
                                 double norm, bool ec, std::span<double> raw_grad) {
    if (!ec) {
        for (std::size_t i = 0; i < g_view.size(); ++i) raw_grad[i] += g_view[i];
        return;
    }
    double proj = dot(g_view, view);
    for (std::size_t i = 0; i < g_view.size(); ++i)
        raw_grad[i] += (g_view[i] - proj * view[i]) / norm;
}

} // namespace detail

inline QueryCore query_core(const ModelState& state, Index r, std::span<const double> hn) {
    switch (state.config.kind) {
        case ModelKind::UniBiO2:
        case ModelKind::UniBiO3: return unibi_query_core(state, r, hn);
        case ModelKind::Cp: return cp_query_core(state, r, hn);
        case ModelKind::Complex: return complex_query_core(state, r, hn);
        case ModelKind::Rescal: return rescal_query_core(state, r, hn);
    }
    fail("unknown model kind");
}

inline void query_core_backward(const ModelState& state, Index r, std::span<const double> hn,
                                const QueryCore& core, std::span<const double> gz,
                                GradientBuffer& grads, std::span<double> ghn) {
    switch (state.config.kind) {
        case ModelKind::UniBiO2:
        case ModelKind::UniBiO3: return unibi_query_core_backward(state, r, hn, core, gz, grads, ghn);
        case ModelKind::Cp: return cp_query_core_backward(state, r, hn, core, gz, grads, ghn);
        case ModelKind::Complex: return complex_query_core_backward(state, r, hn, core, gz, grads, ghn);
        case ModelKind::Rescal: return rescal_query_core_backward(state, r, hn, core, gz, grads, ghn);
    }
    fail("unknown model kind");
}

inline void check_indices(const ModelState& state, Index h, Index r, Index t) {
    require(h >= 0 && h < state.n_entities, "head index out of range: ", h);
    require(r >= 0 && r < state.n_relations, "relation index out of range: ", r);
    require(t >= 0 && t < state.n_entities, "tail index out of range: ", t);
}

inline std::pair<double, ScoreTape> score(const ModelState& state, Index h, Index r, Index t) {
    check_indices(state, h, r, t);
    const bool ec = state.config.entity_constraint;
    ScoreTape tape;
    tape.h = h;
    tape.r = r;
    tape.t = t;
    tape.version = state.version;
    std::tie(tape.hn, tape.h_norm) = detail::entity_view(state.head_entity(h), ec);
    std::tie(tape.tn, tape.t_norm) = detail::entity_view(state.tail_entity(t), ec);
    tape.core = query_core(state, r, tape.hn);
    tape.score = dot(tape.core.z, tape.tn);
    require(std::isfinite(tape.score), "non-finite score for (", h, ", ", r, ", ", t, ")");
    return {tape.score, std::move(tape)};
}

// Gradients of upstream * score with respect to every raw parameter touched
// by the forward pass, accumulated into grads.
inline void score_backward(const ModelState& state, const ScoreTape& tape, double upstream,
                           GradientBuffer& grads) {
    require(tape.version == state.version, "stale score tape: parameters changed since forward");
    const bool ec = state.config.entity_constraint;
    const auto n = static_cast<std::size_t>(state.config.dim);

    std::vector<double> gz(n), gtn(n);
    for (std::size_t i = 0; i < n; ++i) {
        gz[i] = upstream * tape.tn[i];
        gtn[i] = upstream * tape.core.z[i];
    }
    detail::entity_view_backward(gtn, tape.tn, tape.t_norm, ec, grads.tail_entity_row(state, tape.t));

    std::vector<double> ghn(n, 0.0);
    query_core_backward(state, tape.r, tape.hn, tape.core, gz, grads, ghn);
    detail::entity_view_backward(ghn, tape.hn, tape.h_norm, ec, grads.entity_row(state, tape.h));
}

// ---------------------------------------------------------------------------
// All-candidates scoring: fold the head side once, then one dot product per
// candidate tail.

struct AllTailsTape {
    Index h = -1, r = -1;
    std::uint64_t version = 0;
    std::vector<double> hn;
    double h_norm = 1.0;
    QueryCore core;
    std::vector<double> scores;         // one per entity
    std::vector<double> candidate_norms; // raw tail norms, EC only
};

inline AllTailsTape score_all_tails_tape(const ModelState& state, Index h, Index r) {
    check_indices(state, h, r, 0);
    const bool ec = state.config.entity_constraint;
    AllTailsTape tape;
    tape.h = h;
    tape.r = r;
    tape.version = state.version;
    std::tie(tape.hn, tape.h_norm) = detail::entity_view(state.head_entity(h), ec);
    tape.core = query_core(state, r, tape.hn);

    const auto n = static_cast<std::size_t>(state.config.dim);
    tape.scores.resize(static_cast<std::size_t>(state.n_entities));
    if (ec) tape.candidate_norms.resize(static_cast<std::size_t>(state.n_entities));
    const double* z = tape.core.z.data();
    for (Index j = 0; j < state.n_entities; ++j) {
        auto tv = state.tail_entity(j);
        double s = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += z[i] * tv[i];
            norm2 += tv[i] * tv[i];
        }
        if (ec) {
            double nm = std::sqrt(norm2);
            require(nm >= 1e-12, "degenerate entity vector at index ", j);
            tape.candidate_norms[static_cast<std::size_t>(j)] = nm;
            s /= nm;
        }
        tape.scores[static_cast<std::size_t>(j)] = s;
    }
    return tape;
}

inline std::vector<double> score_all_tails(const ModelState& state, Index h, Index r) {
    return score_all_tails_tape(state, h, r).scores;
}

// Backward for sum_j weights[j] * scores[j].
inline void score_all_tails_backward(const ModelState& state, const AllTailsTape& tape,
                                     std::span<const double> weights, GradientBuffer& grads) {
    require(tape.version == state.version, "stale score tape: parameters changed since forward");
    require(weights.size() == tape.scores.size(), "weight vector size mismatch");
    const bool ec = state.config.entity_constraint;
    const auto n = static_cast<std::size_t>(state.config.dim);
    const double* z = tape.core.z.data();

    std::vector<double> gz(n, 0.0);
    for (Index j = 0; j < state.n_entities; ++j) {
        double gj = weights[static_cast<std::size_t>(j)];
        if (gj == 0.0) continue;
        auto tv = state.tail_entity(j);
        auto gout = grads.tail_entity_row(state, j);
        if (ec) {
            double nm = tape.candidate_norms[static_cast<std::size_t>(j)];
            double sj = tape.scores[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < n; ++i) {
                gz[i] += gj * tv[i] / nm;
                gout[i] += gj * (z[i] - sj * tv[i] / nm) / nm;
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                gz[i] += gj * tv[i];
                gout[i] += gj * z[i];
            }
        }
    }
    std::vector<double> ghn(n, 0.0);
    query_core_backward(state, tape.r, tape.hn, tape.core, gz, grads, ghn);
    detail::entity_view_backward(ghn, tape.hn, tape.h_norm, ec, grads.entity_row(state, tape.h));
}

// ---------------------------------------------------------------------------

// Dense n x n matrix M with score(h, r, t) = h^T M t / (||h|| ||t||) under EC
// (plain h^T M t without it); the RC divisor is folded in when RC is on.
inline DenseMatrix effective_matrix(const ModelState& state, Index r) {
    require(r >= 0 && r < state.n_relations, "relation index out of range: ", r);
    if (is_unibi(state.config.kind)) return unibi_effective_matrix(state, r);
    return baseline_effective_matrix(state, r);
}

inline std::vector<double> singular_spectrum(const ModelState& state, Index r) {
    require(r >= 0 && r < state.n_relations, "relation index out of range: ", r);
    if (is_unibi(state.config.kind)) return unibi_singular_spectrum(state, r);
    return baseline_singular_spectrum(state, r);
}

} // namespace unibi
