#pragma once

// UniBi scoring core. A relation is parameterized as two block-diagonal
// rotations around a signed diagonal: head blocks, tail blocks, and xi. The
// constrained score divides by the entity norms (EC) and by |xi_max| (RC),
// which pins the spectral radius of the effective matrix to 1.
//
// The head side of a query is folded once into a vector z so that
// score(h, r, t) = dot(z, tail view of t); the same core serves pointwise
// scoring, scoring against every candidate, and the backward pass.

#include <cmath>
#include <span>
#include <vector>

#include "unibi/common.hpp"
#include "unibi/linalg.hpp"
#include "unibi/model.hpp"

namespace unibi {

inline QueryCore unibi_query_core(const ModelState& state, Index r, std::span<const double> hn) {
    const int n = state.config.dim;
    const int k = state.config.block_size();
    auto xi = state.xi(r);

    QueryCore core;
    core.a.resize(static_cast<std::size_t>(n));
    core.w.resize(static_cast<std::size_t>(n));
    core.z.resize(static_cast<std::size_t>(n));

    detail::apply_blocks_raw(state.head_block_params(r), k, hn, core.a, /*transposed=*/true,
                             core.head_norms);
    core.argmax = detail::abs_argmax(xi);
    core.divisor = 1.0;
    if (state.config.relation_constraint) {
        core.divisor = std::abs(xi[static_cast<std::size_t>(core.argmax)]);
        require(core.divisor > 0.0, "relation ", r, ": xi is identically zero");
    }
    for (int i = 0; i < n; ++i)
        core.w[static_cast<std::size_t>(i)] = xi[static_cast<std::size_t>(i)] * core.a[static_cast<std::size_t>(i)];
    detail::apply_blocks_raw(state.tail_block_params(r), k, core.w, core.z, /*transposed=*/true,
                             core.tail_norms);
    if (core.divisor != 1.0)
        for (double& v : core.z) v /= core.divisor;
    return core;
}

// Accumulates relation gradients for upstream dL/dz and writes dL/dhn.
inline void unibi_query_core_backward(const ModelState& state, Index r, std::span<const double> hn,
                                      const QueryCore& core, std::span<const double> gz,
                                      GradientBuffer& grads, std::span<double> ghn) {
    const int n = state.config.dim;
    const int k = state.config.block_size();
    auto xi = state.xi(r);
    auto grel = grads.relation(state, r);
    auto ghead = grel.subspan(0, static_cast<std::size_t>(n));
    auto gtail = grel.subspan(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    auto gxi = grel.subspan(2 * static_cast<std::size_t>(n), static_cast<std::size_t>(n));

    // z = R_t^T w / divisor.
    std::vector<double> gz_scaled(gz.begin(), gz.end());
    if (core.divisor != 1.0)
        for (double& v : gz_scaled) v /= core.divisor;
    std::vector<double> gw(static_cast<std::size_t>(n), 0.0);
    detail::apply_blocks_raw_backward(state.tail_block_params(r), k, core.w, gz_scaled,
                                      /*transposed=*/true, core.tail_norms, gw, gtail);

    std::vector<double> ga(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        gxi[static_cast<std::size_t>(i)] += gw[static_cast<std::size_t>(i)] * core.a[static_cast<std::size_t>(i)];
        ga[static_cast<std::size_t>(i)] = gw[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(i)];
    }
    if (state.config.relation_constraint) {
        // d/d divisor, attributed to the argmax coordinate of xi.
        double gdiv = -dot(gz, core.z) / core.divisor;
        double sign = xi[static_cast<std::size_t>(core.argmax)] < 0.0 ? -1.0 : 1.0;
        gxi[static_cast<std::size_t>(core.argmax)] += sign * gdiv;
    }
    std::fill(ghn.begin(), ghn.end(), 0.0);
    detail::apply_blocks_raw_backward(state.head_block_params(r), k, hn, ga, /*transposed=*/true,
                                      core.head_norms, ghn, ghead);
}

inline DenseMatrix unibi_effective_matrix(const ModelState& state, Index r) {
    const int n = state.config.dim;
    const int k = state.config.block_size();
    auto xi = state.xi(r);
    auto head = state.head_block_params(r);
    auto tail = state.tail_block_params(r);

    auto block_diag = [&](std::span<const double> raw) {
        DenseMatrix m(n, n);
        double unit[4], dense[16];
        for (int b = 0; b * k < n; ++b) {
            detail::normalized_block(raw.data() + b * k, k, unit);
            rot::build(k, unit, dense);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) m.at(b * k + i, b * k + j) = dense[i * k + j];
        }
        return m;
    };
    DenseMatrix rh = block_diag(head);
    DenseMatrix rt = block_diag(tail);
    for (int i = 0; i < n; ++i) // fold xi into the rows of R_t
        for (int j = 0; j < n; ++j) rt.at(i, j) *= xi[static_cast<std::size_t>(i)];
    DenseMatrix m = matmul(rh, rt);
    if (state.config.relation_constraint) {
        double d = std::abs(xi[static_cast<std::size_t>(detail::abs_argmax(xi))]);
        require(d > 0.0, "relation ", r, ": xi is identically zero");
        for (double& v : m.data) v /= d;
    }
    return m;
}

// Orthogonal factors drop out: the spectrum is just the sorted |xi|.
inline std::vector<double> unibi_singular_spectrum(const ModelState& state, Index r) {
    auto xi = state.xi(r);
    std::vector<double> s(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) s[i] = std::abs(xi[i]);
    std::sort(s.begin(), s.end(), std::greater<>());
    if (state.config.relation_constraint && s[0] > 0.0) {
        double d = s[0];
        for (double& v : s) v /= d;
    }
    return s;
}

} // namespace unibi
