#pragma once

// Bilinear baselines under the shared query-core interface: CP (two entity
// tables, diagonal relation), ComplEx (2x2 rotation-scaling blocks), and
// RESCAL (full matrix). These models ignore EC/RC by default; when the flags
// are set (constraint-mixing ablations) EC normalizes their entity vectors
// and RC divides by the spectral radius of the relation.

#include <cmath>
#include <span>
#include <vector>

#include "unibi/common.hpp"
#include "unibi/linalg.hpp"
#include "unibi/model.hpp"

namespace unibi {

// ----------------------------------------------------------------- CP ------

inline QueryCore cp_query_core(const ModelState& state, Index r, std::span<const double> hn) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    QueryCore core;
    core.z.resize(static_cast<std::size_t>(n));
    core.argmax = detail::abs_argmax(rel);
    core.divisor = 1.0;
    if (state.config.relation_constraint) {
        core.divisor = std::abs(rel[static_cast<std::size_t>(core.argmax)]);
        require(core.divisor > 0.0, "relation ", r, ": diagonal is identically zero");
    }
    for (int i = 0; i < n; ++i)
        core.z[static_cast<std::size_t>(i)] = hn[static_cast<std::size_t>(i)] * rel[static_cast<std::size_t>(i)] / core.divisor;
    return core;
}

inline void cp_query_core_backward(const ModelState& state, Index r, std::span<const double> hn,
                                   const QueryCore& core, std::span<const double> gz,
                                   GradientBuffer& grads, std::span<double> ghn) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    auto grel = grads.relation(state, r);
    for (int i = 0; i < n; ++i) {
        auto si = static_cast<std::size_t>(i);
        ghn[si] = gz[si] * rel[si] / core.divisor;
        grel[si] += gz[si] * hn[si] / core.divisor;
    }
    if (state.config.relation_constraint) {
        double gdiv = -dot(gz, core.z) / core.divisor;
        double sign = rel[static_cast<std::size_t>(core.argmax)] < 0.0 ? -1.0 : 1.0;
        grel[static_cast<std::size_t>(core.argmax)] += sign * gdiv;
    }
}

// ------------------------------------------------------------- ComplEx -----

// Block j of the effective matrix is [[re, im], [-im, re]], which realizes
// Re<h, rel, conj(t)> on interleaved (re, im) coordinates.
inline QueryCore complex_query_core(const ModelState& state, Index r, std::span<const double> hn) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    QueryCore core;
    core.z.resize(static_cast<std::size_t>(n));
    core.argmax = 0;
    core.divisor = 1.0;
    if (state.config.relation_constraint) {
        double best = -1.0;
        for (int j = 0; j * 2 < n; ++j) {
            double mod = std::hypot(rel[static_cast<std::size_t>(2 * j)], rel[static_cast<std::size_t>(2 * j + 1)]);
            if (mod > best) {
                best = mod;
                core.argmax = j;
            }
        }
        require(best > 0.0, "relation ", r, ": all complex moduli are zero");
        core.divisor = best;
    }
    for (int j = 0; j * 2 < n; ++j) {
        double re = rel[static_cast<std::size_t>(2 * j)], im = rel[static_cast<std::size_t>(2 * j + 1)];
        double x1 = hn[static_cast<std::size_t>(2 * j)], x2 = hn[static_cast<std::size_t>(2 * j + 1)];
        core.z[static_cast<std::size_t>(2 * j)] = (re * x1 - im * x2) / core.divisor;
        core.z[static_cast<std::size_t>(2 * j + 1)] = (re * x2 + im * x1) / core.divisor;
    }
    return core;
}

inline void complex_query_core_backward(const ModelState& state, Index r, std::span<const double> hn,
                                        const QueryCore& core, std::span<const double> gz,
                                        GradientBuffer& grads, std::span<double> ghn) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    auto grel = grads.relation(state, r);
    for (int j = 0; j * 2 < n; ++j) {
        auto j0 = static_cast<std::size_t>(2 * j), j1 = static_cast<std::size_t>(2 * j + 1);
        double re = rel[j0], im = rel[j1];
        double x1 = hn[j0], x2 = hn[j1];
        double g1 = gz[j0] / core.divisor, g2 = gz[j1] / core.divisor;
        ghn[j0] = g1 * re + g2 * im;
        ghn[j1] = -g1 * im + g2 * re;
        grel[j0] += g1 * x1 + g2 * x2;
        grel[j1] += -g1 * x2 + g2 * x1;
    }
    if (state.config.relation_constraint) {
        double gdiv = -dot(gz, core.z) / core.divisor;
        auto k0 = static_cast<std::size_t>(2 * core.argmax), k1 = k0 + 1;
        grel[k0] += gdiv * rel[k0] / core.divisor;
        grel[k1] += gdiv * rel[k1] / core.divisor;
    }
}

// -------------------------------------------------------------- RESCAL -----

inline DenseMatrix rescal_matrix(const ModelState& state, Index r) {
    const int n = state.config.dim;
    DenseMatrix m(n, n);
    auto rel = state.relation(r);
    std::copy(rel.begin(), rel.end(), m.data.begin());
    return m;
}

inline QueryCore rescal_query_core(const ModelState& state, Index r, std::span<const double> hn) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    QueryCore core;
    core.z.assign(static_cast<std::size_t>(n), 0.0);
    core.divisor = 1.0;
    if (state.config.relation_constraint) {
        auto top = top_singular_pair(rescal_matrix(state, r));
        require(top.sigma > 1e-12, "relation ", r, ": spectral radius vanished");
        core.divisor = top.sigma;
        core.u1 = std::move(top.u);
        core.v1 = std::move(top.v);
    }
    // z = M^T hn / divisor.
    for (int i = 0; i < n; ++i) {
        double hi = hn[static_cast<std::size_t>(i)];
        if (hi == 0.0) continue;
        const double* row = rel.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) core.z[static_cast<std::size_t>(j)] += hi * row[j];
    }
    if (core.divisor != 1.0)
        for (double& v : core.z) v /= core.divisor;
    return core;
}

inline void rescal_query_core_backward(const ModelState& state, Index r, std::span<const double> hn,
                                       const QueryCore& core, std::span<const double> gz,
                                       GradientBuffer& grads, std::span<double> ghn) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    auto grel = grads.relation(state, r);
    // ghn = M gz / divisor, gM += hn gz^T / divisor.
    for (int i = 0; i < n; ++i) {
        auto si = static_cast<std::size_t>(i);
        const double* row = rel.data() + si * n;
        double* grow = grel.data() + si * n;
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            s += row[j] * gz[static_cast<std::size_t>(j)];
            grow[j] += hn[si] * gz[static_cast<std::size_t>(j)] / core.divisor;
        }
        ghn[si] = s / core.divisor;
    }
    if (state.config.relation_constraint) {
        double gdiv = -dot(gz, core.z) / core.divisor;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                grel[static_cast<std::size_t>(i) * n + j] +=
                    gdiv * core.u1[static_cast<std::size_t>(i)] * core.v1[static_cast<std::size_t>(j)];
    }
}

// ---------------------------------------------------------------------------

inline DenseMatrix baseline_effective_matrix(const ModelState& state, Index r) {
    const int n = state.config.dim;
    DenseMatrix m(n, n);
    auto rel = state.relation(r);
    double divisor = 1.0;
    switch (state.config.kind) {
        case ModelKind::Cp:
            for (int i = 0; i < n; ++i) m.at(i, i) = rel[static_cast<std::size_t>(i)];
            if (state.config.relation_constraint)
                divisor = std::abs(rel[static_cast<std::size_t>(detail::abs_argmax(rel))]);
            break;
        case ModelKind::Complex: {
            double max_mod = 0.0;
            for (int j = 0; j * 2 < n; ++j) {
                double re = rel[static_cast<std::size_t>(2 * j)], im = rel[static_cast<std::size_t>(2 * j + 1)];
                m.at(2 * j, 2 * j) = re;
                m.at(2 * j, 2 * j + 1) = im;
                m.at(2 * j + 1, 2 * j) = -im;
                m.at(2 * j + 1, 2 * j + 1) = re;
                max_mod = std::max(max_mod, std::hypot(re, im));
            }
            if (state.config.relation_constraint) divisor = max_mod;
            break;
        }
        case ModelKind::Rescal:
            std::copy(rel.begin(), rel.end(), m.data.begin());
            if (state.config.relation_constraint) divisor = top_singular_pair(m).sigma;
            break;
        default:
            fail("baseline_effective_matrix: not a baseline kind");
    }
    if (state.config.relation_constraint) {
        require(divisor > 0.0, "relation ", r, ": degenerate spectral radius");
        for (double& v : m.data) v /= divisor;
    }
    return m;
}

inline std::vector<double> baseline_singular_spectrum(const ModelState& state, Index r) {
    const int n = state.config.dim;
    auto rel = state.relation(r);
    std::vector<double> s;
    switch (state.config.kind) {
        case ModelKind::Cp:
            s.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = std::abs(rel[static_cast<std::size_t>(i)]);
            break;
        case ModelKind::Complex:
            for (int j = 0; j * 2 < n; ++j) {
                double mod = std::hypot(rel[static_cast<std::size_t>(2 * j)], rel[static_cast<std::size_t>(2 * j + 1)]);
                s.push_back(mod);
                s.push_back(mod);
            }
            break;
        case ModelKind::Rescal:
            s = jacobi_svd(rescal_matrix(state, r)).sigma;
            break;
        default:
            fail("baseline_singular_spectrum: not a baseline kind");
    }
    std::sort(s.begin(), s.end(), std::greater<>());
    if (state.config.relation_constraint && s[0] > 0.0) {
        double d = s[0];
        for (double& v : s) v /= d;
    }
    return s;
}

} // namespace unibi
