#pragma once

// Training objective pieces: the gamma-scaled full-softmax cross entropy and
// the four-weight duality-induced regularizer (DURA-G). Classic DURA is the
// grouped special case lambda1 = lambda2, lambda3 = lambda4.

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "unibi/common.hpp"
#include "unibi/scoring.hpp"

namespace unibi {

// loss = -log softmax(gamma * scores)[target]; gradient w.r.t. scores.
inline std::pair<double, std::vector<double>> cross_entropy_loss(std::span<const double> scores,
                                                                 Index target, double gamma) {
    require(!scores.empty(), "cross_entropy_loss: empty score vector");
    require(target >= 0 && static_cast<std::size_t>(target) < scores.size(),
            "cross_entropy_loss: target out of range");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double s : scores) {
        require(std::isfinite(s), "cross_entropy_loss: non-finite score");
        max_logit = std::max(max_logit, gamma * s);
    }
    double z = 0.0;
    std::vector<double> grad(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        grad[i] = std::exp(gamma * scores[i] - max_logit); // unnormalized probabilities
        z += grad[i];
    }
    double loss = std::log(z) - (gamma * scores[static_cast<std::size_t>(target)] - max_logit);
    for (std::size_t i = 0; i < scores.size(); ++i) grad[i] = gamma * grad[i] / z;
    grad[static_cast<std::size_t>(target)] -= gamma;
    return {loss, std::move(grad)};
}

// DURA-G: l1 ||h||^2 + l2 ||t||^2 + l3 ||R^T h||^2 + l4 ||R t||^2, where R is
// the model's effective transform (RC divisor folded in when RC is on) and
// the entity vectors enter exactly as the score uses them (normalized under
// EC, raw otherwise). Gradients of upstream * reg are accumulated into grads
// when given.
inline double dura_g(const ModelState& state, Index h, Index r, Index t,
                     const std::array<double, 4>& lambda, GradientBuffer* grads = nullptr,
                     double upstream = 1.0) {
    check_indices(state, h, r, t);
    const bool ec = state.config.entity_constraint;
    const bool rc = state.config.relation_constraint;
    const auto n = static_cast<std::size_t>(state.config.dim);
    const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2], l4 = lambda[3];

    auto [hn, h_norm] = detail::entity_view(state.head_entity(h), ec);
    auto [tn, t_norm] = detail::entity_view(state.tail_entity(t), ec);
    double reg = l1 * dot(hn, hn) + l2 * dot(tn, tn);

    std::vector<double> ghn(n, 0.0), gtn(n, 0.0);
    if (grads) {
        for (std::size_t i = 0; i < n; ++i) {
            ghn[i] = upstream * 2.0 * l1 * hn[i];
            gtn[i] = upstream * 2.0 * l2 * tn[i];
        }
    }

    switch (state.config.kind) {
        case ModelKind::UniBiO2:
        case ModelKind::UniBiO3: {
            const int k = state.config.block_size();
            auto xi = state.xi(r);
            std::vector<double> a(n), b(n), head_norms, tail_norms;
            detail::apply_blocks_raw(state.head_block_params(r), k, hn, a, true, head_norms);
            detail::apply_blocks_raw(state.tail_block_params(r), k, tn, b, false, tail_norms);
            int am = detail::abs_argmax(xi);
            double m = rc ? std::abs(xi[static_cast<std::size_t>(am)]) : 1.0;
            require(m > 0.0, "relation ", r, ": xi is identically zero");
            double m2 = m * m;
            // Orthogonal block factors preserve norms: ||R^T h|| = ||Xi a|| / m.
            double sa = 0.0, sb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sa += xi[i] * xi[i] * a[i] * a[i];
                sb += xi[i] * xi[i] * b[i] * b[i];
            }
            reg += (l3 * sa + l4 * sb) / m2;
            if (grads) {
                auto grel = grads->relation(state, r);
                auto ghead = grel.subspan(0, n);
                auto gtail = grel.subspan(n, n);
                auto gxi = grel.subspan(2 * n, n);
                std::vector<double> ga(n), gb(n);
                for (std::size_t i = 0; i < n; ++i) {
                    ga[i] = upstream * 2.0 * l3 * xi[i] * xi[i] * a[i] / m2;
                    gb[i] = upstream * 2.0 * l4 * xi[i] * xi[i] * b[i] / m2;
                    gxi[i] += upstream * 2.0 * xi[i] * (l3 * a[i] * a[i] + l4 * b[i] * b[i]) / m2;
                }
                if (rc) {
                    double sign = xi[static_cast<std::size_t>(am)] < 0.0 ? -1.0 : 1.0;
                    gxi[static_cast<std::size_t>(am)] +=
                        upstream * sign * (-2.0) * (l3 * sa + l4 * sb) / (m2 * m);
                }
                std::vector<double> ghn2(n, 0.0), gtn2(n, 0.0);
                detail::apply_blocks_raw_backward(state.head_block_params(r), k, hn, ga, true,
                                                  head_norms, ghn2, ghead);
                detail::apply_blocks_raw_backward(state.tail_block_params(r), k, tn, gb, false,
                                                  tail_norms, gtn2, gtail);
                for (std::size_t i = 0; i < n; ++i) {
                    ghn[i] += ghn2[i];
                    gtn[i] += gtn2[i];
                }
            }
            break;
        }
        case ModelKind::Cp: {
            auto rel = state.relation(r);
            int am = detail::abs_argmax(rel);
            double m = rc ? std::abs(rel[static_cast<std::size_t>(am)]) : 1.0;
            require(m > 0.0, "relation ", r, ": diagonal is identically zero");
            double m2 = m * m;
            double sa = 0.0, sb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sa += rel[i] * rel[i] * hn[i] * hn[i];
                sb += rel[i] * rel[i] * tn[i] * tn[i];
            }
            reg += (l3 * sa + l4 * sb) / m2;
            if (grads) {
                auto grel = grads->relation(state, r);
                for (std::size_t i = 0; i < n; ++i) {
                    ghn[i] += upstream * 2.0 * l3 * rel[i] * rel[i] * hn[i] / m2;
                    gtn[i] += upstream * 2.0 * l4 * rel[i] * rel[i] * tn[i] / m2;
                    grel[i] += upstream * 2.0 * rel[i] * (l3 * hn[i] * hn[i] + l4 * tn[i] * tn[i]) / m2;
                }
                if (rc) {
                    double sign = rel[static_cast<std::size_t>(am)] < 0.0 ? -1.0 : 1.0;
                    grel[static_cast<std::size_t>(am)] +=
                        upstream * sign * (-2.0) * (l3 * sa + l4 * sb) / (m2 * m);
                }
            }
            break;
        }
        case ModelKind::Complex: {
            auto rel = state.relation(r);
            int am = 0;
            double m = 1.0;
            if (rc) {
                double best = -1.0;
                for (std::size_t j = 0; 2 * j < n; ++j) {
                    double mod = std::hypot(rel[2 * j], rel[2 * j + 1]);
                    if (mod > best) {
                        best = mod;
                        am = static_cast<int>(j);
                    }
                }
                require(best > 0.0, "relation ", r, ": all complex moduli are zero");
                m = best;
            }
            double m2 = m * m;
            double sa = 0.0, sb = 0.0;
            for (std::size_t j = 0; 2 * j < n; ++j) {
                double mod2 = rel[2 * j] * rel[2 * j] + rel[2 * j + 1] * rel[2 * j + 1];
                sa += mod2 * (hn[2 * j] * hn[2 * j] + hn[2 * j + 1] * hn[2 * j + 1]);
                sb += mod2 * (tn[2 * j] * tn[2 * j] + tn[2 * j + 1] * tn[2 * j + 1]);
            }
            reg += (l3 * sa + l4 * sb) / m2;
            if (grads) {
                auto grel = grads->relation(state, r);
                for (std::size_t j = 0; 2 * j < n; ++j) {
                    double mod2 = rel[2 * j] * rel[2 * j] + rel[2 * j + 1] * rel[2 * j + 1];
                    double hb = hn[2 * j] * hn[2 * j] + hn[2 * j + 1] * hn[2 * j + 1];
                    double tb = tn[2 * j] * tn[2 * j] + tn[2 * j + 1] * tn[2 * j + 1];
                    ghn[2 * j] += upstream * 2.0 * l3 * mod2 * hn[2 * j] / m2;
                    ghn[2 * j + 1] += upstream * 2.0 * l3 * mod2 * hn[2 * j + 1] / m2;
                    gtn[2 * j] += upstream * 2.0 * l4 * mod2 * tn[2 * j] / m2;
                    gtn[2 * j + 1] += upstream * 2.0 * l4 * mod2 * tn[2 * j + 1] / m2;
                    grel[2 * j] += upstream * 2.0 * rel[2 * j] * (l3 * hb + l4 * tb) / m2;
                    grel[2 * j + 1] += upstream * 2.0 * rel[2 * j + 1] * (l3 * hb + l4 * tb) / m2;
                }
                if (rc) {
                    auto k0 = static_cast<std::size_t>(2 * am), k1 = k0 + 1;
                    double gdiv = upstream * (-2.0) * (l3 * sa + l4 * sb) / (m2 * m);
                    grel[k0] += gdiv * rel[k0] / m;
                    grel[k1] += gdiv * rel[k1] / m;
                }
            }
            break;
        }
        case ModelKind::Rescal: {
            DenseMatrix mat = rescal_matrix(state, r);
            double m = 1.0;
            TopSingularPair top;
            if (rc) {
                top = top_singular_pair(mat);
                require(top.sigma > 1e-12, "relation ", r, ": spectral radius vanished");
                m = top.sigma;
            }
            double m2 = m * m;
            std::vector<double> v = matvec(transpose(mat), hn); // R^T h
            std::vector<double> w = matvec(mat, tn);            // R t
            double sv = dot(v, v), sw = dot(w, w);
            reg += (l3 * sv + l4 * sw) / m2;
            if (grads) {
                auto grel = grads->relation(state, r);
                std::vector<double> mv = matvec(mat, v);             // M M^T h
                std::vector<double> mtw = matvec(transpose(mat), w); // M^T M t
                for (std::size_t i = 0; i < n; ++i) {
                    ghn[i] += upstream * 2.0 * l3 * mv[i] / m2;
                    gtn[i] += upstream * 2.0 * l4 * mtw[i] / m2;
                }
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        grel[i * n + j] += upstream * 2.0 * (l3 * hn[i] * v[j] + l4 * w[i] * tn[j]) / m2;
                if (rc) {
                    double gdiv = upstream * (-2.0) * (l3 * sv + l4 * sw) / (m2 * m);
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < n; ++j)
                            grel[i * n + j] += gdiv * top.u[i] * top.v[j];
                }
            }
            break;
        }
    }

    if (grads) {
        detail::entity_view_backward(ghn, hn, h_norm, ec, grads->entity_row(state, h));
        detail::entity_view_backward(gtn, tn, t_norm, ec, grads->tail_entity_row(state, t));
    }
    return reg;
}

} // namespace unibi
