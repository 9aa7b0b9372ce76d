#pragma once

// Adam with bias correction over the raw parameter buffers. Entity rows that
// collapse below the degeneracy threshold after an update are re-randomized
// deterministically.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "unibi/common.hpp"
#include "unibi/model.hpp"

namespace unibi {

struct AdamState {
    GradientBuffer m; // first moments
    GradientBuffer v; // second moments
    std::int64_t step = 0;

    static AdamState like(const ModelState& state) {
        return {GradientBuffer::like(state), GradientBuffer::like(state), 0};
    }
};

namespace detail {

inline void check_finite(std::span<const double> g, const char* group) {
    for (double x : g)
        require(std::isfinite(x), "non-finite gradient in parameter group \"", group, "\"");
}

inline void adam_update(std::span<double> params, std::span<const double> grads,
                        std::span<double> m, std::span<double> v, double lr, double beta1,
                        double beta2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
        params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

inline void rerandomize_degenerate_rows(ModelState& state, std::vector<double>& table) {
    const auto dim = static_cast<std::size_t>(state.config.dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(state.config.dim));
    for (std::size_t row = 0; row * dim < table.size(); ++row) {
        double n2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) n2 += table[row * dim + i] * table[row * dim + i];
        if (std::sqrt(n2) >= 1e-12) continue;
        std::mt19937_64 rng(fnv1a64("reseed", state.rng_seed ^ state.version) ^ row);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t i = 0; i < dim; ++i) table[row * dim + i] = normal(rng) * scale;
        log_warn("re-randomized degenerate entity row ", row);
    }
}

} // namespace detail

inline void adam_step(AdamState& adam, ModelState& state, const GradientBuffer& grads, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    require(grads.entities.size() == state.entities.primary.size() &&
                grads.entities_tail.size() == state.entities.tail_role.size() &&
                grads.rel_params.size() == state.rel_params.size(),
            "gradient buffer shape does not match model state");
    detail::check_finite(grads.entities, "entities");
    detail::check_finite(grads.entities_tail, "entities_tail");
    detail::check_finite(grads.rel_params, "relations");

    adam.step += 1;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
    detail::adam_update(state.entities.primary, grads.entities, adam.m.entities, adam.v.entities,
                        lr, beta1, beta2, eps, bc1, bc2);
    detail::adam_update(state.entities.tail_role, grads.entities_tail, adam.m.entities_tail,
                        adam.v.entities_tail, lr, beta1, beta2, eps, bc1, bc2);
    detail::adam_update(state.rel_params, grads.rel_params, adam.m.rel_params, adam.v.rel_params,
                        lr, beta1, beta2, eps, bc1, bc2);

    detail::rerandomize_degenerate_rows(state, state.entities.primary);
    detail::rerandomize_degenerate_rows(state, state.entities.tail_role);
    state.version += 1;
}

} // namespace unibi
