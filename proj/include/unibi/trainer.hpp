#pragma once

// Epoch loop: full-softmax cross entropy over every candidate tail (scaled by
// gamma), optional DURA-G regularization, Adam updates per minibatch, early
// stopping on filtered validation MRR. Head queries are covered by the
// reciprocal relations, so training is tail prediction only.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

#include "unibi/adam.hpp"
#include "unibi/common.hpp"
#include "unibi/evaluator.hpp"
#include "unibi/kg.hpp"
#include "unibi/loss.hpp"
#include "unibi/scoring.hpp"

namespace unibi {

struct TrainConfig {
    double gamma = 1.0;                    // softmax scale, >= 1
    double reg_weight = 0.0;               // lambda
    std::array<double, 4> dura{1, 1, 1, 1}; // lambda1..lambda4
    double learning_rate = 1e-3;
    int batch_size = 100;
    int max_epochs = 200;
    int eval_every = 5;
    int patience = 10;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;

    void validate() const {
        require(gamma >= 1.0, "gamma must be >= 1, got ", gamma);
        require(reg_weight >= 0.0, "reg weight must be >= 0");
        for (double l : dura) require(l >= 0.0, "dura weights must be >= 0");
        require(batch_size > 0 && max_epochs > 0 && eval_every > 0 && patience > 0,
                "batch_size, max_epochs, eval_every and patience must be positive");
    }
};

struct TrackedRelation {
    Index relation = -1;
    double spectral_radius = 0.0;
    double delta = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;     // mean per-triple CE + lambda * reg
    double reg = 0.0;      // mean per-triple regularizer value
    double valid_mrr = std::numeric_limits<double>::quiet_NaN(); // NaN when not evaluated
    std::vector<TrackedRelation> tracked;
    double wall_seconds = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_valid_mrr = std::numeric_limits<double>::quiet_NaN();
};

struct TrainHooks {
    std::vector<Index> track_relations;
    // Called after each epoch's record is assembled, before early stopping.
    std::function<void(int epoch, const ModelState&, EpochRecord&)> on_epoch;
};

inline void write_train_trace_csv(std::ostream& out, const TrainTrace& trace, const Vocab& vocab) {
    out << "epoch,loss,valid_mrr,rel_name,spectral_radius,delta\n";
    for (const EpochRecord& rec : trace.epochs) {
        auto prefix = [&](std::ostream& o) -> std::ostream& {
            o << rec.epoch << ',' << csv_double(rec.loss) << ',';
            if (std::isnan(rec.valid_mrr))
                o << "";
            else
                o << csv_double(rec.valid_mrr);
            return o;
        };
        if (rec.tracked.empty()) {
            prefix(out) << ",,,\n";
            continue;
        }
        for (const TrackedRelation& tr : rec.tracked)
            prefix(out) << ',' << vocab.relation_name(tr.relation) << ','
                        << csv_double(tr.spectral_radius) << ',' << csv_double(tr.delta) << '\n';
    }
}

inline std::pair<ModelState, TrainTrace> fit(ModelState state, const Dataset& dataset,
                                             const TrainConfig& config, const TrainHooks& hooks = {}) {
    config.validate();
    require(dataset.reciprocal_applied,
            "fit requires a reciprocal-augmented dataset (tail prediction only)");
    require(!dataset.train.empty(), "fit: empty training split");
    require(state.n_entities == dataset.vocab.n_entities() &&
                state.n_relations == dataset.vocab.n_relations(),
            "model state does not match dataset vocabulary");

    FilterIndex filter = build_filter_index(dataset);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(dataset.train.size());
    std::iota(order.begin(), order.end(), 0);

    AdamState adam = AdamState::like(state);
    GradientBuffer grads = GradientBuffer::like(state);
    TrainTrace trace;
    ModelState best_state = state;
    double best_mrr = -std::numeric_limits<double>::infinity();
    int stale_evals = 0;
    const bool has_valid = !dataset.valid.empty();
    const double lambda = config.reg_weight;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0, reg_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            double inv_b = 1.0 / static_cast<double>(stop - start);
            grads.zero();
            for (std::size_t i = start; i < stop; ++i) {
                const Triple& trip = dataset.train[order[i]];
                try {
                    AllTailsTape tape = score_all_tails_tape(state, trip.head, trip.relation);
                    auto [ce, g] = cross_entropy_loss(tape.scores, trip.tail, config.gamma);
                    for (double& v : g) v *= inv_b;
                    score_all_tails_backward(state, tape, g, grads);
                    double reg = 0.0;
                    if (lambda > 0.0)
                        reg = dura_g(state, trip.head, trip.relation, trip.tail, config.dura,
                                     &grads, lambda * inv_b);
                    loss_sum += ce + lambda * reg;
                    reg_sum += reg;
                } catch (const Error& e) {
                    fail("epoch ", epoch, ", triple (", trip.head, ", ", trip.relation, ", ",
                         trip.tail, "): ", e.what());
                }
            }
            adam_step(adam, state, grads, config.learning_rate, config.adam_beta1,
                      config.adam_beta2, config.adam_eps);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / static_cast<double>(order.size());
        rec.reg = reg_sum / static_cast<double>(order.size());
        for (Index r : hooks.track_relations) {
            auto spectrum = singular_spectrum(state, r);
            rec.tracked.push_back({r, spectral_radius(spectrum), imbalance_degree(spectrum)});
        }

        bool eval_now = has_valid && (epoch % config.eval_every == 0 || epoch == config.max_epochs);
        if (eval_now) rec.valid_mrr = evaluate(state, dataset.valid, filter).mrr;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (hooks.on_epoch) hooks.on_epoch(epoch, state, rec);
        trace.epochs.push_back(rec);
        log_debug("epoch ", epoch, " loss ", rec.loss,
                  eval_now ? " valid_mrr " + std::to_string(rec.valid_mrr) : "");

        if (eval_now) {
            if (rec.valid_mrr > best_mrr) {
                best_mrr = rec.valid_mrr;
                best_state = state;
                trace.best_epoch = epoch;
                stale_evals = 0;
            } else {
                ++stale_evals;
                if (stale_evals >= config.patience) {
                    log_info("early stop at epoch ", epoch, " (", stale_evals,
                             " evaluations without improvement)");
                    break;
                }
            }
        }
    }

    if (!has_valid || trace.best_epoch < 0) {
        best_state = state; // nothing to select on; return the final parameters
        trace.best_epoch = trace.epochs.empty() ? 0 : trace.epochs.back().epoch;
    }
    if (std::isfinite(best_mrr)) trace.best_valid_mrr = best_mrr;
    return {std::move(best_state), std::move(trace)};
}

} // namespace unibi
