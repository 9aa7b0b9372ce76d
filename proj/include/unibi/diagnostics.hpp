#pragma once

// Analysis instruments: spectrum imbalance, identity-matrix convergence
// errors, imbalance-vs-complexity reports, and constructive verifiers for the
// boundedness, self-score dichotomy, and necessary-condition statements.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "unibi/common.hpp"
#include "unibi/kg.hpp"
#include "unibi/linalg.hpp"
#include "unibi/scoring.hpp"
#include "unibi/trainer.hpp"

namespace unibi {

// Relative Frobenius distance between two effective matrices, ||A - B||_F / sqrt(n).
inline double identity_error(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows == b.rows && a.cols == b.cols, "identity_error: dimension mismatch (", a.rows,
            "x", a.cols, " vs ", b.rows, "x", b.cols, ")");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        sum += d * d;
    }
    return std::sqrt(sum) / std::sqrt(static_cast<double>(a.rows));
}

inline double identity_error(const ModelState& state_a, Index ra, const ModelState& state_b, Index rb) {
    return identity_error(effective_matrix(state_a, ra), effective_matrix(state_b, rb));
}

// Distance of a relation's effective matrix to the identity matrix.
inline double identity_error_to_identity(const ModelState& state, Index r) {
    DenseMatrix m = effective_matrix(state, r);
    return identity_error(m, DenseMatrix::identity(m.rows));
}

// ---------------------------------------------------------------------------
// Imbalance-vs-complexity report.

struct ComplexityRow {
    Index relation = -1;
    double delta_r = 0.0;
    double delta_rprime = std::numeric_limits<double>::quiet_NaN();
    double hptr = 1.0;
    double tphr = 1.0;
    double complexity = 2.0;
};

struct ComplexityReport {
    std::vector<ComplexityRow> rows;
    double spearman = std::numeric_limits<double>::quiet_NaN();
    bool spearman_defined = false;
};

// Spearman rank correlation with average ranks for ties; undefined (nullopt)
// when either variable has no variance or fewer than two points exist.
inline std::optional<double> spearman_correlation(std::span<const double> x,
                                                  std::span<const double> y) {
    require(x.size() == y.size(), "spearman: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

// One row per original relation with training triples: spectrum imbalance of
// the relation and of its reciprocal, and train-split complexity.
inline ComplexityReport complexity_report(const ModelState& state, const Dataset& dataset) {
    auto stats = relation_stats(dataset.train, dataset.vocab);
    std::vector<const RelationStats*> by_rel(static_cast<std::size_t>(dataset.vocab.n_relations()), nullptr);
    for (const auto& st : stats) by_rel[static_cast<std::size_t>(st.relation)] = &st;

    ComplexityReport report;
    const Index step = dataset.reciprocal_applied ? 2 : 1;
    for (Index r = 0; r < dataset.vocab.n_relations(); r += step) {
        const RelationStats* st = by_rel[static_cast<std::size_t>(r)];
        if (!st) continue;
        ComplexityRow row;
        row.relation = r;
        row.delta_r = imbalance_degree(singular_spectrum(state, r));
        if (dataset.reciprocal_applied)
            row.delta_rprime = imbalance_degree(singular_spectrum(state, r + 1));
        row.hptr = st->hptr;
        row.tphr = st->tphr;
        row.complexity = st->complexity;
        report.rows.push_back(row);
    }

    std::vector<double> deltas, complexities;
    for (const auto& row : report.rows) {
        deltas.push_back(row.delta_r);
        complexities.push_back(row.complexity);
    }
    if (auto rho = spearman_correlation(deltas, complexities)) {
        report.spearman = *rho;
        report.spearman_defined = true;
    }
    return report;
}

inline void write_complexity_report_csv(std::ostream& out, const ComplexityReport& report,
                                        const Vocab& vocab) {
    out << "relation,delta_r,delta_rprime,hptr,tphr,complexity\n";
    for (const auto& row : report.rows) {
        out << vocab.relation_name(row.relation) << ',' << csv_double(row.delta_r) << ',';
        if (!std::isnan(row.delta_rprime)) out << csv_double(row.delta_rprime);
        out << ',' << csv_double(row.hptr) << ',' << csv_double(row.tphr) << ','
            << csv_double(row.complexity) << '\n';
    }
    out << "spearman," << (report.spearman_defined ? csv_double(report.spearman) : "n/a") << '\n';
}

// ---------------------------------------------------------------------------
// Boundedness verifier: max |score| over seeded random triples; the
// constrained score must stay inside [-1, 1] up to 1e-9.

inline double verify_bound(const ModelState& state, int n_samples, std::uint64_t seed) {
    require(state.config.entity_constraint && state.config.relation_constraint,
            "verify_bound requires EC and RC");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> ent(0, state.n_entities - 1);
    std::uniform_int_distribution<Index> rel(0, state.n_relations - 1);
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        Index h = ent(rng), r = rel(rng), t = ent(rng);
        double s = score(state, h, r, t).first;
        if (std::abs(s) > worst) worst = std::abs(s);
        require(worst <= 1.0 + 1e-9, "score bound violated: |s(", h, ", ", r, ", ", t,
                ")| = ", std::abs(s));
    }
    return worst;
}

// Necessary condition: with EC+RC the effective matrix can never stretch a
// unit vector, in either direction.
inline double verify_necessary_condition(const ModelState& state, int n_samples, std::uint64_t seed) {
    require(state.config.entity_constraint && state.config.relation_constraint,
            "verify_necessary_condition requires EC and RC");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<Index> rel(0, state.n_relations - 1);
    const int n = state.config.dim;
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        DenseMatrix m = effective_matrix(state, rel(rng));
        std::vector<double> e(static_cast<std::size_t>(n));
        for (double& x : e) x = normal(rng);
        e = normalize(e).first;
        double fwd = l2_norm(matvec(m, e));
        double bwd = l2_norm(matvec(transpose(m), e));
        worst = std::max({worst, fwd, bwd});
        require(worst <= 1.0 + 1e-9, "necessary condition violated: stretch ", worst);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Constructive self-score dichotomy: for a unit-spectral-radius matrix that
// is not the identity, produce unit h != t with h^T m h <= h^T m t.

struct CounterexampleResult {
    bool is_identity = false;
    std::vector<double> h, t;
};

namespace detail {

inline std::vector<double> column(const DenseMatrix& m, int j) {
    std::vector<double> c(static_cast<std::size_t>(m.rows));
    for (int i = 0; i < m.rows; ++i) c[static_cast<std::size_t>(i)] = m.at(i, j);
    return c;
}

inline double column_distance(const DenseMatrix& a, const DenseMatrix& b, int j) {
    double s = 0.0;
    for (int i = 0; i < a.rows; ++i) {
        double d = a.at(i, j) - b.at(i, j);
        s += d * d;
    }
    return std::sqrt(s);
}

// Unit pair (h, t) in the 2-plane span{w, x} on which m acts as diag(1, s),
// built by the unequal-singular-value construction with the midpoint epsilon.
inline CounterexampleResult plane_counterexample(std::span<const double> w,
                                                 std::span<const double> x, double s) {
    double ratio = 1.0 / s;
    double c = (ratio + 1.0) / 2.0; // ratio - epsilon with epsilon at the midpoint
    double z = std::sqrt(1.0 + c * c);
    CounterexampleResult res;
    res.h.resize(w.size());
    res.t.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        res.h[i] = (w[i] + c * x[i]) / z;
        res.t[i] = (c * w[i] + x[i]) / z;
    }
    return res;
}

} // namespace detail

inline CounterexampleResult find_counterexample(const DenseMatrix& m) {
    require(m.rows == m.cols, "find_counterexample: matrix must be square");
    require(m.rows >= 1 && m.rows <= 64, "find_counterexample: order out of range: ", m.rows);
    const int n = m.rows;
    const double tol = 1e-9;

    SvdResult svd = jacobi_svd(m);
    require(std::abs(svd.sigma[0] - 1.0) <= tol,
            "find_counterexample: spectral radius is ", svd.sigma[0], ", must be 1");

    if (identity_error(m, DenseMatrix::identity(n)) * std::sqrt(static_cast<double>(n)) < tol)
        return {true, {}, {}};

    // All singular values 1: m is orthogonal and not the identity. Send the
    // most-moved coordinate direction through m; the image scores 1 against
    // its preimage and at most 1 against itself.
    if (svd.sigma[static_cast<std::size_t>(n - 1)] >= 1.0 - tol) {
        DenseMatrix eye = DenseMatrix::identity(n);
        int best = 0;
        double best_move = -1.0;
        for (int j = 0; j < n; ++j) {
            double move = detail::column_distance(m, eye, j);
            if (move > best_move) {
                best_move = move;
                best = j;
            }
        }
        CounterexampleResult res;
        res.t.assign(static_cast<std::size_t>(n), 0.0);
        res.t[static_cast<std::size_t>(best)] = 1.0;
        res.h = normalize(detail::column(m, best)).first;
        return res;
    }

    double uv_dist = 0.0;
    for (std::size_t i = 0; i < svd.u.data.size(); ++i)
        uv_dist = std::max(uv_dist, std::abs(svd.u.data[i] - svd.v.data[i]));

    // Unequal singular values with matching factors: work in the shared basis
    // on the (sigma_max, sigma_min) pair of coordinates.
    if (uv_dist < tol) {
        auto wi = detail::column(svd.u, 0);
        auto wj = detail::column(svd.u, n - 1);
        return detail::plane_counterexample(wi, wj, svd.sigma[static_cast<std::size_t>(n - 1)]);
    }

    // Otherwise pick a top singular coordinate whose left/right directions
    // differ; u_k scores sigma_k = 1 against v_k and at most 1 against itself.
    for (int k = 0; k < n && svd.sigma[static_cast<std::size_t>(k)] >= 1.0 - tol; ++k) {
        if (detail::column_distance(svd.u, svd.v, k) <= 1e-6) continue;
        CounterexampleResult res;
        res.h = detail::column(svd.u, k);
        res.t = detail::column(svd.v, k);
        return res;
    }

    // Every top singular direction is a fixed point (u_k = v_k). Deflate them
    // away and recurse on the complement, where the radius drops below 1.
    std::vector<std::vector<double>> fixed;
    for (int k = 0; k < n && svd.sigma[static_cast<std::size_t>(k)] >= 1.0 - tol; ++k)
        fixed.push_back(detail::column(svd.u, k));
    const int p = static_cast<int>(fixed.size());
    require(p < n, "find_counterexample: internal dispatch failure");

    // Orthonormal basis of the complement by Gram-Schmidt over coordinates.
    std::vector<std::vector<double>> basis = fixed;
    std::vector<std::vector<double>> complement;
    for (int cand = 0; cand < n && static_cast<int>(complement.size()) < n - p; ++cand) {
        std::vector<double> w(static_cast<std::size_t>(n), 0.0);
        w[static_cast<std::size_t>(cand)] = 1.0;
        for (const auto& b : basis) {
            double proj = dot(w, b);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= proj * b[i];
        }
        double nw = l2_norm(w);
        if (nw < 1e-6) continue;
        for (double& x : w) x /= nw;
        basis.push_back(w);
        complement.push_back(std::move(w));
    }
    require(static_cast<int>(complement.size()) == n - p,
            "find_counterexample: failed to build complement basis");

    const int q = n - p;
    DenseMatrix reduced(q, q);
    for (int i = 0; i < q; ++i) {
        auto mci = matvec(m, complement[static_cast<std::size_t>(i)]);
        for (int j = 0; j < q; ++j)
            reduced.at(j, i) = dot(mci, complement[static_cast<std::size_t>(j)]);
    }
    auto lift = [&](std::span<const double> v) {
        std::vector<double> out(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < n; ++j)
                out[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(i)] *
                                                    complement[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        return out;
    };

    SvdResult rsvd = jacobi_svd(reduced);
    if (rsvd.sigma[0] >= 1.0 - tol) {
        CounterexampleResult inner = find_counterexample(reduced);
        require(!inner.is_identity, "find_counterexample: deflated block is the identity");
        CounterexampleResult res;
        res.h = lift(inner.h);
        res.t = lift(inner.t);
        return res;
    }
    // Radius strictly below 1 on the complement.
    if (detail::column_distance(rsvd.u, rsvd.v, 0) > 1e-6) {
        CounterexampleResult res;
        res.h = lift(detail::column(rsvd.u, 0));
        res.t = lift(detail::column(rsvd.v, 0));
        return res;
    }
    // Top pair of the complement is symmetric: m acts as diag(1, sigma') on
    // the plane spanned by a fixed point and that direction.
    auto x = lift(detail::column(rsvd.v, 0));
    return detail::plane_counterexample(fixed[0], x, rsvd.sigma[0]);
}

// ---------------------------------------------------------------------------
// Random matrices with unit spectral radius: Q1 diag(1, s2..sn) Q2^T with
// orthogonal factors from Gram-Schmidt over Gaussian matrices and s uniform
// in (0, 1].

inline DenseMatrix random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix q(n, n);
    for (int j = 0; j < n; ++j) {
        std::vector<double> w(static_cast<std::size_t>(n));
        double nw = 0.0;
        do {
            for (double& x : w) x = normal(rng);
            for (int k = 0; k < j; ++k) {
                double proj = 0.0;
                for (int i = 0; i < n; ++i) proj += q.at(i, k) * w[static_cast<std::size_t>(i)];
                for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] -= proj * q.at(i, k);
            }
            nw = l2_norm(w);
        } while (nw < 1e-6);
        for (int i = 0; i < n; ++i) q.at(i, j) = w[static_cast<std::size_t>(i)] / nw;
    }
    return q;
}

inline DenseMatrix random_unit_radius_matrix(int n, std::mt19937_64& rng) {
    DenseMatrix q1 = random_orthogonal(n, rng);
    DenseMatrix q2 = random_orthogonal(n, rng);
    std::uniform_real_distribution<double> unit(std::numeric_limits<double>::min(), 1.0);
    std::vector<double> s(static_cast<std::size_t>(n), 1.0);
    for (int i = 1; i < n; ++i) s[static_cast<std::size_t>(i)] = unit(rng);
    DenseMatrix mid(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mid.at(i, j) = q2.at(j, i) * s[static_cast<std::size_t>(i)];
    return matmul(q1, mid);
}

// Runs the dichotomy over seeded random matrices (identity injected every
// tenth draw). Fails loudly on any invalid witness; returns the worst
// observed inequality margin violation (<= 0 when all strict).
struct CounterexampleSuiteResult {
    int n_matrices = 0;
    int n_identities = 0;
    double worst_margin = -std::numeric_limits<double>::infinity(); // max of h^T m h - h^T m t
};

inline CounterexampleSuiteResult run_counterexample_suite(int n_matrices, int min_order,
                                                          int max_order, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> order_dist(min_order, max_order);
    CounterexampleSuiteResult out;
    for (int i = 0; i < n_matrices; ++i) {
        int n = order_dist(rng);
        bool inject_identity = (i % 10 == 9);
        DenseMatrix m = inject_identity ? DenseMatrix::identity(n) : random_unit_radius_matrix(n, rng);
        CounterexampleResult cex = find_counterexample(m);
        ++out.n_matrices;
        if (inject_identity) {
            require(cex.is_identity, "identity matrix not recognized (order ", n, ", sample ", i, ")");
            ++out.n_identities;
            continue;
        }
        require(!cex.is_identity, "non-identity matrix reported as identity (sample ", i, ")");
        double shh = dot(cex.h, matvec(m, cex.h));
        double sht = dot(cex.h, matvec(m, cex.t));
        double margin = shh - sht;
        out.worst_margin = std::max(out.worst_margin, margin);
        require(margin <= 1e-9, "invalid witness at sample ", i, ": h^T m h = ", shh,
                " vs h^T m t = ", sht);
        std::vector<double> diff(cex.h.size());
        for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = cex.h[k] - cex.t[k];
        require(l2_norm(diff) > 1e-6, "witness pair degenerate at sample ", i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Identity-law experiment: trains each configuration on an identity-injected
// dataset, recording the imbalance of the identity relation per epoch and,
// with two copies, the error between the two independently trained matrices.

struct IdentityRunConfig {
    std::string label;
    ModelConfig model;
    TrainConfig train;
};

struct IdentityTracePoint {
    int epoch = 0;
    double delta_identity = 0.0;
    double error_between_runs = std::numeric_limits<double>::quiet_NaN();
};

struct IdentityRunResult {
    std::string label;
    std::vector<IdentityTracePoint> points;
    double initial_error = std::numeric_limits<double>::quiet_NaN();
    double final_delta = std::numeric_limits<double>::quiet_NaN();
    double final_error = std::numeric_limits<double>::quiet_NaN();
    TrainTrace trace;
};

inline void write_identity_trace_csv(std::ostream& out, const IdentityRunResult& run) {
    out << "epoch,delta_identity,error_between_runs\n";
    for (const auto& pt : run.points) {
        out << pt.epoch << ',' << csv_double(pt.delta_identity) << ',';
        if (!std::isnan(pt.error_between_runs)) out << csv_double(pt.error_between_runs);
        out << '\n';
    }
}

inline std::vector<IdentityRunResult> run_identity_experiment(
    const Dataset& dataset, std::span<const IdentityRunConfig> configs, int n_identity_copies,
    std::uint64_t seed) {
    require(dataset.identity_relation.has_value(), "dataset has no injected identity relation");
    require(n_identity_copies == 1 || n_identity_copies == 2, "identity copies must be 1 or 2");
    Index id1 = *dataset.identity_relation;
    Index id2 = -1;
    if (n_identity_copies == 2) {
        id2 = dataset.vocab.find_relation(kIdentityCopyName);
        require(id2 >= 0, "two-copy run requires a second injected identity relation");
    }

    std::vector<IdentityRunResult> results;
    for (const IdentityRunConfig& cfg : configs) {
        IdentityRunResult run;
        run.label = cfg.label;
        ModelState st = init_state(cfg.model, dataset.vocab.n_entities(),
                                   dataset.vocab.n_relations(), seed);
        if (n_identity_copies == 2) run.initial_error = identity_error(st, id1, st, id2);

        TrainHooks hooks;
        hooks.track_relations = {id1};
        hooks.on_epoch = [&](int epoch, const ModelState& s, EpochRecord& rec) {
            IdentityTracePoint pt;
            pt.epoch = epoch;
            pt.delta_identity = rec.tracked.front().delta;
            if (n_identity_copies == 2) pt.error_between_runs = identity_error(s, id1, s, id2);
            run.points.push_back(pt);
        };
        auto [final_state, trace] = fit(std::move(st), dataset, cfg.train, hooks);
        (void)final_state;
        run.trace = std::move(trace);
        if (!run.points.empty()) {
            run.final_delta = run.points.back().delta_identity;
            run.final_error = run.points.back().error_between_runs;
        }
        log_info("identity run \"", run.label, "\": final delta ", run.final_delta);
        results.push_back(std::move(run));
    }
    return results;
}

} // namespace unibi
