#pragma once

// Filtered ranking evaluation. Head queries are expected to be present as
// reciprocal-relation tail queries, so only tail ranking is implemented.
// Ties get the mid-rank: rank = 1 + #strictly-better + #ties / 2.

#include <algorithm>
#include <map>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "unibi/common.hpp"
#include "unibi/kg.hpp"
#include "unibi/scoring.hpp"

namespace unibi {

struct EvalResult {
    double mrr = 0.0;
    std::map<int, double> hits_at; // k in {1, 3, 10}
    std::vector<std::pair<Triple, double>> per_query_ranks;
    int n_queries = 0;
};

// filtered_out must be sorted and must not contain the target.
inline double rank_of(std::span<const double> scores, Index target,
                      std::span<const Index> filtered_out) {
    require(target >= 0 && static_cast<std::size_t>(target) < scores.size(),
            "rank_of: target out of range");
    require(!std::binary_search(filtered_out.begin(), filtered_out.end(), target),
            "rank_of: target entity is filtered out");
    double s_t = scores[static_cast<std::size_t>(target)];
    std::size_t greater = 0, ties = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<Index>(j) == target) continue;
        if (std::binary_search(filtered_out.begin(), filtered_out.end(), static_cast<Index>(j)))
            continue;
        if (scores[j] > s_t)
            ++greater;
        else if (scores[j] == s_t)
            ++ties;
    }
    return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;
}

// Queries are independent against a frozen state; with threads > 1 they are
// ranked in parallel into per-query slots and aggregated in a fixed order, so
// the result does not depend on the thread count.
inline EvalResult evaluate(const ModelState& state, std::span<const Triple> split,
                           const FilterIndex& filter, bool filtered = true, int threads = 1) {
    std::vector<double> ranks(split.size(), 0.0);
    std::vector<std::string> errors(split.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Triple& q = split[i];
            try {
                std::vector<double> scores = score_all_tails(state, q.head, q.relation);
                std::vector<Index> filtered_out;
                if (filtered) {
                    auto bucket = filter.tails(q.head, q.relation);
                    filtered_out.assign(bucket.begin(), bucket.end());
                    filtered_out.erase(
                        std::remove(filtered_out.begin(), filtered_out.end(), q.tail),
                        filtered_out.end());
                }
                ranks[i] = rank_of(scores, q.tail, filtered_out);
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
    };

    if (threads <= 1 || split.size() < 2) {
        run_range(0, split.size());
    } else {
        std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), split.size());
        std::vector<std::thread> pool;
        std::size_t chunk = (split.size() + n_workers - 1) / n_workers;
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back(run_range, w * chunk, std::min(split.size(), (w + 1) * chunk));
        for (auto& th : pool) th.join();
    }

    EvalResult res;
    res.hits_at = {{1, 0.0}, {3, 0.0}, {10, 0.0}};
    res.per_query_ranks.reserve(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        const Triple& q = split[i];
        if (!errors[i].empty())
            fail("evaluation failed at (", q.head, ", ", q.relation, ", ", q.tail, "): ", errors[i]);
        res.per_query_ranks.emplace_back(q, ranks[i]);
        res.mrr += 1.0 / ranks[i];
        for (auto& [k, v] : res.hits_at)
            if (ranks[i] <= static_cast<double>(k)) v += 1.0;
    }
    res.n_queries = static_cast<int>(split.size());
    if (res.n_queries > 0) {
        res.mrr /= res.n_queries;
        for (auto& [k, v] : res.hits_at) v /= res.n_queries;
    }
    return res;
}

inline void write_eval_csv_header(std::ostream& out) {
    out << "split,mrr,hits1,hits3,hits10,n_queries\n";
}

inline void write_eval_csv_row(std::ostream& out, const std::string& split, const EvalResult& r) {
    out << split << ',' << csv_double(r.mrr) << ',' << csv_double(r.hits_at.at(1)) << ','
        << csv_double(r.hits_at.at(3)) << ',' << csv_double(r.hits_at.at(10)) << ','
        << r.n_queries << '\n';
}

inline void write_rank_dump(std::ostream& out, const EvalResult& r, const Vocab& vocab) {
    out << "head,relation,tail,rank\n";
    for (const auto& [q, rank] : r.per_query_ranks)
        out << vocab.entity_name(q.head) << ',' << vocab.relation_name(q.relation) << ','
            << vocab.entity_name(q.tail) << ',' << csv_double(rank) << '\n';
}

} // namespace unibi
