#pragma once

// Triple store: loading, reciprocal/identity augmentation, filtered-ranking
// index, per-relation complexity statistics, and synthetic graph generation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "unibi/common.hpp"

namespace unibi {

using Index = std::int32_t;

inline constexpr const char* kReciprocalSuffix = "__recip";
inline constexpr const char* kIdentityName = "__identity__";
inline constexpr const char* kIdentityCopyName = "__identity2__";

class Vocab {
public:
    Index add_entity(const std::string& name) {
        auto it = entity_index_.find(name);
        if (it != entity_index_.end()) return it->second;
        Index id = static_cast<Index>(entity_names_.size());
        entity_names_.push_back(name);
        entity_index_.emplace(name, id);
        return id;
    }
    Index add_relation(const std::string& name) {
        auto it = relation_index_.find(name);
        if (it != relation_index_.end()) return it->second;
        Index id = static_cast<Index>(relation_names_.size());
        relation_names_.push_back(name);
        relation_index_.emplace(name, id);
        return id;
    }

    Index find_entity(const std::string& name) const {
        auto it = entity_index_.find(name);
        return it == entity_index_.end() ? -1 : it->second;
    }
    Index find_relation(const std::string& name) const {
        auto it = relation_index_.find(name);
        return it == relation_index_.end() ? -1 : it->second;
    }

    const std::string& entity_name(Index id) const { return entity_names_.at(id); }
    const std::string& relation_name(Index id) const { return relation_names_.at(id); }
    Index n_entities() const { return static_cast<Index>(entity_names_.size()); }
    Index n_relations() const { return static_cast<Index>(relation_names_.size()); }
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    std::uint64_t fingerprint() const {
        std::uint64_t h = fnv1a64("entities");
        for (const auto& n : entity_names_) h = fnv1a64(n, h * 31 + 7);
        h = fnv1a64("relations", h);
        for (const auto& n : relation_names_) h = fnv1a64(n, h * 31 + 7);
        return h;
    }

private:
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, Index> entity_index_;
    std::unordered_map<std::string, Index> relation_index_;
};

struct Triple {
    Index head = 0;
    Index relation = 0;
    Index tail = 0;
    friend bool operator==(const Triple&, const Triple&) = default;
};

struct Dataset {
    Vocab vocab;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    bool reciprocal_applied = false;
    std::optional<Index> identity_relation;
    std::vector<std::string> provenance;

    std::vector<std::pair<const char*, const std::vector<Triple>*>> splits() const {
        return {{"train", &train}, {"valid", &valid}, {"test", &test}};
    }
};

// ---------------------------------------------------------------------------
// TSV ingestion: "head<TAB>relation<TAB>tail", UTF-8, LF or CRLF.

inline std::vector<Triple> parse_triples(std::istream& in, const std::string& origin,
                                         Vocab& vocab, bool frozen_vocab) {
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string, 3> fields;
        std::size_t field = 0, start = 0;
        bool bad = false;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                if (field >= 3) { bad = true; break; }
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (bad || field != 3)
            fail(origin, ":", line_no, ": expected 3 tab-separated fields, got ",
                 bad ? "more" : std::to_string(field));
        auto intern_entity = [&](const std::string& name) {
            if (!frozen_vocab) return vocab.add_entity(name);
            Index id = vocab.find_entity(name);
            if (id < 0) fail(origin, ":", line_no, ": unknown entity \"", name, "\"");
            return id;
        };
        Index h = intern_entity(fields[0]);
        Index r;
        if (!frozen_vocab) {
            r = vocab.add_relation(fields[1]);
        } else {
            r = vocab.find_relation(fields[1]);
            if (r < 0) fail(origin, ":", line_no, ": unknown relation \"", fields[1], "\"");
        }
        Index t = intern_entity(fields[2]);
        triples.push_back({h, r, t});
    }
    return triples;
}

inline std::vector<Triple> load_triples(const std::string& path, Vocab& vocab,
                                        bool frozen_vocab = false) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open triple file: ", path);
    return parse_triples(in, path, vocab, frozen_vocab);
}

inline void save_triples(std::ostream& out, std::span<const Triple> triples, const Vocab& vocab) {
    for (const Triple& t : triples)
        out << vocab.entity_name(t.head) << '\t' << vocab.relation_name(t.relation) << '\t'
            << vocab.entity_name(t.tail) << '\n';
}

// Loads the conventional train/valid/test files from a benchmark directory.
inline Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.train = load_triples(dir + "/train.txt", ds.vocab);
    ds.valid = load_triples(dir + "/valid.txt", ds.vocab);
    ds.test = load_triples(dir + "/test.txt", ds.vocab);
    ds.provenance = {dir + "/train.txt", dir + "/valid.txt", dir + "/test.txt"};
    return ds;
}

// ---------------------------------------------------------------------------

// Relation j becomes 2j and gains a reciprocal 2j+1; every (h, r, t) is
// mirrored as (t, r', h) appended to the same split.
inline Dataset augment_reciprocal(const Dataset& dataset) {
    require(!dataset.reciprocal_applied, "reciprocal augmentation applied twice");
    Dataset out;
    for (const auto& name : dataset.vocab.entity_names()) out.vocab.add_entity(name);
    for (const auto& name : dataset.vocab.relation_names()) {
        out.vocab.add_relation(name);
        out.vocab.add_relation(name + kReciprocalSuffix);
    }
    auto remap = [](const std::vector<Triple>& in) {
        std::vector<Triple> res;
        res.reserve(in.size() * 2);
        for (const Triple& t : in) res.push_back({t.head, static_cast<Index>(2 * t.relation), t.tail});
        for (const Triple& t : in) res.push_back({t.tail, static_cast<Index>(2 * t.relation + 1), t.head});
        return res;
    };
    out.train = remap(dataset.train);
    out.valid = remap(dataset.valid);
    out.test = remap(dataset.test);
    out.reciprocal_applied = true;
    if (dataset.identity_relation)
        out.identity_relation = static_cast<Index>(2 * *dataset.identity_relation);
    out.provenance = dataset.provenance;
    return out;
}

// Adds an "__identity__" relation with (e, id, e) facts for a seeded sample of
// ceil(fraction * |E|) entities, train split only. With copies = 2, a second
// independent relation duplicates the same facts. On a reciprocal dataset each
// identity relation also gets its mirrored reciprocal rows.
inline Dataset inject_identity(const Dataset& dataset, double fraction, std::uint64_t seed,
                               int copies = 1) {
    require(fraction > 0.0 && fraction <= 1.0, "identity fraction must be in (0, 1], got ", fraction);
    require(copies == 1 || copies == 2, "identity copies must be 1 or 2");
    require(dataset.vocab.find_relation(kIdentityName) < 0, "identity relation already present");

    Dataset out = dataset;
    const Index n = out.vocab.n_entities();
    auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    std::vector<Index> chosen(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) chosen[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(count);
    std::sort(chosen.begin(), chosen.end());

    auto add_identity_relation = [&](const std::string& name) {
        Index rel = out.vocab.add_relation(name);
        Index recip = -1;
        if (out.reciprocal_applied) recip = out.vocab.add_relation(name + kReciprocalSuffix);
        for (Index e : chosen) out.train.push_back({e, rel, e});
        if (recip >= 0)
            for (Index e : chosen) out.train.push_back({e, recip, e});
        return rel;
    };
    out.identity_relation = add_identity_relation(kIdentityName);
    if (copies == 2) add_identity_relation(kIdentityCopyName);
    return out;
}

// ---------------------------------------------------------------------------
// Filtered-ranking support: (head, relation) -> known true tails over all splits.

class FilterIndex {
public:
    static FilterIndex build(const Dataset& dataset) {
        FilterIndex idx;
        for (auto [name, split] : dataset.splits()) {
            (void)name;
            for (const Triple& t : *split) idx.buckets_[key(t.head, t.relation)].push_back(t.tail);
        }
        for (auto& [k, tails] : idx.buckets_) {
            std::sort(tails.begin(), tails.end());
            tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
        }
        return idx;
    }

    bool contains(Index head, Index relation, Index tail) const {
        auto it = buckets_.find(key(head, relation));
        if (it == buckets_.end()) return false;
        return std::binary_search(it->second.begin(), it->second.end(), tail);
    }

    // Empty when the (head, relation) pair was never seen.
    std::span<const Index> tails(Index head, Index relation) const {
        auto it = buckets_.find(key(head, relation));
        if (it == buckets_.end()) return {};
        return it->second;
    }

    std::size_t n_buckets() const { return buckets_.size(); }

private:
    static std::uint64_t key(Index head, Index relation) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(head)) << 32) |
               static_cast<std::uint32_t>(relation);
    }
    std::unordered_map<std::uint64_t, std::vector<Index>> buckets_;
};

inline FilterIndex build_filter_index(const Dataset& dataset) { return FilterIndex::build(dataset); }

// ---------------------------------------------------------------------------
// Relation complexity. hptr/tphr are computed over deduplicated (h, t) pairs:
// tphr = #pairs / #heads, hptr = #pairs / #tails; complexity is their sum.
// The 1.5 threshold splits relations into the four classic categories.

enum class RelationCategory { OneToOne, OneToMany, ManyToOne, ManyToMany };

inline const char* to_string(RelationCategory c) {
    switch (c) {
        case RelationCategory::OneToOne: return "1-1";
        case RelationCategory::OneToMany: return "1-N";
        case RelationCategory::ManyToOne: return "N-1";
        case RelationCategory::ManyToMany: return "N-N";
    }
    return "?";
}

struct RelationStats {
    Index relation = 0;
    double hptr = 1.0;
    double tphr = 1.0;
    double complexity = 2.0;
    RelationCategory category = RelationCategory::OneToOne;
};

inline std::vector<RelationStats> relation_stats(std::span<const Triple> triples, Index n_relations) {
    std::vector<std::vector<std::uint64_t>> pairs(static_cast<std::size_t>(n_relations));
    for (const Triple& t : triples)
        pairs[static_cast<std::size_t>(t.relation)].push_back(
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.head)) << 32) |
            static_cast<std::uint32_t>(t.tail));

    std::vector<RelationStats> out;
    for (Index r = 0; r < n_relations; ++r) {
        auto& p = pairs[static_cast<std::size_t>(r)];
        if (p.empty()) continue; // relations with no triples are omitted
        std::sort(p.begin(), p.end());
        p.erase(std::unique(p.begin(), p.end()), p.end());
        std::unordered_set<std::uint32_t> heads, tails;
        for (std::uint64_t key : p) {
            heads.insert(static_cast<std::uint32_t>(key >> 32));
            tails.insert(static_cast<std::uint32_t>(key & 0xffffffffULL));
        }
        RelationStats st;
        st.relation = r;
        st.tphr = static_cast<double>(p.size()) / static_cast<double>(heads.size());
        st.hptr = static_cast<double>(p.size()) / static_cast<double>(tails.size());
        st.complexity = st.hptr + st.tphr;
        bool many_tails = st.tphr > 1.5, many_heads = st.hptr > 1.5;
        st.category = many_tails ? (many_heads ? RelationCategory::ManyToMany : RelationCategory::OneToMany)
                                 : (many_heads ? RelationCategory::ManyToOne : RelationCategory::OneToOne);
        out.push_back(st);
    }
    return out;
}

inline std::vector<RelationStats> relation_stats(std::span<const Triple> triples, const Vocab& vocab) {
    return relation_stats(triples, vocab.n_relations());
}

inline void write_relation_stats_csv(std::ostream& out, std::span<const RelationStats> stats,
                                     const Vocab& vocab) {
    out << "relation,hptr,tphr,complexity,category\n";
    for (const RelationStats& st : stats)
        out << vocab.relation_name(st.relation) << ',' << csv_double(st.hptr) << ','
            << csv_double(st.tphr) << ',' << csv_double(st.complexity) << ','
            << to_string(st.category) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic graphs with controlled complexity. Each relation is a union of
// complete bipartite blocks of heads_per_tail heads by tails_per_head tails,
// so tphr and hptr land exactly on the requested values (before splitting).
// Heads and tails are fresh entities per relation.

struct SyntheticRelationSpec {
    int n_heads = 1;
    int tails_per_head = 1;
    int n_tails = 1;
    int heads_per_tail = 1;
};

inline Dataset generate_synthetic(std::span<const SyntheticRelationSpec> specs, std::uint64_t seed) {
    require(!specs.empty(), "synthetic spec is empty");
    Dataset ds;
    std::vector<Triple> all;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        const auto& sp = specs[j];
        require(sp.n_heads > 0 && sp.tails_per_head > 0 && sp.n_tails > 0 && sp.heads_per_tail > 0,
                "synthetic relation ", j, ": counts must be positive");
        require(static_cast<long long>(sp.n_heads) * sp.tails_per_head ==
                    static_cast<long long>(sp.n_tails) * sp.heads_per_tail,
                "synthetic relation ", j, ": infeasible spec, head and tail degree totals disagree");
        require(sp.n_heads % sp.heads_per_tail == 0 && sp.n_tails % sp.tails_per_head == 0,
                "synthetic relation ", j, ": counts must tile into complete blocks");
        int blocks = sp.n_heads / sp.heads_per_tail;

        Index rel = ds.vocab.add_relation("rel" + std::to_string(j));
        std::vector<Index> heads, tails;
        for (int i = 0; i < sp.n_heads; ++i)
            heads.push_back(ds.vocab.add_entity("r" + std::to_string(j) + "_h" + std::to_string(i)));
        for (int i = 0; i < sp.n_tails; ++i)
            tails.push_back(ds.vocab.add_entity("r" + std::to_string(j) + "_t" + std::to_string(i)));

        for (int b = 0; b < blocks; ++b)
            for (int hi = 0; hi < sp.heads_per_tail; ++hi)
                for (int ti = 0; ti < sp.tails_per_head; ++ti)
                    all.push_back({heads[static_cast<std::size_t>(b * sp.heads_per_tail + hi)], rel,
                                   tails[static_cast<std::size_t>(b * sp.tails_per_head + ti)]});
    }

    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    std::size_t n = all.size();
    std::size_t n_train = n * 8 / 10;
    std::size_t n_valid = n * 9 / 10 - n_train;
    ds.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.valid.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train),
                    all.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    ds.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), all.end());
    ds.provenance = {"synthetic:seed=" + std::to_string(seed)};
    return ds;
}

} // namespace unibi
