#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "unibi/kg.hpp"

using namespace unibi;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    auto path = std::filesystem::temp_directory_path() / ("unibi_kg_" + name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
    return path;
}

Dataset tiny_dataset() {
    Dataset ds;
    Index a = ds.vocab.add_entity("a");
    Index b = ds.vocab.add_entity("b");
    Index c = ds.vocab.add_entity("c");
    Index r = ds.vocab.add_relation("r");
    ds.train = {{a, r, b}, {a, r, c}};
    ds.valid = {{b, r, c}};
    ds.test = {{c, r, a}};
    return ds;
}

} // namespace

TEST_CASE("load_triples parses tab-separated lines") {
    auto path = temp_file("min.tsv", "a\tr\tb\na\tr\tc\n");
    Vocab vocab;
    auto triples = load_triples(path.string(), vocab);
    REQUIRE(triples.size() == 2);
    CHECK(vocab.n_entities() == 3);
    CHECK(vocab.n_relations() == 1);
    CHECK(triples[0] == Triple{0, 0, 1});
    CHECK(triples[1] == Triple{0, 0, 2});
}

TEST_CASE("load_triples preserves order and duplicates, accepts CRLF") {
    auto path = temp_file("dup.tsv", "x\tr\ty\r\nx\tr\ty\r\nz\tr\tx\r\n");
    Vocab vocab;
    auto triples = load_triples(path.string(), vocab);
    REQUIRE(triples.size() == 3);
    CHECK(triples[0] == triples[1]);
    CHECK(vocab.entity_name(triples[2].head) == "z");
}

TEST_CASE("load_triples rejects malformed lines with the line number") {
    auto path = temp_file("bad.tsv", "a\tr\tb\na\tr\n");
    Vocab vocab;
    CHECK_THROWS_WITH(load_triples(path.string(), vocab), Catch::Matchers::ContainsSubstring(":2:"));

    auto path4 = temp_file("bad4.tsv", "a\tr\tb\tc\n");
    Vocab v2;
    CHECK_THROWS(load_triples(path4.string(), v2));
}

TEST_CASE("frozen vocab rejects unknown names") {
    Vocab vocab;
    vocab.add_entity("a");
    vocab.add_entity("b");
    vocab.add_relation("r");
    auto path = temp_file("frozen.tsv", "a\tr\tmystery\n");
    CHECK_THROWS_WITH(load_triples(path.string(), vocab, /*frozen=*/true),
                      Catch::Matchers::ContainsSubstring("mystery"));
}

TEST_CASE("TSV round-trip reproduces triples and vocabulary") {
    std::vector<SyntheticRelationSpec> specs{{12, 3, 12, 3}, {8, 1, 8, 1}};
    Dataset generated = generate_synthetic(specs, 11);

    auto dir = std::filesystem::temp_directory_path() / "unibi_roundtrip";
    std::filesystem::create_directories(dir);
    for (auto [name, split] : generated.splits()) {
        std::ofstream out(dir / (std::string(name) + ".txt"), std::ios::binary | std::ios::trunc);
        save_triples(out, *split, generated.vocab);
    }
    Dataset first = load_dataset(dir.string());

    for (auto [name, split] : first.splits()) {
        std::ofstream out(dir / (std::string(name) + ".txt"), std::ios::binary | std::ios::trunc);
        save_triples(out, *split, first.vocab);
    }
    Dataset second = load_dataset(dir.string());

    CHECK(first.train == second.train);
    CHECK(first.valid == second.valid);
    CHECK(first.test == second.test);
    CHECK(first.vocab.entity_names() == second.vocab.entity_names());
    CHECK(first.vocab.relation_names() == second.vocab.relation_names());
}

TEST_CASE("augment_reciprocal doubles every split and the relation count") {
    SECTION("empty dataset") {
        Dataset ds;
        Dataset out = augment_reciprocal(ds);
        CHECK(out.reciprocal_applied);
        CHECK(out.train.empty());
        CHECK(out.vocab.n_relations() == 0);
    }
    SECTION("single triple") {
        Dataset ds;
        Index a = ds.vocab.add_entity("a");
        Index b = ds.vocab.add_entity("b");
        Index r = ds.vocab.add_relation("r");
        ds.train = {{a, r, b}};
        Dataset out = augment_reciprocal(ds);
        REQUIRE(out.train.size() == 2);
        CHECK(out.vocab.n_relations() == 2);
        CHECK(out.train[0] == Triple{a, 0, b});
        CHECK(out.train[1] == Triple{b, 1, a});
        CHECK(out.vocab.relation_name(1) == "r__recip");
    }
    SECTION("counts double on a synthetic dataset") {
        std::vector<SyntheticRelationSpec> specs{{20, 2, 20, 2}, {10, 1, 10, 1}};
        Dataset ds = generate_synthetic(specs, 3);
        Dataset out = augment_reciprocal(ds);
        CHECK(out.train.size() == 2 * ds.train.size());
        CHECK(out.valid.size() == 2 * ds.valid.size());
        CHECK(out.test.size() == 2 * ds.test.size());
        CHECK(out.vocab.n_relations() == 2 * ds.vocab.n_relations());
    }
    SECTION("double application is rejected") {
        Dataset ds = augment_reciprocal(tiny_dataset());
        CHECK_THROWS_WITH(augment_reciprocal(ds), Catch::Matchers::ContainsSubstring("twice"));
    }
}

TEST_CASE("inject_identity adds train-only self-loops") {
    SECTION("full injection on five entities") {
        Dataset ds;
        for (char c = 'a'; c <= 'e'; ++c) ds.vocab.add_entity(std::string(1, c));
        ds.vocab.add_relation("r");
        Dataset out = inject_identity(ds, 1.0, 42);
        REQUIRE(out.identity_relation.has_value());
        CHECK(out.train.size() == 5);
        for (const Triple& t : out.train) {
            CHECK(t.head == t.tail);
            CHECK(t.relation == *out.identity_relation);
        }
        CHECK(out.valid.empty());
        CHECK(out.vocab.relation_name(*out.identity_relation) == "__identity__");
    }
    SECTION("fraction bounds") {
        Dataset ds = tiny_dataset();
        CHECK_THROWS(inject_identity(ds, 0.0, 1));
        CHECK_THROWS(inject_identity(ds, 1.5, 1));
    }
    SECTION("partial fraction uses ceil and is deterministic") {
        Dataset ds;
        for (int i = 0; i < 10; ++i) ds.vocab.add_entity("e" + std::to_string(i));
        ds.vocab.add_relation("r");
        Dataset o1 = inject_identity(ds, 0.55, 7);
        Dataset o2 = inject_identity(ds, 0.55, 7);
        CHECK(o1.train.size() == 6); // ceil(5.5)
        CHECK(o1.train == o2.train);
        Dataset o3 = inject_identity(ds, 0.55, 8);
        CHECK(o3.train.size() == 6);
    }
    SECTION("reciprocal dataset mirrors identity rows") {
        Dataset ds = augment_reciprocal(tiny_dataset());
        std::size_t before = ds.train.size();
        Dataset out = inject_identity(ds, 1.0, 9);
        CHECK(out.train.size() == before + 2 * 3);
        Index recip = out.vocab.find_relation(std::string("__identity__") + kReciprocalSuffix);
        REQUIRE(recip >= 0);
        CHECK(recip == *out.identity_relation + 1);
    }
    SECTION("second copy duplicates the facts under a fresh relation") {
        Dataset ds = tiny_dataset();
        Dataset out = inject_identity(ds, 1.0, 5, /*copies=*/2);
        Index id2 = out.vocab.find_relation(kIdentityCopyName);
        REQUIRE(id2 >= 0);
        std::size_t n_id2 = 0;
        for (const Triple& t : out.train)
            if (t.relation == id2) ++n_id2;
        CHECK(n_id2 == 3);
        CHECK_THROWS_WITH(inject_identity(out, 1.0, 5),
                          Catch::Matchers::ContainsSubstring("already present"));
    }
}

TEST_CASE("filter index buckets and membership") {
    Dataset ds = tiny_dataset();
    FilterIndex idx = build_filter_index(ds);
    auto bucket = idx.tails(0, 0);
    REQUIRE(bucket.size() == 2);
    CHECK(bucket[0] == 1);
    CHECK(bucket[1] == 2);
    CHECK(idx.tails(2, 0).size() == 1); // test triple (c, r, a)
    CHECK(idx.tails(1, 0).size() == 1); // valid triple (b, r, c)

    CHECK(idx.tails(99, 0).empty());
    CHECK_FALSE(idx.contains(99, 0, 1));

    Dataset empty;
    FilterIndex none = build_filter_index(empty);
    CHECK(none.n_buckets() == 0);
}

TEST_CASE("filter index agrees with a linear scan on random queries") {
    std::vector<SyntheticRelationSpec> specs{{20, 4, 20, 4}, {30, 1, 30, 1}};
    Dataset ds = generate_synthetic(specs, 17);
    FilterIndex idx = build_filter_index(ds);
    std::vector<Triple> all;
    for (auto [name, split] : ds.splits()) all.insert(all.end(), split->begin(), split->end());

    std::mt19937_64 rng(99);
    std::uniform_int_distribution<Index> ent(0, ds.vocab.n_entities() - 1);
    std::uniform_int_distribution<Index> rel(0, ds.vocab.n_relations() - 1);
    for (int q = 0; q < 1000; ++q) {
        Index h = ent(rng), r = rel(rng), t = ent(rng);
        if (q % 3 == 0 && !all.empty()) {
            const Triple& pick = all[rng() % all.size()];
            h = pick.head;
            r = pick.relation;
            t = pick.tail;
        }
        bool scan = false;
        for (const Triple& tr : all)
            scan = scan || (tr.head == h && tr.relation == r && tr.tail == t);
        CHECK(idx.contains(h, r, t) == scan);
    }
}

TEST_CASE("relation statistics from deduplicated pairs") {
    Vocab vocab;
    Index a = vocab.add_entity("a");
    Index b = vocab.add_entity("b");
    Index c = vocab.add_entity("c");
    Index r = vocab.add_relation("r");

    SECTION("one head, two tails") {
        std::vector<Triple> triples{{a, r, b}, {a, r, c}};
        auto stats = relation_stats(triples, vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].tphr == Approx(2.0));
        CHECK(stats[0].hptr == Approx(1.0));
        CHECK(stats[0].complexity == Approx(3.0));
        CHECK(stats[0].category == RelationCategory::OneToMany);
    }
    SECTION("identity triples give complexity exactly 2") {
        std::vector<Triple> triples{{a, r, a}, {b, r, b}, {c, r, c}};
        auto stats = relation_stats(triples, vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].hptr == 1.0);
        CHECK(stats[0].tphr == 1.0);
        CHECK(stats[0].complexity == 2.0);
        CHECK(stats[0].category == RelationCategory::OneToOne);
    }
    SECTION("two heads, one tail") {
        std::vector<Triple> triples{{a, r, b}, {c, r, b}};
        auto stats = relation_stats(triples, vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].hptr == Approx(2.0));
        CHECK(stats[0].tphr == Approx(1.0));
        CHECK(stats[0].category == RelationCategory::ManyToOne);
    }
    SECTION("duplicates are deduplicated, empty relations omitted") {
        vocab.add_relation("unused");
        std::vector<Triple> triples{{a, r, b}, {a, r, b}, {a, r, b}};
        auto stats = relation_stats(triples, vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].relation == r);
        CHECK(stats[0].complexity == 2.0);
    }
}

TEST_CASE("complexity is at least 2 with equality iff both ratios are 1") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        Vocab vocab;
        for (int i = 0; i < 12; ++i) vocab.add_entity("e" + std::to_string(i));
        vocab.add_relation("r");
        std::vector<Triple> triples;
        int n_triples = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n_triples; ++i)
            triples.push_back({static_cast<Index>(rng() % 12), 0, static_cast<Index>(rng() % 12)});
        auto stats = relation_stats(triples, vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].complexity >= 2.0 - 1e-12);
        bool both_one = stats[0].hptr == 1.0 && stats[0].tphr == 1.0;
        CHECK((stats[0].complexity == 2.0) == both_one);
    }
}

TEST_CASE("relation stats CSV header") {
    Vocab vocab;
    vocab.add_entity("a");
    vocab.add_entity("b");
    vocab.add_relation("r");
    std::vector<Triple> triples{{0, 0, 1}};
    auto stats = relation_stats(triples, vocab);
    std::ostringstream out;
    write_relation_stats_csv(out, stats, vocab);
    CHECK(out.str() == "relation,hptr,tphr,complexity,category\nr,1,1,2,1-1\n");
}

TEST_CASE("generate_synthetic hits the requested complexity") {
    SECTION("one-to-one") {
        std::vector<SyntheticRelationSpec> specs{{10, 1, 10, 1}};
        Dataset ds = generate_synthetic(specs, 1);
        std::vector<Triple> all;
        for (auto [name, split] : ds.splits()) all.insert(all.end(), split->begin(), split->end());
        CHECK(all.size() == 10);
        auto stats = relation_stats(all, ds.vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].complexity == Approx(2.0));
    }
    SECTION("ten heads with five tails each") {
        std::vector<SyntheticRelationSpec> specs{{10, 5, 50, 1}};
        Dataset ds = generate_synthetic(specs, 1);
        std::vector<Triple> all;
        for (auto [name, split] : ds.splits()) all.insert(all.end(), split->begin(), split->end());
        auto stats = relation_stats(all, ds.vocab);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].tphr == Approx(5.0));
        CHECK(stats[0].hptr == Approx(1.0));
        CHECK(stats[0].complexity == Approx(6.0));
    }
    SECTION("invalid specs are rejected") {
        std::vector<SyntheticRelationSpec> zero{{0, 1, 1, 1}};
        CHECK_THROWS(generate_synthetic(zero, 1));
        std::vector<SyntheticRelationSpec> infeasible{{10, 3, 10, 2}};
        CHECK_THROWS_WITH(generate_synthetic(infeasible, 1),
                          Catch::Matchers::ContainsSubstring("infeasible"));
    }
    SECTION("deterministic splits near 80/10/10") {
        std::vector<SyntheticRelationSpec> specs{{20, 5, 20, 5}};
        Dataset d1 = generate_synthetic(specs, 77);
        Dataset d2 = generate_synthetic(specs, 77);
        CHECK(d1.train == d2.train);
        CHECK(d1.valid == d2.valid);
        CHECK(d1.test == d2.test);
        CHECK(d1.train.size() == 80);
        CHECK(d1.valid.size() == 10);
        CHECK(d1.test.size() == 10);
        Dataset d3 = generate_synthetic(specs, 78);
        CHECK(d3.train != d1.train);
    }
}
