#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "olbench/datasets.hpp"
#include "olbench/ingest/geonames.hpp"
#include "olbench/ingest/umls.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace olbench;

namespace {

SourceCorpus tiny_corpus(size_t n, SourceId source = SourceId::nci) {
    SourceCorpus c;
    c.source_id = source;
    for (size_t i = 0; i < n; ++i) {
        TermRecord r;
        r.term_id = "id" + fixtures::pad(i, 4);
        r.surface_form = "term " + std::to_string(i);
        r.gold_types = {i % 2 ? "TypeA" : "TypeB"};
        r.source_id = source;
        c.records.push_back(std::move(r));
    }
    c.type_inventory = {"TypeA", "TypeB"};
    return c;
}

}  // namespace

TEST_CASE("term typing copies record fields verbatim") {
    auto c = tiny_corpus(1);
    c.records[0].context_sentence = "a sentence";
    c.records[0].partition = Partition::test;
    auto items = build_term_typing(c);
    REQUIRE(items.size() == 1);
    CHECK(items[0].surface_form == "term 0");
    CHECK(items[0].context_sentence == "a sentence");
    CHECK(items[0].gold_types == c.records[0].gold_types);
    CHECK(items[0].partition == Partition::test);
}

TEST_CASE("empty corpus is an error") {
    SourceCorpus c;
    CHECK_THROWS_WITH(build_term_typing(c), Catch::Matchers::ContainsSubstring("empty dataset"));
}

TEST_CASE("chain taxonomy r->a->b closes transitively with inverted negatives") {
    auto t = taxo::build({"r", "a", "b"}, {{"a", "r"}, {"b", "a"}});
    auto items = build_taxonomy_pairs(t);

    std::set<std::tuple<std::string, std::string, bool>> got;
    for (auto& p : items) got.emplace(p.type_a, p.type_b, p.label);
    std::set<std::tuple<std::string, std::string, bool>> want{
        {"r", "a", true}, {"a", "b", true}, {"r", "b", true},
        {"a", "r", false}, {"b", "a", false}, {"b", "r", false}};
    CHECK(got == want);

    for (auto& p : items) {
        if (p.type_a == "r" && p.type_b == "b") {
            CHECK(p.provenance == TypePairItem::Provenance::transitive);
        }
        if (p.type_a == "b" && p.type_b == "r") {
            CHECK(p.provenance == TypePairItem::Provenance::transitive_inverted);
        }
        if (p.type_a == "r" && p.type_b == "a") {
            CHECK(p.provenance == TypePairItem::Provenance::direct);
        }
    }
}

TEST_CASE("single-level taxonomy yields an empty pair list") {
    auto t = taxo::build({"only", "peers"}, {});
    CHECK(build_taxonomy_pairs(t).empty());
}

TEST_CASE("closure gap can be bounded") {
    auto t = taxo::build({"r", "a", "b", "c"}, {{"a", "r"}, {"b", "a"}, {"c", "b"}});
    auto bounded = build_taxonomy_pairs(t, 2);
    std::set<std::pair<std::string, std::string>> positives;
    for (auto& p : bounded) {
        if (p.label) positives.emplace(p.type_a, p.type_b);
    }
    CHECK(positives.count({"r", "b"}) == 1);   // two hops kept
    CHECK(positives.count({"r", "c"}) == 0);   // three hops dropped
    CHECK(positives.count({"a", "c"}) == 1);
}

TEST_CASE("pair generation equals brute-force reachability on random DAGs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = fixtures::random_dag_taxonomy(rng);
        auto items = build_taxonomy_pairs(t);
        std::set<std::tuple<std::string, std::string, bool>> got;
        for (auto& p : items) got.emplace(p.type_a, p.type_b, p.label);
        CHECK(got == oracles::reachability_pairs(t));

        // Inversion symmetry: flipping (a, b) is a label-flipping bijection.
        for (auto& p : items) {
            CHECK(got.count({p.type_b, p.type_a, !p.label}) == 1);
        }
        // No pair carries both labels.
        for (auto& p : items) {
            CHECK(got.count({p.type_a, p.type_b, !p.label}) == 0);
        }
    }
}

TEST_CASE("two types one relation: remaining combinations become negatives") {
    auto t = taxo::build({"X", "Y"}, {{"Y", "X"}});
    std::vector<RelationAssertion> asserted{{"X", "affects", "Y"}};
    auto items = build_relation_triples(asserted, t, 3, 42);
    REQUIRE(items.size() == 4);
    std::set<std::tuple<std::string, std::string, std::string, bool>> got;
    for (auto& it : items) got.emplace(it.head, it.relation, it.tail, it.label);
    std::set<std::tuple<std::string, std::string, std::string, bool>> want{
        {"X", "affects", "Y", true},
        {"X", "affects", "X", false},  // self-pairs are candidates
        {"Y", "affects", "X", false},
        {"Y", "affects", "Y", false}};
    CHECK(got == want);
}

TEST_CASE("negative_count zero yields positives only") {
    auto t = taxo::build({"X", "Y"}, {{"Y", "X"}});
    std::vector<RelationAssertion> asserted{{"X", "affects", "Y"}};
    auto items = build_relation_triples(asserted, t, 0, 1);
    REQUIRE(items.size() == 1);
    CHECK(items[0].label);
}

TEST_CASE("requesting more negatives than candidates is a capacity error") {
    auto t = taxo::build({"X", "Y"}, {{"Y", "X"}});
    std::vector<RelationAssertion> asserted{{"X", "affects", "Y"}};
    CHECK_THROWS_WITH(build_relation_triples(asserted, t, 4, 1),
                      Catch::Matchers::ContainsSubstring("only 3"));
}

TEST_CASE("negative sampling is deterministic per seed and seed-sensitive") {
    std::mt19937_64 rng(5);
    auto t = fixtures::random_dag_taxonomy(rng, 20, 3);
    std::vector<RelationAssertion> asserted;
    asserted.push_back({t.nodes[0].label, "linked to", t.nodes[1].label});
    asserted.push_back({t.nodes[1].label, "linked to", t.nodes[0].label});

    auto a = build_relation_triples(asserted, t, 10, 7);
    auto b = build_relation_triples(asserted, t, 10, 7);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].item_id == b[i].item_id);

    auto c = build_relation_triples(asserted, t, 10, 8);
    bool differs = false;
    for (size_t i = 0; i < a.size(); ++i) differs |= a[i].item_id != c[i].item_id;
    CHECK(differs);
}

TEST_CASE("splits hit the published sizes on shaped fixtures") {
    SECTION("1,360 pairs at test_fraction 0.8 -> 272/1,088") {
        auto dir = fixtures::fresh_dir("split_geo");
        auto f = fixtures::make_geonames(dir);
        auto corpus = parse_geonames(f.features, f.country_info);
        auto pairs = build_taxonomy_pairs(*corpus.taxonomy);
        REQUIRE(pairs.size() == 1360);
        auto [train, test] = split_dataset(std::move(pairs), SplitSpec{0.8, 21});
        CHECK(train.size() == 272);
        CHECK(test.size() == 1088);
    }
    SECTION("508 pairs at test_fraction 0.8 -> 101/407") {
        auto dir = fixtures::fresh_dir("split_umls");
        auto f = fixtures::make_umls(dir, 4);
        auto corpus = parse_umls(f.paths, UmlsSub::nci);
        auto pairs = build_taxonomy_pairs(*corpus.taxonomy);
        REQUIRE(pairs.size() == 508);
        auto [train, test] = split_dataset(std::move(pairs), SplitSpec{0.8, 21});
        CHECK(train.size() == 101);
        CHECK(test.size() == 407);
    }
    SECTION("7,537 items at test_fraction 0.8 -> 1,507/6,030") {
        std::vector<TypePairItem> items;
        for (size_t i = 0; i < 7537; ++i) {
            TypePairItem it;
            it.item_id = "B:x" + fixtures::pad(i, 5);
            it.label = i < 5641;
            items.push_back(it);
        }
        auto [train, test] = split_dataset(std::move(items), SplitSpec{0.8, 3});
        CHECK(train.size() == 1507);
        CHECK(test.size() == 6030);
    }
    SECTION("test_fraction 1.0 puts everything in test") {
        std::vector<TypePairItem> items;
        for (size_t i = 0; i < 10; ++i) {
            TypePairItem it;
            it.item_id = "B:y" + std::to_string(i);
            it.label = i % 2;
            items.push_back(it);
        }
        auto [train, test] = split_dataset(std::move(items), SplitSpec{1.0, 3});
        CHECK(train.empty());
        CHECK(test.size() == 10);
    }
}

TEST_CASE("splits are deterministic and invariant to input ordering") {
    std::vector<TypePairItem> items;
    for (size_t i = 0; i < 97; ++i) {
        TypePairItem it;
        it.item_id = "B:z" + fixtures::pad(i, 3);
        it.label = i % 3 == 0;
        items.push_back(it);
    }
    auto shuffled = items;
    std::mt19937_64 rng(1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    auto [train_a, test_a] = split_dataset(items, SplitSpec{0.8, 11});
    auto [train_b, test_b] = split_dataset(shuffled, SplitSpec{0.8, 11});
    REQUIRE(train_a.size() == train_b.size());
    for (size_t i = 0; i < train_a.size(); ++i) CHECK(train_a[i].item_id == train_b[i].item_id);
}

TEST_CASE("stratified split keeps label balance") {
    std::vector<TypePairItem> items;
    for (size_t i = 0; i < 1000; ++i) {
        TypePairItem it;
        it.item_id = "B:w" + fixtures::pad(i, 4);
        it.label = i < 500;
        items.push_back(it);
    }
    auto [train, test] = split_dataset(std::move(items), SplitSpec{0.8, 5});
    size_t train_pos = 0;
    for (auto& it : train) train_pos += it.label ? 1 : 0;
    CHECK(train.size() == 200);
    CHECK(train_pos == 100);  // exact balance via largest-remainder quotas
}

TEST_CASE("splitting records upstream flows into term items") {
    auto c = tiny_corpus(100);
    split_corpus_records(c, SplitSpec{0.2, 17});
    size_t train = 0, test = 0;
    for (auto& r : c.records) (r.partition == Partition::train ? train : test)++;
    CHECK(train == 80);
    CHECK(test == 20);
    auto items = build_term_typing(c);
    size_t item_test = 0;
    for (auto& it : items) item_test += it.partition == Partition::test ? 1 : 0;
    CHECK(item_test == 20);
}

TEST_CASE("dataset jsonl round-trips items") {
    auto dir = fixtures::fresh_dir("items_rt");
    std::mt19937_64 rng(3);
    auto t = fixtures::random_dag_taxonomy(rng, 15, 3);
    auto pairs = build_taxonomy_pairs(t);
    if (pairs.empty()) return;
    auto [train, test] = split_dataset(std::move(pairs), SplitSpec{0.5, 1});
    std::vector<TypePairItem> all = train;
    all.insert(all.end(), test.begin(), test.end());
    write_items_jsonl(all, dir / "pairs.jsonl");
    std::vector<TypePairItem> back;
    for_each_jsonl(dir / "pairs.jsonl",
                   [&](const ojson& j, size_t) { back.push_back(pair_item_from_json(j)); });
    REQUIRE(back.size() == all.size());
    for (size_t i = 0; i < all.size(); ++i) {
        CHECK(back[i].item_id == all[i].item_id);
        CHECK(back[i].label == all[i].label);
        CHECK(back[i].provenance == all[i].provenance);
        CHECK(back[i].partition == all[i].partition);
    }
}
