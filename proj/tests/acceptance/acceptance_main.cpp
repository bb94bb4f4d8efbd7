// Acceptance suite: one pass/fail line per criterion. Structural checks run
// on generated fixtures shaped to the documented cardinalities; checks that
// need the official dumps activate when the corresponding OLBENCH_* paths
// are set (the dumps are large and, for UMLS, licensed).
//
//   OLBENCH_WN18RR_DIR          train.txt/valid.txt/test.txt
//   OLBENCH_GEONAMES_FEATURES   allCountries.txt
//   OLBENCH_GEONAMES_COUNTRYINFO countryInfo.txt
//   OLBENCH_UMLS_DIR            MRCONSO.RRF MRSTY.RRF SRDEF SRSTR
//   OLBENCH_SCHEMAORG_TYPES     types csv export
//   OLBENCH_LIVE_ENDPOINT       completion endpoint for the non-gating smoke

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "olbench/answers.hpp"
#include "olbench/backend.hpp"
#include "olbench/datasets.hpp"
#include "olbench/eval.hpp"
#include "olbench/ingest/geonames.hpp"
#include "olbench/ingest/schemaorg.hpp"
#include "olbench/ingest/umls.hpp"
#include "olbench/ingest/wn18rr.hpp"
#include "olbench/prompts.hpp"
#include "olbench/runner.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace olbench;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string name;
    bool failed = false;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            failed = true;
            notes.push_back("FAILED: " + what);
        }
    }
    void note(const std::string& msg) { notes.push_back(msg); }
};

std::vector<Criterion> g_criteria;

Criterion& criterion(int number, const std::string& name) {
    g_criteria.push_back({number, name});
    return g_criteria.back();
}

fs::path repo_dir() { return fs::path(OLBENCH_REPO_DIR); }

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v && *v) return std::string(v);
    return std::nullopt;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RunConfig base_runner_config(const fs::path& work, const std::string& run_id) {
    RunConfig c;
    c.run_id = run_id;
    c.templates_dir = repo_dir() / "data" / "templates";
    c.answers_dir = repo_dir() / "data" / "answers";
    c.cache_dir = work / "cache" / run_id;
    c.output_dir = work / "out";
    c.parallelism = 4;
    c.backend.backend_id = "stub";
    c.backend.kind = BackendKind::stub_echo_gold;
    c.backend.model_name = "stub";
    return c;
}

size_t count_partition(const std::vector<TermRecord>& records, Partition p) {
    size_t n = 0;
    for (auto& r : records) n += r.partition == p ? 1 : 0;
    return n;
}

// ---------------------------------------------------------------------------

void criterion_1_dataset_counts(const fs::path& work) {
    auto& c = criterion(1, "dataset-count reproduction");

    // Fixture-shaped structural checks (always on).
    {
        auto dir = fixtures::fresh_dir("acc_geo");
        auto f = fixtures::make_geonames(dir);
        auto corpus = parse_geonames(f.features, f.country_info);
        c.check(corpus.taxonomy && corpus.taxonomy->nodes.size() == 689,
                "geonames fixture taxonomy has 689 nodes");
        c.check(corpus.taxonomy->level_count == 2, "geonames taxonomy has 2 levels");
        c.check(corpus.type_inventory.size() == 680, "geonames fixture inventory is 680 codes");

        auto pairs = build_taxonomy_pairs(*corpus.taxonomy);
        size_t pos = 0;
        for (auto& p : pairs) pos += p.label ? 1 : 0;
        c.check(pos == 680 && pairs.size() == 1360, "geonames pairs are 680/680");
        auto [train, test] = split_dataset(std::move(pairs), SplitSpec{0.8, 7});
        c.check(train.size() == 272 && test.size() == 1088,
                "geonames pair split is 272/1,088 at test_fraction 0.8");
    }
    {
        auto dir = fixtures::fresh_dir("acc_umls");
        auto f = fixtures::make_umls(dir);
        auto corpus = parse_umls(f.paths, UmlsSub::nci);
        c.check(corpus.taxonomy && corpus.taxonomy->nodes.size() == 127,
                "semantic-network fixture has 127 types");
        c.check(corpus.taxonomy->level_count == 3, "semantic network has 3 levels");
        std::set<std::string> rels;
        for (auto& a : corpus.relations) rels.insert(a.relation);
        c.check(rels.size() == 53, "53 non-taxonomic relations");

        auto pairs = build_taxonomy_pairs(*corpus.taxonomy);
        size_t pos = 0;
        for (auto& p : pairs) pos += p.label ? 1 : 0;
        c.check(pos == 254 && pairs.size() == 508, "umls pairs are 254/254");
        auto [train, test] = split_dataset(std::move(pairs), SplitSpec{0.8, 7});
        c.check(train.size() == 101 && test.size() == 407,
                "umls pair split is 101/407 at test_fraction 0.8");
    }
    {
        // Task C split at the published scale: 5,641/1,896 -> 1,507/6,030.
        std::vector<RelationTripleItem> items;
        for (size_t i = 0; i < 7537; ++i) {
            RelationTripleItem it;
            it.item_id = "C:i" + fixtures::pad(i, 5);
            it.label = i < 5641;
            items.push_back(it);
        }
        auto [train, test] = split_dataset(std::move(items), SplitSpec{0.8, 7});
        c.check(train.size() == 1507 && test.size() == 6030,
                "task C split is 1,507/6,030 at test_fraction 0.8");
    }
    {
        // Term splits at the published scales reproduce every train/test
        // cell: the cut is floor(n x (1 - test_fraction)) with exact
        // products snapped.
        struct Cell {
            size_t total;
            double test_fraction;
            size_t train;
        };
        for (auto& cell : {Cell{120222, 0.2, 96177},        // 96,177/24,045
                           Cell{346286, 0.2, 277028},       // 277,028/69,258
                           Cell{347968, 0.2, 278374},       // 278,374/69,594
                           Cell{8781375, 0.08, 8078865}}) {  // 8,078,865/702,510
            size_t got = static_cast<size_t>(
                floorl(detail::exact_share(cell.total, 1.0 - cell.test_fraction)));
            c.check(got == cell.train,
                    "train cut for n=" + std::to_string(cell.total) + " is " +
                        std::to_string(cell.train) + " (got " + std::to_string(got) + ")");
        }
        // And end to end through split_dataset at one of those scales.
        std::vector<RelationTripleItem> items;
        for (size_t i = 0; i < 346286; ++i) {
            RelationTripleItem it;
            it.item_id = "A:i" + fixtures::pad(i, 7);
            it.label = i % 2 == 0;
            items.push_back(it);
        }
        auto [train, test] = split_dataset(std::move(items), SplitSpec{0.2, 7});
        c.check(train.size() == 277028 && test.size() == 69258,
                "table-scale split 346,286 at 0.2 is 277,028/69,258");
    }
    {
        auto dir = fixtures::fresh_dir("acc_so");
        auto f = fixtures::make_schemaorg(dir);
        auto corpus = parse_schemaorg(f.types_csv);
        c.check(corpus.taxonomy && corpus.taxonomy->nodes.size() == 797,
                "schema.org fixture has 797 types");
        c.check(corpus.taxonomy->level_count == 6, "schema.org taxonomy has 6 levels");
        auto pairs = build_taxonomy_pairs(*corpus.taxonomy);
        size_t pos = 0;
        for (auto& p : pairs) pos += p.label ? 1 : 0;
        c.check(pos == 2670, "schema.org fixture closure yields 2,670 positives");

        // The discrepancy is reported, never matched.
        std::string note = kSchemaOrgCountNote;
        c.check(note.find("1,086/4,727") != std::string::npos &&
                    note.find("2,670/2,670") != std::string::npos,
                "schema.org count-discrepancy note quotes both inconsistent figures");
    }
    {
        auto dir = fixtures::fresh_dir("acc_wn");
        auto f = fixtures::make_wn18rr(dir, 1200, 300);
        auto corpus = parse_wn18rr(f.train, f.valid, f.test);
        c.check(corpus.type_inventory.size() == 4, "wn18rr yields exactly 4 POS types");
        c.check(count_partition(corpus.records, Partition::train) == 1200 &&
                    count_partition(corpus.records, Partition::test) == 300,
                "wn18rr partitions follow the train and merged valid+test files");
    }

    // Official dumps, when supplied.
    if (auto dir = env("OLBENCH_WN18RR_DIR")) {
        fs::path d(*dir);
        auto corpus = parse_wn18rr(d / "train.txt", d / "valid.txt", d / "test.txt");
        size_t train = count_partition(corpus.records, Partition::train);
        size_t test = count_partition(corpus.records, Partition::test);
        c.check(train == 40559, "official WN18RR train records = 40,559 (got " +
                                    std::to_string(train) + ")");
        c.check(test == 9470,
                "official WN18RR test records = 9,470 (got " + std::to_string(test) + ")");
        c.check(corpus.type_inventory.size() == 4, "official WN18RR types = 4");
    } else {
        c.note("official WN18RR cells skipped (set OLBENCH_WN18RR_DIR)");
    }
    if (auto features = env("OLBENCH_GEONAMES_FEATURES")) {
        auto country = env("OLBENCH_GEONAMES_COUNTRYINFO");
        if (country) {
            auto start = std::chrono::steady_clock::now();
            auto corpus = parse_geonames(*features, *country);
            c.check(corpus.type_inventory.size() == 680,
                    "official GeoNames feature codes = 680 (got " +
                        std::to_string(corpus.type_inventory.size()) + ")");
            c.check(corpus.taxonomy->nodes.size() == 689, "official GeoNames taxonomy = 689");
            split_corpus_records(corpus, SplitSpec{0.08, 7});
            size_t train = count_partition(corpus.records, Partition::train);
            size_t test = count_partition(corpus.records, Partition::test);
            c.check(train == 8078865, "official GeoNames train = 8,078,865 (got " +
                                          std::to_string(train) + ")");
            c.check(test == 702510,
                    "official GeoNames test = 702,510 (got " + std::to_string(test) + ")");
            c.note("geonames dump processed in " +
                   std::to_string(seconds_since(start)) + "s");
        }
    } else {
        c.note("official GeoNames cells skipped (set OLBENCH_GEONAMES_FEATURES/COUNTRYINFO)");
    }
    if (auto dir = env("OLBENCH_UMLS_DIR")) {
        fs::path d(*dir);
        UmlsPaths paths{d / "MRCONSO.RRF", d / "MRSTY.RRF", d / "SRDEF", d / "SRSTR"};
        struct Row {
            UmlsSub sub;
            size_t train, test, types;
        };
        for (auto& row : {Row{UmlsSub::nci, 96177, 24045, 125},
                          Row{UmlsSub::medcin, 277028, 69258, 87},
                          Row{UmlsSub::snomedct_us, 278374, 69594, 125}}) {
            auto corpus = parse_umls(paths, row.sub);
            split_corpus_records(corpus, SplitSpec{0.2, 7});
            size_t train = count_partition(corpus.records, Partition::train);
            size_t test = count_partition(corpus.records, Partition::test);
            std::string name = sab_of(row.sub);
            c.check(train == row.train, "official " + name + " train = " +
                                            std::to_string(row.train) + " (got " +
                                            std::to_string(train) + ")");
            c.check(test == row.test,
                    "official " + name + " test = " + std::to_string(row.test) + " (got " +
                        std::to_string(test) + ")");
            c.check(corpus.type_inventory.size() == row.types,
                    "official " + name + " types = " + std::to_string(row.types));
        }
    } else {
        c.note("official UMLS cells skipped (set OLBENCH_UMLS_DIR; licensed data)");
    }
    if (auto types = env("OLBENCH_SCHEMAORG_TYPES")) {
        auto corpus = parse_schemaorg(*types);
        c.check(corpus.taxonomy->nodes.size() == 797,
                "official schema.org types = 797 (got " +
                    std::to_string(corpus.taxonomy->nodes.size()) + ")");
        c.check(corpus.taxonomy->level_count == 6, "official schema.org levels = 6");
    } else {
        c.note("official schema.org cells skipped (set OLBENCH_SCHEMAORG_TYPES)");
    }
    (void)work;
}

void criterion_2_pair_oracle() {
    auto& c = criterion(2, "pair-generation oracle (500 random DAGs)");
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1234);
    size_t mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        auto t = fixtures::random_dag_taxonomy(rng, 50, 5);
        auto items = build_taxonomy_pairs(t);
        std::set<std::tuple<std::string, std::string, bool>> got;
        for (auto& p : items) got.emplace(p.type_a, p.type_b, p.label);
        if (got != oracles::reachability_pairs(t)) ++mismatches;
    }
    double elapsed = seconds_since(start);
    c.check(mismatches == 0,
            "zero mismatches against brute-force reachability (got " +
                std::to_string(mismatches) + ")");
    c.check(elapsed < 10.0, "runtime under 10s (took " + std::to_string(elapsed) + "s)");
    c.note("500 taxonomies in " + std::to_string(elapsed) + "s");
}

void criterion_3_template_fidelity() {
    auto& c = criterion(3, "template fidelity against golden transcriptions");
    TemplateLibrary library(repo_dir() / "data" / "templates");

    auto unescape = [](const std::string& s) {
        std::string out;
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
                out.push_back(s[i] == 'n' ? '\n' : s[i]);
            } else {
                out.push_back(s[i]);
            }
        }
        return out;
    };

    struct Row {
        Task task;
        SourceId source;
        ModelFamily family;
        std::string golden;
        size_t expected;
    };
    std::vector<Row> rows = {
        {Task::A, SourceId::wordnet, ModelFamily::masked, "catalog_A_wordnet_masked.txt", 8},
        {Task::A, SourceId::wordnet, ModelFamily::seq2seq, "catalog_A_wordnet_seq2seq.txt", 8},
        {Task::A, SourceId::wordnet, ModelFamily::causal, "catalog_A_wordnet_causal.txt", 8},
        {Task::A, SourceId::wordnet, ModelFamily::causal_answer_suffix,
         "catalog_A_wordnet_causal_answer_suffix.txt", 8},
        {Task::A, SourceId::geonames, ModelFamily::masked, "catalog_A_geonames_masked.txt", 8},
        {Task::A, SourceId::geonames, ModelFamily::seq2seq, "catalog_A_geonames_seq2seq.txt", 8},
        {Task::A, SourceId::geonames, ModelFamily::causal, "catalog_A_geonames_causal.txt", 8},
        {Task::A, SourceId::geonames, ModelFamily::causal_answer_suffix,
         "catalog_A_geonames_causal_answer_suffix.txt", 8},
        {Task::A, SourceId::nci, ModelFamily::masked, "catalog_A_umls_masked.txt", 8},
        {Task::A, SourceId::medcin, ModelFamily::seq2seq, "catalog_A_umls_seq2seq.txt", 8},
        {Task::A, SourceId::snomedct_us, ModelFamily::causal, "catalog_A_umls_causal.txt", 8},
        {Task::A, SourceId::nci, ModelFamily::causal_answer_suffix,
         "catalog_A_umls_causal_answer_suffix.txt", 8},
        {Task::B, SourceId::geonames, ModelFamily::masked, "catalog_B_shared_masked.txt", 8},
        {Task::B, SourceId::umls, ModelFamily::seq2seq, "catalog_B_shared_seq2seq.txt", 8},
        {Task::B, SourceId::schemaorg, ModelFamily::causal, "catalog_B_shared_causal.txt", 8},
        {Task::C, SourceId::umls, ModelFamily::masked, "catalog_C_umls_masked.txt", 1},
        {Task::C, SourceId::umls, ModelFamily::seq2seq, "catalog_C_umls_seq2seq.txt", 1},
        {Task::C, SourceId::umls, ModelFamily::causal, "catalog_C_umls_causal.txt", 1},
    };
    for (auto& row : rows) {
        std::ifstream in(repo_dir() / "tests" / "golden" / row.golden);
        if (!in) {
            c.check(false, "golden file present: " + row.golden);
            continue;
        }
        std::vector<std::string> golden;
        std::string line;
        while (std::getline(in, line)) golden.push_back(unescape(line));
        auto catalog = library.catalog(row.task, row.source, row.family);
        c.check(catalog.size() == row.expected,
                row.golden + ": catalog cardinality " + std::to_string(row.expected));
        c.check(golden.size() == catalog.size(), row.golden + ": golden line count");
        for (size_t i = 0; i < catalog.size() && i < golden.size(); ++i) {
            if (catalog[i].pattern != golden[i]) {
                c.check(false, row.golden + " t" + std::to_string(i + 1) + " matches byte-for-byte");
            }
        }
    }

    // Anchors quoted in the build contract, asserted verbatim.
    c.check(library.by_id("A.wordnet.masked.t1").pattern == "{S}. {L} POS is a {MASK} .",
            "task A wordnet t1 wording");
    c.check(library.by_id("B.shared.seq2seq.t1").pattern ==
                "{a} is the superclass of {b}. This statement is a",
            "task B seq2seq t1 wording");
}

void criterion_4_metric_oracle() {
    auto& c = criterion(4, "metric oracle (1,000 random instances at 1e-12)");
    std::mt19937_64 rng(4321);
    const std::vector<std::string> labels{"a", "b", "c", "d", "e"};
    size_t map_mismatch = 0, prf_mismatch = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n = 1 + rng() % 20;
        int k = 1 + static_cast<int>(rng() % 4);
        std::vector<Prediction> preds;
        std::map<std::string, std::set<std::string>> golds;
        std::vector<std::vector<std::string>> ranked_lists;
        std::vector<std::set<std::string>> gold_list;
        std::vector<int> calls;
        std::vector<bool> bool_golds;
        std::map<std::string, bool> bool_gold_map;
        std::vector<Prediction> bool_preds;
        for (size_t i = 0; i < n; ++i) {
            std::string id = "i" + std::to_string(i);
            std::set<std::string> gold;
            size_t gn = 1 + rng() % 3;
            while (gold.size() < gn) gold.insert(labels[rng() % labels.size()]);
            std::vector<std::string> ranked;
            size_t rn = rng() % 5;
            for (size_t r = 0; r < rn; ++r) {
                const std::string& cand = labels[rng() % labels.size()];
                if (std::find(ranked.begin(), ranked.end(), cand) == ranked.end()) {
                    ranked.push_back(cand);
                }
            }
            preds.push_back({id, ranked, "", false});
            golds[id] = gold;
            ranked_lists.push_back(ranked);
            gold_list.push_back(gold);

            int call = static_cast<int>(rng() % 3) - 1;
            bool bg = rng() % 2;
            Prediction bp;
            bp.item_id = id;
            if (call == 1) bp.ranked_labels = {"true"};
            if (call == -1) bp.ranked_labels = {"false"};
            bool_preds.push_back(bp);
            bool_gold_map[id] = bg;
            calls.push_back(call);
            bool_golds.push_back(bg);
        }
        double got = map_at_k(preds, golds, k);
        double want = oracles::mean_ap_at_k(ranked_lists, gold_list, k);
        if (std::abs(got - want) > 1e-12) ++map_mismatch;

        auto p = prf1(bool_preds, bool_gold_map);
        auto w = oracles::prf_reference(calls, bool_golds);
        if (std::abs(p.precision - w.precision) > 1e-12 ||
            std::abs(p.recall - w.recall) > 1e-12 || std::abs(p.f1 - w.f1) > 1e-12) {
            ++prf_mismatch;
        }
    }
    c.check(map_mismatch == 0, "MAP@k matches brute force (mismatches: " +
                                   std::to_string(map_mismatch) + ")");
    c.check(prf_mismatch == 0,
            "PRF matches brute force (mismatches: " + std::to_string(prf_mismatch) + ")");

    // Hand-checked values.
    {
        std::map<std::string, std::set<std::string>> golds{
            {"1", {"a"}}, {"2", {"a"}}, {"3", {"a"}}};
        std::vector<Prediction> preds{{"1", {"a"}, "", false},
                                      {"2", {"b"}, "", false},
                                      {"3", {"a"}, "", false}};
        c.check(std::abs(map_at_k(preds, golds, 1) - 2.0 / 3.0) < 1e-9,
                "3-item MAP@1 = 2/3 exactly");
    }
    {
        std::vector<Prediction> preds;
        std::map<std::string, bool> golds;
        for (size_t i = 0; i < 1360; ++i) {
            std::string id = "p" + std::to_string(i);
            preds.push_back({id, {"true"}, "", false});
            golds[id] = i < 680;
        }
        auto p = prf1(preds, golds);
        c.check(std::abs(p.precision - 0.5) < 1e-12 && p.recall == 1.0 &&
                    std::abs(p.f1 - 2.0 / 3.0) < 1e-12,
                "balanced all-positive F1 = 2/3 exactly");
    }
}

void criterion_5_e2e_oracle_runs(const fs::path& work) {
    auto& c = criterion(5, "end-to-end oracle runs (stubs)");

    auto best_metric = [&](const RunConfig& config) {
        Runner runner(config);
        runner.run();
        auto report = read_json_file(config.output_dir / config.run_id / "reports" / "report.json");
        return report.at("best_metric").get<double>();
    };

    // Task A across all five sources with the gold-echo stub.
    {
        auto dir = fixtures::fresh_dir("acc5_wn");
        auto f = fixtures::make_wn18rr(dir, 120, 40);
        auto config = base_runner_config(work, "acc5-wordnet");
        config.task = Task::A;
        config.source = SourceId::wordnet;
        config.source_files = {{"train", f.train.string()},
                               {"valid", f.valid.string()},
                               {"test", f.test.string()}};
        c.check(best_metric(config) == 1.0, "wordnet stub_echo_gold MAP@1 = 1.000");
    }
    {
        auto dir = fixtures::fresh_dir("acc5_geo");
        auto f = fixtures::make_geonames(dir, 60, 120);
        auto config = base_runner_config(work, "acc5-geonames");
        config.task = Task::A;
        config.source = SourceId::geonames;
        config.source_files = {{"features", f.features.string()},
                               {"country_info", f.country_info.string()}};
        config.split = {0.2, 7};
        c.check(best_metric(config) == 1.0, "geonames stub_echo_gold MAP@1 = 1.000");
    }
    for (auto sub : {UmlsSub::nci, UmlsSub::medcin, UmlsSub::snomedct_us}) {
        auto dir = fixtures::fresh_dir(std::string("acc5_") + sab_of(sub));
        auto f = fixtures::make_umls(dir, 60);
        // The fixture's concept rows are NCI; clone them under the other SABs.
        if (sub != UmlsSub::nci) {
            std::string body = slurp(f.paths.mrconso);
            size_t pos = 0;
            std::string from = "|NCI|", to = std::string("|") + sab_of(sub) + "|";
            while ((pos = body.find(from, pos)) != std::string::npos) {
                body.replace(pos, from.size(), to);
                pos += to.size();
            }
            std::ofstream out(f.paths.mrconso, std::ios::trunc);
            out << body;
        }
        auto config = base_runner_config(work, std::string("acc5-") + sab_of(sub));
        config.task = Task::A;
        config.source = sub == UmlsSub::nci      ? SourceId::nci
                        : sub == UmlsSub::medcin ? SourceId::medcin
                                                 : SourceId::snomedct_us;
        config.source_files = {{"mrconso", f.paths.mrconso.string()},
                               {"mrsty", f.paths.mrsty.string()},
                               {"srdef", f.paths.srdef.string()},
                               {"srstr", f.paths.srstr.string()}};
        config.split = {0.2, 7};
        c.check(best_metric(config) == 1.0,
                std::string(sab_of(sub)) + " stub_echo_gold MAP@1 = 1.000");
    }

    // Task B across its three sources.
    {
        auto dir = fixtures::fresh_dir("acc5_geo_b");
        auto f = fixtures::make_geonames(dir, 100, 0);
        auto config = base_runner_config(work, "acc5-geonames-b");
        config.task = Task::B;
        config.source = SourceId::geonames;
        config.source_files = {{"features", f.features.string()},
                               {"country_info", f.country_info.string()}};
        config.split = {0.8, 7};
        c.check(best_metric(config) == 1.0, "geonames task B stub_echo_gold F1 = 1.000");
    }
    {
        auto dir = fixtures::fresh_dir("acc5_umls_b");
        auto f = fixtures::make_umls(dir, 4);
        auto config = base_runner_config(work, "acc5-umls-b");
        config.task = Task::B;
        config.source = SourceId::umls;
        config.source_files = {{"srdef", f.paths.srdef.string()},
                               {"srstr", f.paths.srstr.string()}};
        config.split = {0.8, 7};
        c.check(best_metric(config) == 1.0, "umls task B stub_echo_gold F1 = 1.000");
    }
    {
        auto dir = fixtures::fresh_dir("acc5_so_b");
        auto f = fixtures::make_schemaorg(dir);
        auto config = base_runner_config(work, "acc5-schemaorg-b");
        config.task = Task::B;
        config.source = SourceId::schemaorg;
        config.source_files = {{"types", f.types_csv.string()}};
        config.split = {0.8, 7};
        config.template_selection = "B.shared.seq2seq.t1";  // 5,340 items; one template
        c.check(best_metric(config) == 1.0, "schema.org task B stub_echo_gold F1 = 1.000");
    }

    // Task C.
    {
        auto dir = fixtures::fresh_dir("acc5_umls_c");
        auto f = fixtures::make_umls(dir, 4);
        auto config = base_runner_config(work, "acc5-umls-c");
        config.task = Task::C;
        config.source = SourceId::umls;
        config.source_files = {{"srdef", f.paths.srdef.string()},
                               {"srstr", f.paths.srstr.string()}};
        config.split = {0.8, 7};
        config.negative_count = 53;
        c.check(best_metric(config) == 1.0, "umls task C stub_echo_gold F1 = 1.000");
    }

    // stub_constant closed forms on a balanced task B set.
    {
        auto dir = fixtures::fresh_dir("acc5_const");
        auto f = fixtures::make_geonames(dir, 100, 0);
        auto config = base_runner_config(work, "acc5-constant");
        config.task = Task::B;
        config.source = SourceId::geonames;
        config.source_files = {{"features", f.features.string()},
                               {"country_info", f.country_info.string()}};
        config.split = {0.8, 7};
        config.backend.kind = BackendKind::stub_constant;
        config.backend.stub_constant_text = "true";
        config.template_selection = "B.shared.seq2seq.t1";
        Runner runner(config);
        runner.run();
        auto report =
            read_json_file(work / "out" / "acc5-constant" / "reports" / "report.json");
        auto& r = report.at("per_template").at(0);
        bool ok = std::abs(r.at("precision").get<double>() - 0.5) < 1e-12 &&
                  r.at("recall").get<double>() == 1.0 &&
                  std::abs(r.at("f1").get<double>() - 2.0 / 3.0) < 1e-9;
        c.check(ok, "stub_constant(true) on balanced set scores P=0.5 R=1 F1=2/3");
    }

    // Full-scale wordnet-shaped stub run under 60 seconds.
    {
        auto dir = fixtures::fresh_dir("acc5_full");
        auto f = fixtures::make_wn18rr(dir, 40559, 9470);
        auto config = base_runner_config(work, "acc5-wordnet-full");
        config.task = Task::A;
        config.source = SourceId::wordnet;
        config.source_files = {{"train", f.train.string()},
                               {"valid", f.valid.string()},
                               {"test", f.test.string()}};
        auto start = std::chrono::steady_clock::now();
        Runner runner(config);
        auto manifest = runner.run();
        double elapsed = seconds_since(start);
        auto report =
            read_json_file(work / "out" / "acc5-wordnet-full" / "reports" / "report.json");
        c.check(report.at("best_metric").get<double>() == 1.0,
                "full-scale wordnet stub MAP@1 = 1.000");
        c.check(manifest.items_test == 9470, "full-scale wordnet test partition is 9,470 items");
        c.check(elapsed < 60.0,
                "full wordnet stub run under 60s (took " + std::to_string(elapsed) + "s)");
        c.note("full wordnet stub run (75,760 prompts) in " + std::to_string(elapsed) + "s");
    }
}

void criterion_6_replay_determinism(const fs::path& work) {
    auto& c = criterion(6, "replay determinism with a warm cache");

    httplib::Server server;
    std::atomic<size_t> requests{0};
    server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++requests;
        auto body = ojson::parse(req.body);
        std::string prompt = body.at("prompt").get<std::string>();
        // Deterministic content derived from the prompt.
        std::string answer = prompt.find("POS") != std::string::npos ? "noun" : "unknown";
        res.set_content(ojson{{"choices", ojson::array({ojson{{"text", answer}}})}}.dump(),
                        "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto dir = fixtures::fresh_dir("acc6_wn");
    auto f = fixtures::make_wn18rr(dir, 80, 30);
    auto config = base_runner_config(work, "acc6-run1");
    config.task = Task::A;
    config.source = SourceId::wordnet;
    config.source_files = {{"train", f.train.string()},
                           {"valid", f.valid.string()},
                           {"test", f.test.string()}};
    config.backend.backend_id = "wire";
    config.backend.kind = BackendKind::completion;
    config.backend.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
    config.backend.model_name = "acc6";
    config.cache_dir = work / "cache" / "acc6";

    Runner first(config);
    auto m1 = first.run();
    size_t cold_requests = requests.load();
    c.check(cold_requests > 0, "cold run reaches the backend");

    auto config2 = config;
    config2.run_id = "acc6-run2";
    Runner second(config2);
    auto m2 = second.run();
    size_t warm_requests = requests.load() - cold_requests;
    c.check(warm_requests == 0, "warm run makes zero network requests (instrumented counter: " +
                                    std::to_string(warm_requests) + ")");
    c.check(m2.wire_calls == 0, "warm run records zero backend calls in its manifest");

    auto r1 = work / "out" / "acc6-run1" / "reports";
    auto r2 = work / "out" / "acc6-run2" / "reports";
    c.check(slurp(r1 / "report.json") == slurp(r2 / "report.json"),
            "reports byte-identical across warm replays");
    c.check(slurp(r1 / "per_item.jsonl") == slurp(r2 / "per_item.jsonl"),
            "per-item ledgers byte-identical across warm replays");
    c.check(slurp(work / "out" / "acc6-run1" / "responses" / "responses.jsonl") ==
                slurp(work / "out" / "acc6-run2" / "responses" / "responses.jsonl"),
            "response logs byte-identical across warm replays");

    server.stop();
    server_thread.join();
}

void criterion_7_live_smoke(const fs::path& work) {
    auto& c = criterion(7, "live smoke check (non-gating by design)");
    auto endpoint = env("OLBENCH_LIVE_ENDPOINT");
    if (!endpoint) {
        c.note("no OLBENCH_LIVE_ENDPOINT set; live score not recorded (never gates)");
        return;
    }
    try {
        auto dir = fixtures::fresh_dir("acc7_wn");
        auto f = fixtures::make_wn18rr(dir, 40, 20);
        auto config = base_runner_config(work, "acc7-live");
        config.task = Task::A;
        config.source = SourceId::wordnet;
        config.source_files = {{"train", f.train.string()},
                               {"valid", f.valid.string()},
                               {"test", f.test.string()}};
        config.backend.backend_id = "live";
        config.backend.kind = BackendKind::completion;
        config.backend.endpoint_url = endpoint;
        config.backend.model_name = env("OLBENCH_LIVE_MODEL").value_or("default");
        config.template_selection = "A.wordnet.causal.t5";
        Runner runner(config);
        runner.run();
        auto report = read_json_file(work / "out" / "acc7-live" / "reports" / "report.json");
        c.note("live MAP@1 recorded alongside its manifest: " +
               std::to_string(report.at("best_metric").get<double>()) +
               " (recorded, never asserted)");
    } catch (const std::exception& e) {
        c.note(std::string("live smoke attempt failed (non-gating): ") + e.what());
    }
}

}  // namespace

int main() {
    auto work = fixtures::fresh_dir("acceptance_work");
    try {
        criterion_1_dataset_counts(work);
        criterion_2_pair_oracle();
        criterion_3_template_fidelity();
        criterion_4_metric_oracle();
        criterion_5_e2e_oracle_runs(work);
        criterion_6_replay_determinism(work);
        criterion_7_live_smoke(work);
    } catch (const std::exception& e) {
        if (!g_criteria.empty()) {
            g_criteria.back().failed = true;
            g_criteria.back().notes.push_back(std::string("unexpected exception: ") + e.what());
        }
    }

    bool any_failed = false;
    for (auto& c : g_criteria) {
        std::printf("%s criterion %d: %s\n", c.failed ? "FAIL" : "PASS", c.number,
                    c.name.c_str());
        for (auto& n : c.notes) std::printf("       %s\n", n.c_str());
        any_failed |= c.failed;
    }
    return any_failed ? 1 : 0;
}
