// olbench CLI: ingest knowledge sources, build task datasets, inspect prompt
// catalogs, run evaluations, score stored responses, and export finetuning
// samples. Exit codes: 0 success, 1 data error, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "olbench/answers.hpp"
#include "olbench/backend.hpp"
#include "olbench/corpus.hpp"
#include "olbench/datasets.hpp"
#include "olbench/errors.hpp"
#include "olbench/eval.hpp"
#include "olbench/ingest/geonames.hpp"
#include "olbench/ingest/schemaorg.hpp"
#include "olbench/ingest/umls.hpp"
#include "olbench/ingest/wn18rr.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/prompts.hpp"
#include "olbench/runner.hpp"
#include "olbench/version.hpp"

namespace fs = std::filesystem;
using namespace olbench;

namespace {

void report_warnings(const SourceCorpus& corpus) {
    for (auto& [key, count] : corpus.stats.warnings) {
        std::cerr << "warning: " << key << ": " << count << "\n";
    }
}

void write_corpus_outputs(const SourceCorpus& corpus, const std::string& out,
                          const std::string& taxonomy_out, const std::string& relations_out) {
    if (!out.empty()) {
        write_corpus_jsonl(corpus, out);
        std::cout << "wrote " << corpus.records.size() << " records to " << out << "\n";
    }
    if (!taxonomy_out.empty() && corpus.taxonomy) {
        write_json_file(taxonomy_out, taxonomy_to_json(*corpus.taxonomy));
        std::cout << "wrote taxonomy (" << corpus.taxonomy->nodes.size() << " nodes, "
                  << corpus.taxonomy->level_count << " levels) to " << taxonomy_out << "\n";
    }
    if (!relations_out.empty() && !corpus.relations.empty()) {
        write_relations_jsonl(corpus.relations, relations_out);
        std::cout << "wrote " << corpus.relations.size() << " relation assertions to "
                  << relations_out << "\n";
    }
    std::cout << "type inventory: " << corpus.type_inventory.size() << "\n";
    report_warnings(corpus);
}

ojson read_config_json(const std::string& path) {
    try {
        return read_json_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

int dispatch(CLI::App& app, int argc, char** argv) {
    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ontology-learning LLM evaluation harness"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // ---- ingest ------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "parse a raw knowledge source");
    ingest->require_subcommand(1);

    struct {
        std::string train, valid, test, gloss, out;
    } wn;
    auto* ingest_wn = ingest->add_subcommand("wn18rr", "WN18RR triple dump");
    ingest_wn->add_option("--train", wn.train)->required();
    ingest_wn->add_option("--valid", wn.valid)->required();
    ingest_wn->add_option("--test", wn.test)->required();
    ingest_wn->add_option("--gloss", wn.gloss, "optional entity<TAB>gloss file");
    ingest_wn->add_option("--out", wn.out)->required();
    ingest_wn->callback([&] {
        std::optional<fs::path> gloss;
        if (!wn.gloss.empty()) gloss = wn.gloss;
        auto corpus = parse_wn18rr(wn.train, wn.valid, wn.test, gloss);
        write_corpus_outputs(corpus, wn.out, "", "");
    });

    struct {
        std::string features, country_info, out, taxonomy_out;
    } geo;
    auto* ingest_geo = ingest->add_subcommand("geonames", "GeoNames main dump");
    ingest_geo->add_option("--features", geo.features)->required();
    ingest_geo->add_option("--country-info", geo.country_info)->required();
    ingest_geo->add_option("--out", geo.out)->required();
    ingest_geo->add_option("--taxonomy-out", geo.taxonomy_out);
    ingest_geo->callback([&] {
        auto corpus = parse_geonames(geo.features, geo.country_info);
        write_corpus_outputs(corpus, geo.out, geo.taxonomy_out, "");
    });

    struct {
        std::string mrconso, mrsty, srdef, srstr, sab, out, taxonomy_out, relations_out;
    } um;
    auto* ingest_umls = ingest->add_subcommand("umls", "UMLS RRF files (user-supplied)");
    ingest_umls->add_option("--mrconso", um.mrconso)->required();
    ingest_umls->add_option("--mrsty", um.mrsty)->required();
    ingest_umls->add_option("--srdef", um.srdef)->required();
    ingest_umls->add_option("--srstr", um.srstr)->required();
    ingest_umls->add_option("--sab", um.sab, "nci | medcin | snomedct_us")->required();
    ingest_umls->add_option("--out", um.out)->required();
    ingest_umls->add_option("--taxonomy-out", um.taxonomy_out);
    ingest_umls->add_option("--relations-out", um.relations_out);
    ingest_umls->callback([&] {
        UmlsPaths paths{um.mrconso, um.mrsty, um.srdef, um.srstr};
        auto corpus = parse_umls(paths, umls_sub_from_string(um.sab));
        write_corpus_outputs(corpus, um.out, um.taxonomy_out, um.relations_out);
    });

    struct {
        std::string types, out, taxonomy_out;
    } so;
    auto* ingest_so = ingest->add_subcommand("schemaorg", "schema.org vocabulary export");
    ingest_so->add_option("--types", so.types)->required();
    ingest_so->add_option("--out", so.out, "corpus output (no records for this source)");
    ingest_so->add_option("--taxonomy-out", so.taxonomy_out)->required();
    ingest_so->callback([&] {
        auto corpus = parse_schemaorg(so.types);
        write_corpus_outputs(corpus, so.out, so.taxonomy_out, "");
    });

    // ---- build -------------------------------------------------------------
    auto* build = app.add_subcommand("build", "materialize task datasets");
    build->require_subcommand(1);

    struct {
        std::string corpus, out;
        double test_fraction = 0.2;
        uint64_t seed = 7;
        bool presplit = false;
    } ba;
    auto* build_a = build->add_subcommand("term-typing", "Task A items from a corpus");
    build_a->add_option("--corpus", ba.corpus)->required();
    build_a->add_option("--out", ba.out)->required();
    build_a->add_option("--test-fraction", ba.test_fraction);
    build_a->add_option("--seed", ba.seed);
    build_a->add_flag("--keep-partitions", ba.presplit,
                      "trust partitions already present in the corpus");
    build_a->callback([&] {
        auto corpus = read_corpus_jsonl(ba.corpus);
        bool unsplit = std::all_of(corpus.records.begin(), corpus.records.end(),
                                   [](const TermRecord& r) { return r.partition == Partition::unsplit; });
        if (unsplit && !ba.presplit) {
            split_corpus_records(corpus, SplitSpec{ba.test_fraction, ba.seed});
        }
        auto items = build_term_typing(corpus);
        write_items_jsonl(items, ba.out);
        size_t train = 0, test = 0;
        for (auto& it : items) {
            if (it.partition == Partition::train) ++train;
            if (it.partition == Partition::test) ++test;
        }
        std::cout << "wrote " << items.size() << " items (" << train << " train / " << test
                  << " test) to " << ba.out << "\n";
    });

    struct {
        std::string taxonomy, out;
        double test_fraction = 0.8;
        uint64_t seed = 7;
        int max_gap = 0;
    } bb;
    auto* build_b = build->add_subcommand("taxonomy-pairs", "Task B pairs from a taxonomy");
    build_b->add_option("--taxonomy", bb.taxonomy)->required();
    build_b->add_option("--out", bb.out)->required();
    build_b->add_option("--test-fraction", bb.test_fraction);
    build_b->add_option("--seed", bb.seed);
    build_b->add_option("--closure-max-gap", bb.max_gap, "0 = full transitive closure");
    build_b->callback([&] {
        auto taxonomy = taxonomy_from_json(read_json_file(bb.taxonomy));
        auto pairs = build_taxonomy_pairs(taxonomy, bb.max_gap);
        size_t positives = 0;
        for (auto& p : pairs) positives += p.label ? 1 : 0;
        auto [train, test] = split_dataset(std::move(pairs), SplitSpec{bb.test_fraction, bb.seed});
        std::vector<TypePairItem> all = train;
        all.insert(all.end(), test.begin(), test.end());
        std::sort(all.begin(), all.end(),
                  [](auto& x, auto& y) { return x.item_id < y.item_id; });
        write_items_jsonl(all, bb.out);
        std::cout << "wrote " << all.size() << " pairs (" << positives << " positive / "
                  << all.size() - positives << " negative; " << train.size() << " train / "
                  << test.size() << " test) to " << bb.out << "\n";
    });

    struct {
        std::string relations, taxonomy, out;
        size_t negatives = 1896;
        uint64_t neg_seed = 7;
        double test_fraction = 0.8;
        uint64_t seed = 7;
    } bc;
    auto* build_c = build->add_subcommand("relation-triples", "Task C triples from assertions");
    build_c->add_option("--relations", bc.relations)->required();
    build_c->add_option("--taxonomy", bc.taxonomy)->required();
    build_c->add_option("--out", bc.out)->required();
    build_c->add_option("--negatives", bc.negatives);
    build_c->add_option("--negative-seed", bc.neg_seed);
    build_c->add_option("--test-fraction", bc.test_fraction);
    build_c->add_option("--seed", bc.seed);
    build_c->callback([&] {
        auto relations = read_relations_jsonl(bc.relations);
        auto taxonomy = taxonomy_from_json(read_json_file(bc.taxonomy));
        auto triples = build_relation_triples(relations, taxonomy, bc.negatives, bc.neg_seed);
        auto [train, test] = split_dataset(std::move(triples), SplitSpec{bc.test_fraction, bc.seed});
        std::vector<RelationTripleItem> all = train;
        all.insert(all.end(), test.begin(), test.end());
        std::sort(all.begin(), all.end(),
                  [](auto& x, auto& y) { return x.item_id < y.item_id; });
        write_items_jsonl(all, bc.out);
        std::cout << "wrote " << all.size() << " triples (" << train.size() << " train / "
                  << test.size() << " test) to " << bc.out << "\n";
    });

    // ---- templates ----------------------------------------------------------
    auto* templates = app.add_subcommand("templates", "inspect prompt template catalogs");
    templates->require_subcommand(1);
    struct {
        std::string task, source, family, dir = "data/templates";
    } td;
    auto* templates_dump = templates->add_subcommand("dump", "print one catalog as JSONL");
    templates_dump->add_option("--task", td.task)->required();
    templates_dump->add_option("--source", td.source)->required();
    templates_dump->add_option("--family", td.family)->required();
    templates_dump->add_option("--templates-dir", td.dir);
    templates_dump->callback([&] {
        TemplateLibrary library(td.dir);
        auto catalog = library.catalog(task_from_string(td.task), source_id_from_string(td.source),
                                       family_from_string(td.family));
        for (auto& t : catalog) std::cout << template_to_json(t).dump() << "\n";
    });

    // ---- run ----------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "execute a full evaluation run");
    struct {
        std::string config;
        std::string run_id, output_dir, cache_dir, selection;
        int parallelism = -1;
        int k = -1;
        int64_t seed = -1;
    } rc;
    run_cmd->add_option("--config", rc.config, "run config JSON")->required();
    run_cmd->add_option("--run-id", rc.run_id, "override run_id");
    run_cmd->add_option("--output-dir", rc.output_dir, "override output_dir");
    run_cmd->add_option("--cache-dir", rc.cache_dir, "override cache_dir");
    run_cmd->add_option("--template-selection", rc.selection, "override template_selection");
    run_cmd->add_option("--parallelism", rc.parallelism, "override parallelism");
    run_cmd->add_option("--k", rc.k, "override k");
    run_cmd->add_option("--split-seed", rc.seed, "override split seed");
    run_cmd->callback([&] {
        RunConfig config = run_config_from_json(read_config_json(rc.config));
        if (!rc.run_id.empty()) config.run_id = rc.run_id;
        if (!rc.output_dir.empty()) config.output_dir = rc.output_dir;
        if (!rc.cache_dir.empty()) config.cache_dir = rc.cache_dir;
        if (!rc.selection.empty()) config.template_selection = rc.selection;
        if (rc.parallelism > 0) config.parallelism = rc.parallelism;
        if (rc.k > 0) config.k = rc.k;
        if (rc.seed >= 0) config.split.seed = static_cast<uint64_t>(rc.seed);
        Runner runner(std::move(config));
        auto manifest = runner.run();
        std::cout << "run " << manifest.run_id << " complete: " << manifest.work_items
                  << " prompts, " << manifest.wire_calls << " backend calls, "
                  << manifest.cache_hits << " cache hits\n";
        auto report = report_run(runner.run_dir());
        std::cout << report.text;
    });

    // ---- score ---------------------------------------------------------------
    auto* score_cmd = app.add_subcommand("score", "score stored responses against a dataset");
    struct {
        std::string task, source, responses, dataset, answers_dir = "data/answers", out;
        int k = 1;
    } sc;
    score_cmd->add_option("--task", sc.task)->required();
    score_cmd->add_option("--source", sc.source)->required();
    score_cmd->add_option("--responses", sc.responses)->required();
    score_cmd->add_option("--dataset", sc.dataset)->required();
    score_cmd->add_option("--answers-dir", sc.answers_dir);
    score_cmd->add_option("--out", sc.out, "report JSON output")->required();
    score_cmd->add_option("--k", sc.k);
    score_cmd->callback([&] {
        Task task = task_from_string(sc.task);
        SourceId source = source_id_from_string(sc.source);
        std::vector<RawResponse> responses;
        for_each_jsonl(sc.responses,
                       [&](const ojson& j, size_t) { responses.push_back(response_from_json(j)); });

        ScoreDataset dataset;
        dataset.dataset_id = std::string(to_string(task)) + "." + to_string(source);
        std::vector<TermTypingItem> a_items;
        std::vector<TypePairItem> b_items;
        std::vector<RelationTripleItem> c_items;
        AnswerSpace space;
        fs::path answers(sc.answers_dir);
        if (task == Task::A) {
            std::set<std::string> inventory;
            for_each_jsonl(sc.dataset, [&](const ojson& j, size_t) {
                a_items.push_back(term_item_from_json(j, source));
                for (auto& g : a_items.back().gold_types) inventory.insert(g);
            });
            dataset.task = 'A';
            dataset.term_items = &a_items;
            std::string file = source == SourceId::wordnet    ? "wordnet.json"
                               : source == SourceId::geonames ? "geonames.json"
                                                              : "umls.json";
            space = term_answer_space(inventory, answers / file);
        } else if (task == Task::B) {
            for_each_jsonl(sc.dataset,
                           [&](const ojson& j, size_t) { b_items.push_back(pair_item_from_json(j)); });
            dataset.task = 'B';
            dataset.pair_items = &b_items;
            space = boolean_answer_space(answers / "boolean.json", 'B');
        } else {
            for_each_jsonl(sc.dataset, [&](const ojson& j, size_t) {
                c_items.push_back(triple_item_from_json(j));
            });
            dataset.task = 'C';
            dataset.triple_items = &c_items;
            space = boolean_answer_space(answers / "boolean.json", 'C');
        }
        auto score = score_run(responses, dataset, space, sc.k);
        write_json_file(sc.out, run_score_to_json(score));
        std::cout << "best template " << score.best_template_id << " metric " << score.best_metric
                  << "\n";
    });

    // ---- report ----------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "summarize a run directory");
    struct {
        std::string run_dir;
        bool json = false;
    } rp;
    report_cmd->add_option("--run-dir", rp.run_dir)->required();
    report_cmd->add_flag("--json", rp.json, "emit the machine-readable report");
    report_cmd->callback([&] {
        auto out = report_run(rp.run_dir);
        if (rp.json) std::cout << out.machine.dump(2) << "\n";
        else std::cout << out.text;
    });

    // ---- export-finetune ---------------------------------------------------------
    auto* ft = app.add_subcommand("export-finetune", "export instruction-tuning samples");
    struct {
        std::string config, out;
        size_t shots = 8;
        uint64_t seed = 7;
    } fc;
    ft->add_option("--config", fc.config,
                   "JSON: {templates_dir, family, mask_token?, sources: "
                   "[{name, task, source, dataset}]}")
        ->required();
    ft->add_option("--out", fc.out)->required();
    ft->add_option("--shots", fc.shots);
    ft->add_option("--seed", fc.seed);
    ft->callback([&] {
        ojson j = read_config_json(fc.config);
        TemplateLibrary library(j.value("templates_dir", std::string("data/templates")));
        ModelFamily family = family_from_string(j.value("family", std::string("seq2seq")));
        std::string mask_token = j.value("mask_token", std::string("[MASK]"));
        std::vector<FinetuneSource> sources;
        for (auto& s : j.at("sources")) {
            FinetuneSource src;
            src.name = s.at("name").get<std::string>();
            src.task = task_from_string(s.at("task").get<std::string>());
            src.source = source_id_from_string(s.at("source").get<std::string>());
            std::string dataset = s.at("dataset").get<std::string>();
            if (src.task == Task::A) {
                for_each_jsonl(dataset, [&](const ojson& row, size_t) {
                    src.a_items.push_back(term_item_from_json(row, src.source));
                });
            } else if (src.task == Task::B) {
                for_each_jsonl(dataset, [&](const ojson& row, size_t) {
                    src.b_items.push_back(pair_item_from_json(row));
                });
            } else {
                for_each_jsonl(dataset, [&](const ojson& row, size_t) {
                    src.c_items.push_back(triple_item_from_json(row));
                });
            }
            sources.push_back(std::move(src));
        }
        export_finetune_samples(sources, fc.shots, fc.seed, library, family, mask_token, fc.out);
        std::cout << "exported " << sources.size() * fc.shots << " samples to " << fc.out << "\n";
    });

    return dispatch(app, argc, argv);
}
