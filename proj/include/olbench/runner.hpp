#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "olbench/answers.hpp"
#include "olbench/backend.hpp"
#include "olbench/corpus.hpp"
#include "olbench/datasets.hpp"
#include "olbench/errors.hpp"
#include "olbench/eval.hpp"
#include "olbench/hash.hpp"
#include "olbench/ingest/geonames.hpp"
#include "olbench/ingest/schemaorg.hpp"
#include "olbench/ingest/umls.hpp"
#include "olbench/ingest/wn18rr.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/prompts.hpp"
#include "olbench/version.hpp"

namespace olbench {

struct RunConfig {
    std::string run_id;
    Task task = Task::A;
    SourceId source = SourceId::wordnet;
    std::map<std::string, std::string> source_files;  // role -> path, per source kind
    std::filesystem::path templates_dir = "data/templates";
    std::filesystem::path answers_dir = "data/answers";
    std::string template_selection = "best-of-8";  // "all" | "best-of-8" | comma-separated ids
    ModelFamily model_family = ModelFamily::seq2seq;
    std::string mask_token = "[MASK]";
    BackendConfig backend;
    SplitSpec split;
    size_t negative_count = 1896;  // Task C negative draw
    uint64_t negative_seed = 7;
    int closure_max_gap = 0;  // 0 = full transitive closure
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path output_dir = "out";
    int parallelism = 4;
    int k = 1;
};

inline RunConfig run_config_from_json(const ojson& j) {
    RunConfig c;
    c.run_id = j.at("run_id").get<std::string>();
    c.task = task_from_string(j.at("task").get<std::string>());
    c.source = source_id_from_string(j.at("source").get<std::string>());
    if (j.contains("source_files")) {
        for (auto& [k, v] : j.at("source_files").items()) {
            c.source_files[k] = v.get<std::string>();
        }
    }
    if (j.contains("templates_dir")) c.templates_dir = j.at("templates_dir").get<std::string>();
    if (j.contains("answers_dir")) c.answers_dir = j.at("answers_dir").get<std::string>();
    if (j.contains("template_selection")) {
        c.template_selection = j.at("template_selection").get<std::string>();
    }
    if (j.contains("model_family")) {
        c.model_family = family_from_string(j.at("model_family").get<std::string>());
    }
    if (j.contains("mask_token")) c.mask_token = j.at("mask_token").get<std::string>();
    c.backend = backend_config_from_json(j.at("backend"));
    if (j.contains("split")) {
        auto& s = j.at("split");
        if (s.contains("test_fraction")) c.split.test_fraction = s.at("test_fraction").get<double>();
        if (s.contains("seed")) c.split.seed = s.at("seed").get<uint64_t>();
    }
    if (j.contains("negative_count")) c.negative_count = j.at("negative_count").get<size_t>();
    if (j.contains("negative_seed")) c.negative_seed = j.at("negative_seed").get<uint64_t>();
    if (j.contains("closure_max_gap")) c.closure_max_gap = j.at("closure_max_gap").get<int>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("parallelism")) c.parallelism = j.at("parallelism").get<int>();
    if (j.contains("k")) c.k = j.at("k").get<int>();
    return c;
}

inline ojson run_config_to_json(const RunConfig& c) {
    ojson j;
    j["run_id"] = c.run_id;
    j["task"] = to_string(c.task);
    j["source"] = to_string(c.source);
    ojson files = ojson::object();
    for (auto& [k, v] : c.source_files) files[k] = v;
    j["source_files"] = std::move(files);
    j["templates_dir"] = c.templates_dir.string();
    j["answers_dir"] = c.answers_dir.string();
    j["template_selection"] = c.template_selection;
    j["model_family"] = to_string(c.model_family);
    j["mask_token"] = c.mask_token;
    j["backend"] = backend_config_to_json(c.backend);
    j["split"] = ojson{{"test_fraction", c.split.test_fraction}, {"seed", c.split.seed}};
    j["negative_count"] = c.negative_count;
    j["negative_seed"] = c.negative_seed;
    j["closure_max_gap"] = c.closure_max_gap;
    j["cache_dir"] = c.cache_dir.string();
    j["output_dir"] = c.output_dir.string();
    j["parallelism"] = c.parallelism;
    j["k"] = c.k;
    return j;
}

struct RunManifest {
    std::string run_id;
    std::string artifact_version = kVersion;
    ojson config_snapshot;
    std::string config_hash;
    std::string dataset_hash;
    std::string template_catalog_hash;
    std::string started_at;
    std::string finished_at;
    std::map<std::string, std::string> stages;  // stage -> pending|done|failed
    std::string stage_error;
    size_t wire_calls = 0;
    size_t cache_hits = 0;
    size_t items_total = 0;
    size_t items_test = 0;
    size_t work_items = 0;
};

inline ojson manifest_to_json(const RunManifest& m) {
    ojson j;
    j["run_id"] = m.run_id;
    j["artifact_version"] = m.artifact_version;
    j["config"] = m.config_snapshot;
    j["config_hash"] = m.config_hash;
    j["dataset_hash"] = m.dataset_hash;
    j["template_catalog_hash"] = m.template_catalog_hash;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    ojson st = ojson::object();
    for (auto& [k, v] : m.stages) st[k] = v;
    j["stages"] = std::move(st);
    if (!m.stage_error.empty()) j["stage_error"] = m.stage_error;
    j["stats"] = ojson{{"wire_calls", m.wire_calls}, {"cache_hits", m.cache_hits}};
    j["counts"] = ojson{{"items_total", m.items_total},
                        {"items_test", m.items_test},
                        {"work_items", m.work_items}};
    return j;
}

inline RunManifest manifest_from_json(const ojson& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.artifact_version = j.at("artifact_version").get<std::string>();
    m.config_snapshot = j.at("config");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.dataset_hash = j.value("dataset_hash", "");
    m.template_catalog_hash = j.value("template_catalog_hash", "");
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    for (auto& [k, v] : j.at("stages").items()) m.stages[k] = v.get<std::string>();
    m.stage_error = j.value("stage_error", "");
    if (j.contains("stats")) {
        m.wire_calls = j["stats"].value("wire_calls", size_t{0});
        m.cache_hits = j["stats"].value("cache_hits", size_t{0});
    }
    if (j.contains("counts")) {
        m.items_total = j["counts"].value("items_total", size_t{0});
        m.items_test = j["counts"].value("items_test", size_t{0});
        m.work_items = j["counts"].value("work_items", size_t{0});
    }
    return m;
}

// The reference counts for the schema.org taxonomy-pair build are internally
// inconsistent (positives/negatives 2,670/2,670 sum to 5,340, yet the quoted
// split 1,086/4,727 sums to 5,813). Reported next to generated counts, never
// forced to match.
inline constexpr const char* kSchemaOrgCountNote =
    "note: schema.org reference counts are internally inconsistent "
    "(2,670/2,670 positives/negatives vs 1,086/4,727 split); generated counts "
    "are reported as-is and not forced to match";

namespace runner_detail {

inline std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline const std::string& require_file(const RunConfig& c, const std::string& role) {
    auto it = c.source_files.find(role);
    if (it == c.source_files.end()) {
        throw ConfigError("source_files missing role '" + role + "' for source " +
                          to_string(c.source));
    }
    return it->second;
}

// RAII exclusive ownership of a run directory.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
        std::filesystem::create_directories(dir);
        if (std::filesystem::exists(path_)) {
            throw Error("run directory is locked (remove stale " + path_.string() +
                        " if no run is active)");
        }
        std::ofstream out(path_);
        out << "pid " << ::getpid() << "\n";
    }
    ~RunLock() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

inline std::string hash_template_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string material;
    for (auto& f : files) {
        material += f.filename().string() + ":" + sha256_file_hex(f) + "\n";
    }
    return sha256_hex(material);
}

inline std::string stub_gold_text(const TermTypingItem& it) {
    return it.gold_types.empty() ? std::string() : *it.gold_types.begin();
}

}  // namespace runner_detail

/// Executes ingest -> build -> render -> invoke -> score for one RunConfig,
/// writing every artifact under output_dir/run_id. Stages are deterministic
/// and idempotent; re-running after an interruption replays completed
/// invocations from the cache and must reproduce identical outputs.
class Runner {
public:
    explicit Runner(RunConfig config) : config_(std::move(config)) {
        if (config_.run_id.empty()) throw ConfigError("run_id must be set");
        config_.backend.validate();
    }

    std::filesystem::path run_dir() const { return config_.output_dir / config_.run_id; }

    RunManifest run() {
        auto dir = run_dir();
        runner_detail::RunLock lock(dir);
        std::filesystem::create_directories(dir / "datasets");
        std::filesystem::create_directories(dir / "prompts");
        std::filesystem::create_directories(dir / "responses");
        std::filesystem::create_directories(dir / "reports");

        RunManifest manifest;
        manifest.run_id = config_.run_id;
        manifest.config_snapshot = run_config_to_json(config_);
        manifest.config_hash = sha256_hex(manifest.config_snapshot.dump());
        manifest.started_at = runner_detail::now_iso8601();
        for (const char* s : {"ingest", "build", "render", "invoke", "score"}) {
            manifest.stages[s] = "pending";
        }

        // A manifest from an earlier attempt must describe the same config.
        auto manifest_path = dir / "manifest.json";
        std::optional<RunManifest> previous;
        if (std::filesystem::exists(manifest_path)) {
            previous = manifest_from_json(read_json_file(manifest_path));
            if (previous->config_hash != manifest.config_hash) {
                throw IntegrityError("run directory " + dir.string() +
                                     " belongs to a different config (hash mismatch)");
            }
        }

        auto checkpoint = [&]() { write_json_file(manifest_path, manifest_to_json(manifest)); };

        std::string stage = "ingest";
        try {
            stage = "ingest";
            ingest();
            manifest.stages["ingest"] = "done";
            checkpoint();

            stage = "build";
            build();
            manifest.items_total = items_total_;
            manifest.items_test = items_test_;
            manifest.dataset_hash = sha256_file_hex(dir / "datasets" / "items.jsonl");
            if (previous && !previous->dataset_hash.empty() &&
                previous->dataset_hash != manifest.dataset_hash) {
                throw IntegrityError("dataset hash changed on resume: inputs differ from the "
                                     "run this directory was created for");
            }
            manifest.stages["build"] = "done";
            checkpoint();

            stage = "render";
            render_prompts();
            manifest.work_items = work_.size();
            manifest.template_catalog_hash =
                runner_detail::hash_template_dir(config_.templates_dir);
            if (previous && !previous->template_catalog_hash.empty() &&
                previous->template_catalog_hash != manifest.template_catalog_hash) {
                throw IntegrityError("template catalog changed on resume");
            }
            manifest.stages["render"] = "done";
            checkpoint();

            stage = "invoke";
            invoke_all();
            manifest.wire_calls = dispatch_wire_calls_;
            manifest.cache_hits = dispatch_cache_hits_;
            manifest.stages["invoke"] = "done";
            checkpoint();

            stage = "score";
            score();
            manifest.stages["score"] = "done";
            manifest.finished_at = runner_detail::now_iso8601();
            checkpoint();
        } catch (...) {
            manifest.stages[stage] = "failed";
            try {
                std::rethrow_exception(std::current_exception());
            } catch (const std::exception& e) {
                manifest.stage_error = e.what();
            }
            manifest.finished_at = runner_detail::now_iso8601();
            checkpoint();
            throw;
        }
        return manifest;
    }

    const RunScore& last_score() const { return score_; }

private:
    void ingest() {
        switch (config_.source) {
            case SourceId::wordnet: {
                std::optional<std::filesystem::path> gloss;
                if (config_.source_files.count("gloss")) gloss = config_.source_files.at("gloss");
                corpus_ = parse_wn18rr(runner_detail::require_file(config_, "train"),
                                       runner_detail::require_file(config_, "valid"),
                                       runner_detail::require_file(config_, "test"), gloss);
                break;
            }
            case SourceId::geonames:
                corpus_ = parse_geonames(runner_detail::require_file(config_, "features"),
                                         runner_detail::require_file(config_, "country_info"));
                break;
            case SourceId::nci:
            case SourceId::medcin:
            case SourceId::snomedct_us: {
                UmlsPaths paths{runner_detail::require_file(config_, "mrconso"),
                                runner_detail::require_file(config_, "mrsty"),
                                runner_detail::require_file(config_, "srdef"),
                                runner_detail::require_file(config_, "srstr")};
                UmlsSub sub = config_.source == SourceId::nci ? UmlsSub::nci
                              : config_.source == SourceId::medcin ? UmlsSub::medcin
                                                                   : UmlsSub::snomedct_us;
                corpus_ = parse_umls(paths, sub);
                break;
            }
            case SourceId::umls: {
                // The shared semantic network serves Tasks B and C directly.
                if (config_.task == Task::A) {
                    throw ConfigError("task A requires a concrete UMLS subontology "
                                      "(nci, medcin, snomedct_us)");
                }
                corpus_.source_id = SourceId::umls;
                auto net = umls::load_semantic_network(
                    runner_detail::require_file(config_, "srdef"),
                    runner_detail::require_file(config_, "srstr"), corpus_.stats);
                corpus_.taxonomy = std::move(net.taxonomy);
                corpus_.relations = std::move(net.assertions);
                for (auto& n : corpus_.taxonomy->nodes) corpus_.type_inventory.insert(n.label);
                break;
            }
            case SourceId::schemaorg:
                corpus_ = parse_schemaorg(runner_detail::require_file(config_, "types"));
                break;
        }

        auto dir = run_dir() / "datasets";
        if (!corpus_.records.empty()) write_corpus_jsonl(corpus_, dir / "corpus.jsonl");
        if (corpus_.taxonomy) write_json_file(dir / "taxonomy.json", taxonomy_to_json(*corpus_.taxonomy));
        if (!corpus_.relations.empty()) write_relations_jsonl(corpus_.relations, dir / "relations.jsonl");
    }

    void build() {
        auto dir = run_dir() / "datasets";
        switch (config_.task) {
            case Task::A: {
                bool unsplit = std::all_of(corpus_.records.begin(), corpus_.records.end(),
                                           [](const TermRecord& r) {
                                               return r.partition == Partition::unsplit;
                                           });
                if (unsplit) split_corpus_records(corpus_, config_.split);
                a_items_ = build_term_typing(corpus_);
                write_items_jsonl(a_items_, dir / "items.jsonl");
                items_total_ = a_items_.size();
                for (auto& it : a_items_) {
                    if (it.partition == Partition::test) ++items_test_;
                }
                break;
            }
            case Task::B: {
                if (!corpus_.taxonomy) {
                    throw Error(std::string("source ") + to_string(config_.source) +
                                " carries no taxonomy for task B");
                }
                auto pairs = build_taxonomy_pairs(*corpus_.taxonomy, config_.closure_max_gap);
                auto [train, test] = split_dataset(std::move(pairs), config_.split);
                b_items_ = std::move(train);
                b_items_.insert(b_items_.end(), test.begin(), test.end());
                std::sort(b_items_.begin(), b_items_.end(),
                          [](const TypePairItem& x, const TypePairItem& y) {
                              return x.item_id < y.item_id;
                          });
                write_items_jsonl(b_items_, dir / "items.jsonl");
                items_total_ = b_items_.size();
                items_test_ = 0;
                for (auto& it : b_items_) {
                    if (it.partition == Partition::test) ++items_test_;
                }
                break;
            }
            case Task::C: {
                if (!corpus_.taxonomy || corpus_.relations.empty()) {
                    throw Error(std::string("source ") + to_string(config_.source) +
                                " carries no relation assertions for task C");
                }
                auto triples = build_relation_triples(corpus_.relations, *corpus_.taxonomy,
                                                      config_.negative_count,
                                                      config_.negative_seed);
                auto [train, test] = split_dataset(std::move(triples), config_.split);
                c_items_ = std::move(train);
                c_items_.insert(c_items_.end(), test.begin(), test.end());
                std::sort(c_items_.begin(), c_items_.end(),
                          [](const RelationTripleItem& x, const RelationTripleItem& y) {
                              return x.item_id < y.item_id;
                          });
                write_items_jsonl(c_items_, dir / "items.jsonl");
                items_total_ = c_items_.size();
                items_test_ = 0;
                for (auto& it : c_items_) {
                    if (it.partition == Partition::test) ++items_test_;
                }
                break;
            }
        }
    }

    std::vector<PromptTemplate> selected_templates(const TemplateLibrary& library) const {
        auto catalog = library.catalog(config_.task, config_.source, config_.model_family);
        if (config_.template_selection == "all" || config_.template_selection == "best-of-8") {
            return catalog;
        }
        std::vector<PromptTemplate> out;
        for (auto id : split(config_.template_selection, ',')) {
            std::string want(trim(id));
            bool found = false;
            for (auto& t : catalog) {
                if (t.template_id == want) {
                    out.push_back(t);
                    found = true;
                }
            }
            if (!found) {
                throw ConfigError("template_selection names unknown template: " + want);
            }
        }
        if (out.empty()) throw ConfigError("template_selection selected nothing");
        return out;
    }

    void render_prompts() {
        TemplateLibrary library(config_.templates_dir);
        auto templates = selected_templates(library);
        work_.clear();

        std::string mask = config_.model_family == ModelFamily::masked ? config_.mask_token : "";
        auto add = [&](RenderedPrompt prompt, std::optional<std::string> gold) {
            work_.push_back({std::move(prompt), std::move(gold)});
        };
        for (auto& t : templates) {
            switch (config_.task) {
                case Task::A:
                    for (auto& it : a_items_) {
                        if (it.partition != Partition::test) continue;
                        add(render(t, it, mask), runner_detail::stub_gold_text(it));
                    }
                    break;
                case Task::B:
                    for (auto& it : b_items_) {
                        if (it.partition != Partition::test) continue;
                        add(render(t, it, mask), std::string(it.label ? "true" : "false"));
                    }
                    break;
                case Task::C:
                    for (auto& it : c_items_) {
                        if (it.partition != Partition::test) continue;
                        add(render(t, it, mask), std::string(it.label ? "true" : "false"));
                    }
                    break;
            }
        }

        JsonlWriter w(run_dir() / "prompts" / "prompts.jsonl");
        for (auto& item : work_) {
            ojson j;
            j["item_id"] = item.prompt.item_id;
            j["template_id"] = item.prompt.template_id;
            j["text"] = item.prompt.text;
            if (item.prompt.mask_token_used) j["mask_token"] = *item.prompt.mask_token_used;
            w.write(j);
        }
    }

    void invoke_all() {
        CacheStore cache(config_.cache_dir);
        Dispatcher dispatcher(config_.backend, &cache, config_.parallelism);
        if (invoke_fn_) dispatcher.set_invoke_fn(invoke_fn_);
        responses_ = dispatcher.run(work_);
        dispatch_wire_calls_ = dispatcher.stats().wire_calls.load();
        dispatch_cache_hits_ = dispatcher.stats().cache_hits.load();

        JsonlWriter w(run_dir() / "responses" / "responses.jsonl");
        for (auto& r : responses_) w.write(response_to_json(r));
    }

    void score() {
        AnswerSpace space = answer_space();
        ScoreDataset dataset;
        dataset.dataset_id = std::string(to_string(config_.task)) + "." + to_string(config_.source);
        switch (config_.task) {
            case Task::A:
                dataset.task = 'A';
                dataset.term_items = &a_items_;
                break;
            case Task::B:
                dataset.task = 'B';
                dataset.pair_items = &b_items_;
                break;
            case Task::C:
                dataset.task = 'C';
                dataset.triple_items = &c_items_;
                break;
        }
        score_ = score_run(responses_, dataset, space, config_.k);

        auto dir = run_dir() / "reports";
        ojson j = run_score_to_json(score_);
        if (config_.source == SourceId::schemaorg && config_.task == Task::B) {
            j["count_note"] = kSchemaOrgCountNote;
        }
        write_json_file(dir / "report.json", j);
        write_per_item_ledger(score_, dir / "per_item.jsonl");

        std::ofstream summary(dir / "summary.txt");
        summary << summary_text(j);
    }

    AnswerSpace answer_space() const {
        if (config_.task == Task::A) {
            std::string file;
            switch (config_.source) {
                case SourceId::wordnet: file = "wordnet.json"; break;
                case SourceId::geonames: file = "geonames.json"; break;
                default: file = "umls.json"; break;
            }
            return term_answer_space(corpus_.type_inventory, config_.answers_dir / file);
        }
        std::optional<std::filesystem::path> boolean_file;
        auto path = config_.answers_dir / "boolean.json";
        if (std::filesystem::exists(path)) boolean_file = path;
        return boolean_answer_space(boolean_file, config_.task == Task::B ? 'B' : 'C');
    }

    std::string summary_text(const ojson& report) const {
        std::ostringstream out;
        std::string dataset = std::string(to_string(config_.task)) + "." + to_string(config_.source);
        out << "run " << config_.run_id << "  dataset " << dataset << "  backend "
            << config_.backend.backend_id << "\n";
        out << "template          n_items  metric\n";
        for (auto& r : report.at("per_template")) {
            std::string metric;
            if (r.contains("map_at_1")) metric = "MAP@1 " + std::to_string(r["map_at_1"].get<double>());
            else if (r.contains("map_at_k")) metric = "MAP@k " + std::to_string(r["map_at_k"].get<double>());
            else metric = "F1 " + std::to_string(r["f1"].get<double>());
            out << r["template_id"].get<std::string>() << "  " << r["n_items"].get<size_t>()
                << "  " << metric << "\n";
        }
        out << "best: " << report.at("best_template_id").get<std::string>() << " ("
            << report.at("best_metric").get<double>() << ")\n";
        if (report.contains("count_note")) out << report.at("count_note").get<std::string>() << "\n";
        return out.str();
    }

public:
    // Test seam forwarded to the dispatcher.
    void set_invoke_fn(Dispatcher::InvokeFn fn) { invoke_fn_ = std::move(fn); }

private:
    RunConfig config_;
    SourceCorpus corpus_;
    std::vector<TermTypingItem> a_items_;
    std::vector<TypePairItem> b_items_;
    std::vector<RelationTripleItem> c_items_;
    std::vector<WorkItem> work_;
    std::vector<RawResponse> responses_;
    RunScore score_;
    size_t items_total_ = 0;
    size_t items_test_ = 0;
    size_t dispatch_wire_calls_ = 0;
    size_t dispatch_cache_hits_ = 0;
    Dispatcher::InvokeFn invoke_fn_;
};

// ---------------------------------------------------------------------------
// Finetuning-sample export: instruction/target pairs drawn from training
// partitions, shots_per_source per (source, task), seeded and deterministic.
// Templates cycle through the family's catalog so the sample set spans the
// catalog rather than repeating one pattern.

struct FinetuneSource {
    std::string name;
    Task task = Task::A;
    SourceId source = SourceId::wordnet;
    std::vector<TermTypingItem> a_items;
    std::vector<TypePairItem> b_items;
    std::vector<RelationTripleItem> c_items;
};

inline void export_finetune_samples(const std::vector<FinetuneSource>& sources,
                                    size_t shots_per_source, uint64_t seed,
                                    const TemplateLibrary& library, ModelFamily family,
                                    const std::string& mask_token,
                                    const std::filesystem::path& out_path) {
    JsonlWriter w(out_path);
    ojson header;
    header["record"] = "manifest";
    header["sources"] = sources.size();
    header["shots_per_source"] = shots_per_source;
    header["seed"] = seed;
    header["family"] = to_string(family);
    w.write(header);

    std::string mask = family == ModelFamily::masked ? mask_token : "";

    for (auto& src : sources) {
        auto catalog = library.catalog(src.task, src.source, family);

        struct Shot {
            RenderedPrompt prompt;
            std::string target;
        };
        std::vector<std::string> ids;
        auto pick_ids = [&](auto& items) {
            for (auto& it : items) {
                if (it.partition == Partition::train) ids.push_back(it.item_id);
            }
        };
        switch (src.task) {
            case Task::A: pick_ids(src.a_items); break;
            case Task::B: pick_ids(src.b_items); break;
            case Task::C: pick_ids(src.c_items); break;
        }
        if (shots_per_source > ids.size()) {
            throw CapacityError("source " + src.name + " has only " +
                                std::to_string(ids.size()) + " training items, cannot draw " +
                                std::to_string(shots_per_source));
        }
        std::sort(ids.begin(), ids.end());
        std::mt19937_64 rng(seed ^ fnv1a64(src.name + "/" + to_string(src.task)));
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(shots_per_source);
        std::sort(ids.begin(), ids.end());

        std::set<std::string> chosen(ids.begin(), ids.end());
        size_t shot_index = 0;
        auto emit = [&](const RenderedPrompt& prompt, const std::string& target) {
            ojson j;
            j["source"] = src.name;
            j["task"] = to_string(src.task);
            j["item_id"] = prompt.item_id;
            j["template_id"] = prompt.template_id;
            j["instruction"] = prompt.text;
            j["target"] = target;
            w.write(j);
            ++shot_index;
        };
        switch (src.task) {
            case Task::A:
                for (auto& it : src.a_items) {
                    if (!chosen.count(it.item_id)) continue;
                    auto& t = catalog[shot_index % catalog.size()];
                    emit(render(t, it, mask),
                         it.gold_types.empty() ? "" : *it.gold_types.begin());
                }
                break;
            case Task::B:
                for (auto& it : src.b_items) {
                    if (!chosen.count(it.item_id)) continue;
                    auto& t = catalog[shot_index % catalog.size()];
                    emit(render(t, it, mask), it.label ? "true" : "false");
                }
                break;
            case Task::C:
                for (auto& it : src.c_items) {
                    if (!chosen.count(it.item_id)) continue;
                    auto& t = catalog[shot_index % catalog.size()];
                    emit(render(t, it, mask), it.label ? "true" : "false");
                }
                break;
        }
    }
}

// ---------------------------------------------------------------------------
// Reporting over a finished (or interrupted) run directory.

struct ReportOutput {
    std::string text;
    ojson machine;
};

inline ReportOutput report_run(const std::filesystem::path& run_dir) {
    auto manifest_path = run_dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw Error("unknown run: no manifest at " + manifest_path.string());
    }
    RunManifest manifest = manifest_from_json(read_json_file(manifest_path));
    RunConfig config = run_config_from_json(manifest.config_snapshot);

    // Manifest integrity: the dataset the reports describe must still be
    // the dataset on disk.
    auto items_path = run_dir / "datasets" / "items.jsonl";
    if (!manifest.dataset_hash.empty() && std::filesystem::exists(items_path)) {
        std::string recomputed = sha256_file_hex(items_path);
        if (recomputed != manifest.dataset_hash) {
            throw IntegrityError("dataset file no longer matches the manifest hash: " +
                                 items_path.string());
        }
    }

    ReportOutput out;
    out.machine["run_id"] = manifest.run_id;
    out.machine["stages"] = manifest_to_json(manifest)["stages"];

    std::ostringstream text;
    std::string dataset = std::string(to_string(config.task)) + "." + to_string(config.source);
    text << "run " << manifest.run_id << "\n";

    bool complete = manifest.stages.count("score") && manifest.stages.at("score") == "done";
    if (!complete) {
        // Count fully answered items by probing the cache with the rendered
        // prompts persisted before the invoke stage.
        size_t total_items = manifest.items_test;
        size_t done_items = 0;
        auto prompts_path = run_dir / "prompts" / "prompts.jsonl";
        if (std::filesystem::exists(prompts_path)) {
            CacheStore cache(config.cache_dir);
            std::map<std::string, size_t> per_item_needed, per_item_done;
            for_each_jsonl(prompts_path, [&](const ojson& j, size_t) {
                RenderedPrompt p;
                p.item_id = j.at("item_id").get<std::string>();
                p.template_id = j.at("template_id").get<std::string>();
                p.text = j.at("text").get<std::string>();
                if (j.contains("mask_token")) p.mask_token_used = j.at("mask_token").get<std::string>();
                ++per_item_needed[p.item_id];
                if (cache.contains(config.backend.backend_id, cache_key(config.backend, p))) {
                    ++per_item_done[p.item_id];
                }
            });
            total_items = per_item_needed.size();
            for (auto& [id, needed] : per_item_needed) {
                if (per_item_done[id] == needed) ++done_items;
            }
        }
        text << "partial: " << done_items << "/" << total_items << " items\n";
        if (!manifest.stage_error.empty()) text << "failed stage error: " << manifest.stage_error << "\n";
        out.machine["partial"] = ojson{{"done_items", done_items}, {"total_items", total_items}};
        out.text = text.str();
        return out;
    }

    ojson report = read_json_file(run_dir / "reports" / "report.json");
    out.machine["report"] = report;

    // Grid in the overall-results layout: dataset rows, backend columns.
    text << "dataset";
    text << "  " << config.backend.backend_id << " (best)" << "\n";
    text << dataset << "  " << report.at("best_metric").get<double>() << "  ["
         << report.at("best_template_id").get<std::string>() << "]\n\n";
    text << "per-template breakdown:\n";
    for (auto& r : report.at("per_template")) {
        double metric = r.contains("map_at_1")   ? r["map_at_1"].get<double>()
                        : r.contains("map_at_k") ? r["map_at_k"].get<double>()
                                                 : r["f1"].get<double>();
        text << "  " << r["template_id"].get<std::string>() << "  " << metric << "\n";
    }
    if (report.contains("count_note")) text << report["count_note"].get<std::string>() << "\n";
    out.text = text.str();
    return out;
}

}  // namespace olbench
