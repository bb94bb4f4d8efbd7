#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "olbench/errors.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/text.hpp"

namespace olbench {

enum class SourceId { wordnet, geonames, nci, medcin, snomedct_us, umls, schemaorg };

enum class Partition { unsplit, train, test };

inline const char* to_string(SourceId s) {
    switch (s) {
        case SourceId::wordnet: return "wordnet";
        case SourceId::geonames: return "geonames";
        case SourceId::nci: return "nci";
        case SourceId::medcin: return "medcin";
        case SourceId::snomedct_us: return "snomedct_us";
        case SourceId::umls: return "umls";
        case SourceId::schemaorg: return "schemaorg";
    }
    return "?";
}

inline SourceId source_id_from_string(std::string_view s) {
    if (s == "wordnet") return SourceId::wordnet;
    if (s == "geonames") return SourceId::geonames;
    if (s == "nci") return SourceId::nci;
    if (s == "medcin") return SourceId::medcin;
    if (s == "snomedct_us") return SourceId::snomedct_us;
    if (s == "umls") return SourceId::umls;
    if (s == "schemaorg") return SourceId::schemaorg;
    throw ConfigError("unknown source id: " + std::string(s));
}

inline const char* to_string(Partition p) {
    switch (p) {
        case Partition::unsplit: return "unsplit";
        case Partition::train: return "train";
        case Partition::test: return "test";
    }
    return "?";
}

inline Partition partition_from_string(std::string_view s) {
    if (s == "unsplit") return Partition::unsplit;
    if (s == "train") return Partition::train;
    if (s == "test") return Partition::test;
    throw ConfigError("unknown partition: " + std::string(s));
}

/// One term with its gold types. `surface_form` is the lexical entry fed to
/// prompts; `context_sentence` is the optional sentence accompanying it.
struct TermRecord {
    std::string term_id;
    std::string surface_form;
    std::optional<std::string> context_sentence;
    std::set<std::string> gold_types;
    SourceId source_id = SourceId::wordnet;
    Partition partition = Partition::unsplit;
};

struct TypeNode {
    std::string label;
    int level = 0;  // 0 = root level
};

/// Leveled type hierarchy. `parent_edges` are (child, parent) pairs; levels
/// are longest-path depth from the roots so every edge points from a deeper
/// node to a strictly shallower one.
struct Taxonomy {
    std::vector<TypeNode> nodes;
    std::vector<std::pair<std::string, std::string>> parent_edges;  // (child, parent)
    int level_count = 0;

    bool has_label(const std::string& label) const {
        return std::any_of(nodes.begin(), nodes.end(),
                           [&](const TypeNode& n) { return n.label == label; });
    }
};

struct RelationAssertion {
    std::string head_type;
    std::string relation;
    std::string tail_type;

    bool operator==(const RelationAssertion&) const = default;
    auto operator<=>(const RelationAssertion&) const = default;
};

/// Counters for tolerated input anomalies (skipped rows, missing lookups).
/// These are data facts, not failures; callers surface them in logs/manifests.
struct ParseStats {
    std::map<std::string, size_t> warnings;

    void count(const std::string& key) { ++warnings[key]; }
    size_t total() const {
        size_t n = 0;
        for (auto& [k, v] : warnings) n += v;
        return n;
    }
};

struct SourceCorpus {
    SourceId source_id = SourceId::wordnet;
    std::vector<TermRecord> records;
    std::set<std::string> type_inventory;
    std::optional<Taxonomy> taxonomy;
    std::vector<RelationAssertion> relations;
    ParseStats stats;
};

// ---------------------------------------------------------------------------
// Taxonomy construction helpers shared by the parsers.

namespace taxo {

/// Longest-path depth from the roots (nodes without parents). Throws
/// TaxonomyIntegrityError on a cycle, naming the nodes on it.
inline std::unordered_map<std::string, int> assign_levels(
    const std::vector<std::string>& labels,
    const std::vector<std::pair<std::string, std::string>>& parent_edges) {
    std::unordered_map<std::string, std::vector<std::string>> parents_of;
    for (auto& [child, parent] : parent_edges) parents_of[child].push_back(parent);

    std::unordered_map<std::string, int> level;  // memoized longest path
    std::unordered_set<std::string> in_progress;
    std::vector<std::string> path;

    std::function<int(const std::string&)> depth = [&](const std::string& label) -> int {
        auto it = level.find(label);
        if (it != level.end()) return it->second;
        if (in_progress.count(label)) {
            auto at = std::find(path.begin(), path.end(), label);
            std::string cycle;
            for (auto p = at; p != path.end(); ++p) cycle += *p + " -> ";
            throw TaxonomyIntegrityError("cyclic hierarchy: " + cycle + label);
        }
        in_progress.insert(label);
        path.push_back(label);
        int d = 0;
        auto pit = parents_of.find(label);
        if (pit != parents_of.end()) {
            for (auto& p : pit->second) d = std::max(d, depth(p) + 1);
        }
        path.pop_back();
        in_progress.erase(label);
        level[label] = d;
        return d;
    };

    for (auto& l : labels) depth(l);
    return level;
}

/// Assemble a Taxonomy from raw labels + parent edges, computing levels.
/// Node order follows `labels`; duplicate labels collapse to the first.
inline Taxonomy build(const std::vector<std::string>& labels,
                      const std::vector<std::pair<std::string, std::string>>& parent_edges) {
    std::vector<std::string> uniq;
    std::unordered_set<std::string> seen;
    for (auto& l : labels) {
        if (seen.insert(l).second) uniq.push_back(l);
    }
    auto levels = assign_levels(uniq, parent_edges);
    Taxonomy t;
    t.nodes.reserve(uniq.size());
    int max_level = -1;
    for (auto& l : uniq) {
        int lv = levels.at(l);
        t.nodes.push_back({l, lv});
        max_level = std::max(max_level, lv);
    }
    t.parent_edges = parent_edges;
    t.level_count = max_level + 1;
    return t;
}

}  // namespace taxo

// ---------------------------------------------------------------------------
// Taxonomy validation: violations are reported as data, never thrown.

struct ValidationIssue {
    enum class Kind { cycle, cross_level_edge, orphan_node, duplicate_label, unknown_endpoint };
    Kind kind;
    std::string detail;
};

inline const char* to_string(ValidationIssue::Kind k) {
    switch (k) {
        case ValidationIssue::Kind::cycle: return "cycle";
        case ValidationIssue::Kind::cross_level_edge: return "cross_level_edge";
        case ValidationIssue::Kind::orphan_node: return "orphan_node";
        case ValidationIssue::Kind::duplicate_label: return "duplicate_label";
        case ValidationIssue::Kind::unknown_endpoint: return "unknown_endpoint";
    }
    return "?";
}

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

/// Checks every structural invariant a Taxonomy promises: unique labels,
/// edges between known nodes, edges spanning exactly one level upward,
/// acyclicity, and no parentless node above the root level.
inline ValidationReport validate_taxonomy(const Taxonomy& t) {
    ValidationReport report;
    std::unordered_map<std::string, int> level_of;
    for (auto& n : t.nodes) {
        auto [it, inserted] = level_of.emplace(n.label, n.level);
        if (!inserted) {
            report.issues.push_back(
                {ValidationIssue::Kind::duplicate_label, "duplicate node label: " + n.label});
        }
    }

    std::unordered_set<std::string> has_parent;
    for (auto& [child, parent] : t.parent_edges) {
        auto ci = level_of.find(child);
        auto pi = level_of.find(parent);
        if (ci == level_of.end() || pi == level_of.end()) {
            report.issues.push_back({ValidationIssue::Kind::unknown_endpoint,
                                     "edge references unknown node: " + child + " -> " + parent});
            continue;
        }
        has_parent.insert(child);
        if (ci->second != pi->second + 1) {
            report.issues.push_back(
                {ValidationIssue::Kind::cross_level_edge,
                 "edge " + child + " (level " + std::to_string(ci->second) + ") -> " + parent +
                     " (level " + std::to_string(pi->second) + ") does not span one level"});
        }
    }

    for (auto& n : t.nodes) {
        if (n.level > 0 && !has_parent.count(n.label)) {
            report.issues.push_back({ValidationIssue::Kind::orphan_node,
                                     "non-root node without parent: " + n.label});
        }
    }

    // Cycle scan, tolerant of the issues already collected above.
    std::unordered_map<std::string, std::vector<std::string>> parents_of;
    for (auto& [child, parent] : t.parent_edges) parents_of[child].push_back(parent);
    std::unordered_map<std::string, int> state;  // 0 unseen, 1 in progress, 2 done
    std::vector<std::string> path;
    std::function<bool(const std::string&)> dfs = [&](const std::string& node) -> bool {
        state[node] = 1;
        path.push_back(node);
        for (auto& p : parents_of[node]) {
            int s = state.count(p) ? state[p] : 0;
            if (s == 1) {
                auto at = std::find(path.begin(), path.end(), p);
                std::string cycle;
                for (auto it = at; it != path.end(); ++it) cycle += *it + " -> ";
                cycle += p;
                report.issues.push_back({ValidationIssue::Kind::cycle, "cycle: " + cycle});
                path.pop_back();
                state[node] = 2;
                return true;
            }
            if (s == 0 && dfs(p)) {
                path.pop_back();
                return true;  // report one cycle per scan entry point
            }
        }
        path.pop_back();
        state[node] = 2;
        return false;
    };
    for (auto& n : t.nodes) {
        if (!state.count(n.label)) dfs(n.label);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Canonical on-disk forms. Corpus records go to JSONL with a fixed field
// order; taxonomies and relation lists get small JSON/JSONL companions.

inline ojson record_to_json(const TermRecord& r) {
    ojson j;
    j["term_id"] = r.term_id;
    j["surface_form"] = r.surface_form;
    if (r.context_sentence) j["context_sentence"] = *r.context_sentence;
    j["gold_types"] = r.gold_types;
    j["source_id"] = to_string(r.source_id);
    j["partition"] = to_string(r.partition);
    return j;
}

inline TermRecord record_from_json(const ojson& j) {
    TermRecord r;
    r.term_id = j.at("term_id").get<std::string>();
    r.surface_form = j.at("surface_form").get<std::string>();
    if (j.contains("context_sentence")) r.context_sentence = j.at("context_sentence").get<std::string>();
    for (auto& g : j.at("gold_types")) r.gold_types.insert(g.get<std::string>());
    r.source_id = source_id_from_string(j.at("source_id").get<std::string>());
    r.partition = partition_from_string(j.at("partition").get<std::string>());
    return r;
}

inline void write_corpus_jsonl(const SourceCorpus& c, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (auto& r : c.records) w.write(record_to_json(r));
}

inline SourceCorpus read_corpus_jsonl(const std::filesystem::path& path) {
    SourceCorpus c;
    bool first = true;
    for_each_jsonl(path, [&](const ojson& j, size_t) {
        TermRecord r = record_from_json(j);
        if (first) {
            c.source_id = r.source_id;
            first = false;
        }
        for (auto& g : r.gold_types) c.type_inventory.insert(g);
        c.records.push_back(std::move(r));
    });
    return c;
}

inline ojson taxonomy_to_json(const Taxonomy& t) {
    ojson j;
    j["level_count"] = t.level_count;
    ojson nodes = ojson::array();
    for (auto& n : t.nodes) nodes.push_back(ojson{{"label", n.label}, {"level", n.level}});
    j["nodes"] = std::move(nodes);
    ojson edges = ojson::array();
    for (auto& [c, p] : t.parent_edges) edges.push_back(ojson::array({c, p}));
    j["parent_edges"] = std::move(edges);
    return j;
}

inline Taxonomy taxonomy_from_json(const ojson& j) {
    Taxonomy t;
    t.level_count = j.at("level_count").get<int>();
    for (auto& n : j.at("nodes")) {
        t.nodes.push_back({n.at("label").get<std::string>(), n.at("level").get<int>()});
    }
    for (auto& e : j.at("parent_edges")) {
        t.parent_edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    return t;
}

inline void write_relations_jsonl(const std::vector<RelationAssertion>& rels,
                                  const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (auto& r : rels) {
        w.write(ojson{{"head", r.head_type}, {"relation", r.relation}, {"tail", r.tail_type}});
    }
}

inline std::vector<RelationAssertion> read_relations_jsonl(const std::filesystem::path& path) {
    std::vector<RelationAssertion> rels;
    for_each_jsonl(path, [&](const ojson& j, size_t) {
        rels.push_back({j.at("head").get<std::string>(), j.at("relation").get<std::string>(),
                        j.at("tail").get<std::string>()});
    });
    return rels;
}

/// Corpus-wide referential integrity: every gold type must be in the
/// inventory. Returns offending (term_id, type) pairs.
inline std::vector<std::pair<std::string, std::string>> check_gold_type_integrity(
    const SourceCorpus& c) {
    std::vector<std::pair<std::string, std::string>> bad;
    for (auto& r : c.records) {
        for (auto& g : r.gold_types) {
            if (!c.type_inventory.count(g)) bad.emplace_back(r.term_id, g);
        }
    }
    return bad;
}

}  // namespace olbench
