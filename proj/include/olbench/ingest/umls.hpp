#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/errors.hpp"
#include "olbench/text.hpp"

namespace olbench {

enum class UmlsSub { nci, medcin, snomedct_us };

inline const char* sab_of(UmlsSub s) {
    switch (s) {
        case UmlsSub::nci: return "NCI";
        case UmlsSub::medcin: return "MEDCIN";
        case UmlsSub::snomedct_us: return "SNOMEDCT_US";
    }
    return "?";
}

inline SourceId source_of(UmlsSub s) {
    switch (s) {
        case UmlsSub::nci: return SourceId::nci;
        case UmlsSub::medcin: return SourceId::medcin;
        case UmlsSub::snomedct_us: return SourceId::snomedct_us;
    }
    return SourceId::nci;
}

inline UmlsSub umls_sub_from_string(std::string_view s) {
    if (s == "nci") return UmlsSub::nci;
    if (s == "medcin") return UmlsSub::medcin;
    if (s == "snomedct_us") return UmlsSub::snomedct_us;
    throw ConfigError("unknown UMLS subontology: " + std::string(s));
}

/// File set for one UMLS ingestion: MRCONSO/MRSTY carry the concept strings
/// and their semantic types, SRDEF/SRSTR describe the semantic network (type
/// and relation inventories, isa hierarchy, relation assertions).
struct UmlsPaths {
    std::filesystem::path mrconso;
    std::filesystem::path mrsty;
    std::filesystem::path srdef;
    std::filesystem::path srstr;
};

namespace umls {

// RRF rows are pipe-delimited with a trailing pipe.
inline std::vector<std::string_view> rrf_fields(std::string_view line) {
    auto cols = split(line, '|');
    if (!cols.empty() && cols.back().empty()) cols.pop_back();
    return cols;
}

struct SemanticNetwork {
    std::vector<std::string> type_labels;      // SRDEF order
    std::vector<std::string> relation_labels;  // SRDEF order, isa excluded
    Taxonomy taxonomy;
    std::vector<RelationAssertion> assertions;
};

// SRDEF: RT|UI|STY_RL|... with RT in {STY, RL}.
// SRSTR: STY_RL1|RL|STY_RL2|LS| rows; isa rows between semantic types define
// the hierarchy, other rows between semantic types are relation assertions.
inline SemanticNetwork load_semantic_network(const std::filesystem::path& srdef_path,
                                             const std::filesystem::path& srstr_path,
                                             ParseStats& stats) {
    SemanticNetwork net;

    std::ifstream def(srdef_path);
    if (!def) throw SourceUnavailableError("missing SRDEF file: " + srdef_path.string());
    std::string line;
    size_t lineno = 0;
    std::unordered_set<std::string> type_set;
    while (std::getline(def, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cols = rrf_fields(line);
        if (cols.size() < 3) {
            throw ParseError(srdef_path.string(), lineno,
                             "expected >=3 pipe-delimited fields, got " +
                                 std::to_string(cols.size()));
        }
        std::string rt(trim(cols[0]));
        std::string name = nfc(trim(cols[2]));
        if (name.empty()) continue;
        if (rt == "STY") {
            if (type_set.insert(name).second) net.type_labels.push_back(name);
        } else if (rt == "RL") {
            if (name != "isa") net.relation_labels.push_back(name);
        } else {
            throw ParseError(srdef_path.string(), lineno, "unknown record type: " + rt);
        }
    }

    std::ifstream str(srstr_path);
    if (!str) throw SourceUnavailableError("missing SRSTR file: " + srstr_path.string());
    std::unordered_set<std::string> relation_set(net.relation_labels.begin(),
                                                 net.relation_labels.end());
    std::vector<std::pair<std::string, std::string>> edges;
    std::set<RelationAssertion> seen;
    lineno = 0;
    while (std::getline(str, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cols = rrf_fields(line);
        if (cols.size() < 3) {
            throw ParseError(srstr_path.string(), lineno,
                             "expected >=3 pipe-delimited fields, got " +
                                 std::to_string(cols.size()));
        }
        std::string left = nfc(trim(cols[0]));
        std::string rel(trim(cols[1]));
        std::string right = nfc(trim(cols[2]));
        if (right.empty()) continue;  // root rows carry an empty third field
        bool left_is_type = type_set.count(left) > 0;
        bool right_is_type = type_set.count(right) > 0;
        if (!left_is_type || !right_is_type) {
            // Rows structuring the relation hierarchy itself; not type facts.
            stats.count("srstr_non_type_row_skipped");
            continue;
        }
        if (rel == "isa") {
            edges.emplace_back(left, right);  // child isa parent
        } else if (relation_set.count(rel)) {
            RelationAssertion a{left, rel, right};
            if (seen.insert(a).second) net.assertions.push_back(a);
        } else {
            stats.count("srstr_unknown_relation_skipped");
        }
    }

    net.taxonomy = taxo::build(net.type_labels, edges);
    return net;
}

}  // namespace umls

/// Parse a UMLS subontology into a corpus. MRCONSO is filtered to English
/// rows of the chosen source vocabulary; gold types come from MRSTY via CUI.
/// Records merge by surface string (distinct types union into the gold set);
/// term ids are the smallest string identifier (SUI) of the merged group.
/// The shared semantic-network taxonomy and relation assertions are attached
/// regardless of the chosen subontology.
inline SourceCorpus parse_umls(const UmlsPaths& paths, UmlsSub sub) {
    SourceCorpus corpus;
    corpus.source_id = source_of(sub);

    auto net = umls::load_semantic_network(paths.srdef, paths.srstr, corpus.stats);

    // MRSTY: CUI|TUI|STN|STY|...
    std::unordered_map<std::string, std::set<std::string>> types_of_cui;
    {
        std::ifstream in(paths.mrsty);
        if (!in) throw SourceUnavailableError("missing MRSTY file: " + paths.mrsty.string());
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            auto cols = umls::rrf_fields(line);
            if (cols.size() < 4) {
                throw ParseError(paths.mrsty.string(), lineno,
                                 "expected >=4 pipe-delimited fields, got " +
                                     std::to_string(cols.size()));
            }
            std::string cui(trim(cols[0]));
            std::string sty = nfc(trim(cols[3]));
            if (!cui.empty() && !sty.empty()) types_of_cui[cui].insert(sty);
        }
    }

    // MRCONSO: CUI|LAT|TS|LUI|STT|SUI|ISPREF|AUI|SAUI|SCUI|SDUI|SAB|TTY|CODE|STR|...
    const std::string want_sab = sab_of(sub);
    std::unordered_map<std::string, size_t> by_surface;
    {
        std::ifstream in(paths.mrconso);
        if (!in) throw SourceUnavailableError("missing MRCONSO file: " + paths.mrconso.string());
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            auto cols = umls::rrf_fields(line);
            if (cols.size() < 15) {
                throw ParseError(paths.mrconso.string(), lineno,
                                 "expected >=15 pipe-delimited fields, got " +
                                     std::to_string(cols.size()));
            }
            std::string cui(trim(cols[0]));
            std::string lat(trim(cols[1]));
            std::string sui(trim(cols[5]));
            std::string sab(trim(cols[11]));
            std::string str = nfc(trim(cols[14]));
            if (sab != want_sab || lat != "ENG") continue;
            if (str.empty()) {
                corpus.stats.count("empty_string_skipped");
                continue;
            }
            auto tit = types_of_cui.find(cui);
            if (tit == types_of_cui.end() || tit->second.empty()) {
                corpus.stats.count("concept_without_semantic_type");
                continue;
            }
            auto it = by_surface.find(str);
            if (it == by_surface.end()) {
                TermRecord r;
                r.term_id = sui;
                r.surface_form = str;
                r.gold_types = tit->second;
                r.source_id = corpus.source_id;
                by_surface.emplace(str, corpus.records.size());
                corpus.records.push_back(std::move(r));
            } else {
                TermRecord& r = corpus.records[it->second];
                r.gold_types.insert(tit->second.begin(), tit->second.end());
                if (!sui.empty() && (r.term_id.empty() || sui < r.term_id)) r.term_id = sui;
            }
            for (auto& t : tit->second) corpus.type_inventory.insert(t);
        }
    }

    if (corpus.records.empty()) {
        throw SourceUnavailableError(std::string("no records for subontology ") + sab_of(sub) +
                                     " in " + paths.mrconso.string());
    }

    corpus.taxonomy = std::move(net.taxonomy);
    corpus.relations = std::move(net.assertions);
    return corpus;
}

}  // namespace olbench
