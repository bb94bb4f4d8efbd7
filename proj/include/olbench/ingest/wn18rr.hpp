#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/errors.hpp"
#include "olbench/text.hpp"

namespace olbench {

namespace wn18rr {

// Entity ids look like "blue_whale.n.01": lemma, part-of-speech letter,
// sense index. Satellite adjectives (.s) fold into adjective, giving the
// four-label type space {noun, verb, adverb, adjective}.
inline std::optional<std::pair<std::string, std::string>> decode_entity(std::string_view id) {
    size_t last = id.rfind('.');
    if (last == std::string_view::npos || last == 0) return std::nullopt;
    std::string_view sense = id.substr(last + 1);
    if (sense.empty()) return std::nullopt;
    for (char c : sense) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    size_t pos_dot = id.rfind('.', last - 1);
    if (pos_dot == std::string_view::npos) return std::nullopt;
    std::string_view pos = id.substr(pos_dot + 1, last - pos_dot - 1);
    std::string label;
    if (pos == "n") label = "noun";
    else if (pos == "v") label = "verb";
    else if (pos == "r") label = "adverb";
    else if (pos == "a" || pos == "s") label = "adjective";
    else return std::nullopt;

    std::string surface(id.substr(0, pos_dot));
    for (char& c : surface) {
        if (c == '_') c = ' ';
    }
    return std::make_pair(std::move(surface), std::move(label));
}

}  // namespace wn18rr

/// Parse the WN18RR triple dump (tab-separated "entity relation entity"
/// lines). Validation and test files are merged into a single test
/// partition; entities are deduplicated per partition by entity id. A gloss
/// file ("entity<TAB>gloss" lines) optionally supplies context sentences.
inline SourceCorpus parse_wn18rr(const std::filesystem::path& train_path,
                                 const std::filesystem::path& valid_path,
                                 const std::filesystem::path& test_path,
                                 const std::optional<std::filesystem::path>& gloss_path = {}) {
    SourceCorpus corpus;
    corpus.source_id = SourceId::wordnet;

    std::unordered_map<std::string, size_t> index;  // (partition + entity id) -> record slot

    auto load = [&](const std::filesystem::path& path, Partition part) {
        std::ifstream in(path);
        if (!in) throw SourceUnavailableError("missing WN18RR file: " + path.string());
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            auto cols = split(line, '\t');
            if (cols.size() != 3) {
                throw ParseError(path.string(), lineno,
                                 "expected 3 tab-separated fields, got " +
                                     std::to_string(cols.size()));
            }
            for (std::string_view ent : {cols[0], cols[2]}) {
                std::string id = nfc(trim(ent));
                auto decoded = wn18rr::decode_entity(id);
                if (!decoded) {
                    throw ParseError(path.string(), lineno, "unrecognized entity id: " + id);
                }
                auto& [surface, pos_label] = *decoded;
                if (trim(surface).empty()) {
                    throw ParseError(path.string(), lineno, "empty surface form in entity: " + id);
                }
                std::string key = std::string(to_string(part)) + "\x1f" + id;
                auto it = index.find(key);
                if (it == index.end()) {
                    TermRecord r;
                    r.term_id = id;
                    r.surface_form = surface;
                    r.gold_types.insert(pos_label);
                    r.source_id = SourceId::wordnet;
                    r.partition = part;
                    index.emplace(std::move(key), corpus.records.size());
                    corpus.records.push_back(std::move(r));
                } else {
                    corpus.records[it->second].gold_types.insert(pos_label);
                }
                corpus.type_inventory.insert(pos_label);
            }
        }
    };

    load(train_path, Partition::train);
    load(valid_path, Partition::test);  // validation merges into the test partition
    load(test_path, Partition::test);

    if (corpus.records.empty()) {
        throw ParseError("no records: WN18RR input files contained no triples");
    }

    if (gloss_path) {
        std::unordered_map<std::string, std::string> gloss;
        std::ifstream in(*gloss_path);
        if (!in) throw SourceUnavailableError("missing gloss file: " + gloss_path->string());
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            auto cols = split(line, '\t');
            if (cols.size() < 2) {
                throw ParseError(gloss_path->string(), lineno, "expected entity<TAB>gloss");
            }
            gloss[nfc(trim(cols[0]))] = nfc(trim(cols[1]));
        }
        for (auto& r : corpus.records) {
            auto it = gloss.find(r.term_id);
            if (it != gloss.end()) r.context_sentence = it->second;
        }
    }

    return corpus;
}

}  // namespace olbench
