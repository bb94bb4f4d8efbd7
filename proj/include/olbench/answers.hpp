#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "olbench/errors.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/text.hpp"

namespace olbench {

/// Model output is free text; answers become labels by matching against an
/// answer space: canonical label -> accepted surface variants. Spaces are
/// data (synonym files editable without rebuilds); every canonical label
/// accepts at least its own normalized form.
struct AnswerSpace {
    char task = 'A';  // 'A' for term typing, 'B'/'C' for boolean tasks
    // canonical label -> normalized variants, each list led by the label itself
    std::map<std::string, std::vector<std::string>> labels;
};

// Normalization applied to raw model text and to every variant before
// matching: NFC, ASCII lowercase, strip surrounding whitespace/punctuation,
// drop leading articles, collapse internal whitespace. Idempotent.
inline std::string normalize_answer(std::string_view raw) {
    // Collapse before the strip/article loop: every later step preserves
    // single-space separation, which makes the whole chain a fixpoint.
    std::string s = collapse_whitespace(ascii_lower(nfc(raw)));
    auto strip = [](std::string& t) {
        auto is_strippable = [](char c) {
            return is_ascii_space(c) || (std::ispunct(static_cast<unsigned char>(c)) != 0);
        };
        size_t b = 0, e = t.size();
        while (b < e && is_strippable(t[b])) ++b;
        while (e > b && is_strippable(t[e - 1])) --e;
        t = t.substr(b, e - b);
    };
    while (true) {
        std::string before = s;
        strip(s);
        for (std::string_view article : {"a ", "an ", "the "}) {
            if (s.size() > article.size() && s.compare(0, article.size(), article) == 0) {
                s = s.substr(article.size());
                break;
            }
        }
        if (s == before) break;
    }
    return s;
}

namespace answers {

inline void check_disjoint(const AnswerSpace& space) {
    std::map<std::string, std::string> owner;
    for (auto& [label, variants] : space.labels) {
        if (variants.empty()) {
            throw ConfigError("answer space label '" + label + "' has no variants");
        }
        for (auto& v : variants) {
            auto [it, inserted] = owner.emplace(v, label);
            if (!inserted && it->second != label) {
                throw ConfigError("answer variant '" + v + "' claimed by both '" + it->second +
                                  "' and '" + label + "'");
            }
        }
    }
}

}  // namespace answers

/// Boolean space for Tasks B and C. The optional file maps canonical
/// "true"/"false" to extra variants.
inline AnswerSpace boolean_answer_space(
    const std::optional<std::filesystem::path>& variants_file = {}, char task = 'B') {
    AnswerSpace space;
    space.task = task;
    space.labels["true"] = {"true"};
    space.labels["false"] = {"false"};
    if (variants_file) {
        ojson j = read_json_file(*variants_file);
        for (auto& [label, vars] : j.items()) {
            if (label != "true" && label != "false") {
                throw ConfigError("boolean answer file may only define true/false: got " + label);
            }
            for (auto& v : vars) {
                std::string n = normalize_answer(v.get<std::string>());
                auto& list = space.labels[label];
                if (!n.empty() && std::find(list.begin(), list.end(), n) == list.end()) {
                    list.push_back(n);
                }
            }
        }
    }
    answers::check_disjoint(space);
    return space;
}

/// Term-typing space: one canonical label per inventory type, seeded with
/// the label's own normalized form plus synonyms from the optional file.
inline AnswerSpace term_answer_space(const std::set<std::string>& type_inventory,
                                     const std::optional<std::filesystem::path>& synonyms_file = {}) {
    AnswerSpace space;
    space.task = 'A';
    for (auto& label : type_inventory) {
        std::string n = normalize_answer(label);
        if (n.empty()) n = label;  // degenerate labels still need a variant
        space.labels[label] = {n};
    }
    if (synonyms_file && std::filesystem::exists(*synonyms_file)) {
        ojson j = read_json_file(*synonyms_file);
        for (auto& [label, vars] : j.items()) {
            auto it = space.labels.find(label);
            if (it == space.labels.end()) continue;  // synonym files may cover more than one corpus
            for (auto& v : vars) {
                std::string n = normalize_answer(v.get<std::string>());
                if (!n.empty() && std::find(it->second.begin(), it->second.end(), n) ==
                                      it->second.end()) {
                    it->second.push_back(n);
                }
            }
        }
    }
    answers::check_disjoint(space);
    return space;
}

}  // namespace olbench
