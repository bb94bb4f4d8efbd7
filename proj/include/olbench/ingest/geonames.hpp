#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/errors.hpp"
#include "olbench/text.hpp"

namespace olbench {

namespace geonames {

// The nine top-level feature classes of the GeoNames code scheme.
inline constexpr std::array<char, 9> kFeatureClasses = {'A', 'H', 'L', 'P', 'R',
                                                        'S', 'T', 'U', 'V'};

inline bool is_feature_class(std::string_view s) {
    if (s.size() != 1) return false;
    for (char c : kFeatureClasses) {
        if (s[0] == c) return true;
    }
    return false;
}

// countryInfo table: '#' comment lines, then tab-separated rows with the ISO
// code in column 0 and the country name in column 4.
inline std::unordered_map<std::string, std::string> load_country_info(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SourceUnavailableError("missing countryInfo file: " + path.string());
    std::unordered_map<std::string, std::string> names;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() < 5) {
            throw ParseError(path.string(), lineno, "expected >=5 tab-separated fields");
        }
        std::string iso(trim(cols[0]));
        std::string name = nfc(trim(cols[4]));
        if (!iso.empty() && !name.empty()) names.emplace(std::move(iso), std::move(name));
    }
    return names;
}

}  // namespace geonames

/// Parse the GeoNames main dump. Rows follow the documented layout: name in
/// column 1, feature class in 6, feature code in 7, country code in 8.
/// Records are keyed by name (duplicate names merge their feature codes into
/// one gold set); the taxonomy holds the 9 classes at level 0 and every
/// observed feature code at level 1. Context sentences read
/// "<name> is a place in <country>." and are omitted when the country is
/// unknown.
inline SourceCorpus parse_geonames(const std::filesystem::path& features_path,
                                   const std::filesystem::path& country_info_path) {
    auto countries = geonames::load_country_info(country_info_path);

    std::ifstream in(features_path);
    if (!in) throw SourceUnavailableError("missing GeoNames features file: " + features_path.string());

    SourceCorpus corpus;
    corpus.source_id = SourceId::geonames;

    std::unordered_map<std::string, size_t> by_name;
    std::unordered_map<std::string, std::string> class_of_code;  // code -> class (first seen)
    std::vector<std::string> class_order;                        // level-0 labels, first seen
    std::vector<std::string> code_order;                         // level-1 labels, first seen

    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() < 9) {
            throw ParseError(features_path.string(), lineno,
                             "expected >=9 tab-separated fields, got " +
                                 std::to_string(cols.size()));
        }
        std::string name = nfc(trim(cols[1]));
        std::string fclass(trim(cols[6]));
        std::string fcode(trim(cols[7]));
        std::string country(trim(cols[8]));

        if (name.empty()) {
            corpus.stats.count("empty_name_skipped");
            continue;
        }
        if (!geonames::is_feature_class(fclass) || fcode.empty()) {
            corpus.stats.count("unknown_feature_code_skipped");
            continue;
        }

        if (!class_of_code.count(fcode)) {
            class_of_code.emplace(fcode, fclass);
            code_order.push_back(fcode);
        } else if (class_of_code[fcode] != fclass) {
            corpus.stats.count("feature_code_class_conflict");
        }
        if (std::find(class_order.begin(), class_order.end(), fclass) == class_order.end()) {
            class_order.push_back(fclass);
        }

        std::optional<std::string> sentence;
        auto cit = countries.find(country);
        if (cit != countries.end()) {
            sentence = name + " is a place in " + cit->second + ".";
        } else {
            corpus.stats.count("unknown_country_code");
        }

        auto it = by_name.find(name);
        if (it == by_name.end()) {
            TermRecord r;
            r.term_id = name;
            r.surface_form = name;
            r.context_sentence = sentence;
            r.gold_types.insert(fcode);
            r.source_id = SourceId::geonames;
            by_name.emplace(name, corpus.records.size());
            corpus.records.push_back(std::move(r));
        } else {
            TermRecord& r = corpus.records[it->second];
            r.gold_types.insert(fcode);
            if (!r.context_sentence && sentence) r.context_sentence = sentence;
        }
        corpus.type_inventory.insert(fcode);
    }

    if (corpus.records.empty()) {
        throw ParseError("no records: GeoNames features file contained no usable rows");
    }

    std::vector<std::string> labels = class_order;
    labels.insert(labels.end(), code_order.begin(), code_order.end());
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(code_order.size());
    for (auto& code : code_order) edges.emplace_back(code, class_of_code.at(code));
    corpus.taxonomy = taxo::build(labels, edges);

    return corpus;
}

}  // namespace olbench
