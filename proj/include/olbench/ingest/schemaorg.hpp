#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/errors.hpp"
#include "olbench/text.hpp"

namespace olbench {

namespace schemaorg {

// Minimal CSV reader: quoted fields with "" escapes, embedded commas and
// newlines inside quotes. Returns one row per record.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SourceUnavailableError("missing schema.org export: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    char c;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        bool all_empty = true;
        for (auto& f : row) {
            if (!trim(f).empty()) all_empty = false;
        }
        if (!all_empty) rows.push_back(row);
        row.clear();
    };
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field.push_back(c);
        }
    }
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

// subTypeOf values are comma-separated URLs; types are named by the last
// path segment.
inline std::string strip_url(std::string_view s) {
    std::string_view t = trim(s);
    size_t slash = t.rfind('/');
    if (slash != std::string_view::npos) t = t.substr(slash + 1);
    return std::string(t);
}

}  // namespace schemaorg

/// Parse the schema.org vocabulary export (the "types" CSV with `label` and
/// `subTypeOf` columns). The corpus carries no term records; the taxonomy
/// holds every type with levels assigned by longest path from the roots.
/// A cyclic subClassOf chain raises a taxonomy-integrity error naming the
/// cycle.
inline SourceCorpus parse_schemaorg(const std::filesystem::path& export_path) {
    auto rows = schemaorg::read_csv(export_path);
    if (rows.size() < 2) {
        throw ParseError(export_path.string() + ": expected a header row and at least one type");
    }

    const auto& header = rows.front();
    int label_col = -1, super_col = -1;
    for (size_t i = 0; i < header.size(); ++i) {
        std::string h = ascii_lower(trim(header[i]));
        if (h == "label") label_col = static_cast<int>(i);
        if (h == "subtypeof" || h == "subclassof") super_col = static_cast<int>(i);
    }
    if (label_col < 0 || super_col < 0) {
        throw ParseError(export_path.string() +
                         ": header must contain 'label' and 'subTypeOf' columns");
    }

    SourceCorpus corpus;
    corpus.source_id = SourceId::schemaorg;

    std::vector<std::string> labels;
    std::unordered_set<std::string> label_set;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::pair<std::string, std::string>> pending;  // resolved after all labels known

    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (static_cast<int>(row.size()) <= label_col) {
            throw ParseError(export_path.string(), i + 1, "row missing label column");
        }
        std::string label = nfc(schemaorg::strip_url(row[label_col]));
        if (label.empty()) {
            throw ParseError(export_path.string(), i + 1, "empty type label");
        }
        if (!label_set.insert(label).second) {
            corpus.stats.count("duplicate_type_row");
            continue;
        }
        labels.push_back(label);
        if (static_cast<int>(row.size()) > super_col) {
            for (auto part : split(row[super_col], ',')) {
                std::string parent = nfc(schemaorg::strip_url(part));
                if (!parent.empty()) pending.emplace_back(label, parent);
            }
        }
    }

    for (auto& [child, parent] : pending) {
        if (!label_set.count(parent)) {
            corpus.stats.count("parent_outside_export_skipped");
            continue;
        }
        edges.emplace_back(child, parent);
    }

    corpus.taxonomy = taxo::build(labels, edges);  // throws on cycles
    for (auto& l : labels) corpus.type_inventory.insert(l);
    return corpus;
}

}  // namespace olbench
