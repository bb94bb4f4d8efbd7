// Deterministic fixture generators. Each writes raw-format input files the
// parsers consume, shaped to the documented cardinalities of the real
// distributions (code counts, level counts, pair totals) so count-level
// checks exercise the same arithmetic as the official dumps.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/ingest/umls.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "olbench_fixtures" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string pad(size_t n, int width) {
    std::string s = std::to_string(n);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

// ---------------------------------------------------------------------------
// WN18RR

struct Wn18rrFixture {
    fs::path train, valid, test;
};

/// Triple files with exactly `train_entities` distinct entities in train and
/// `test_entities` across valid+test. POS suffixes cycle n/v/a/r.
inline Wn18rrFixture make_wn18rr(const fs::path& dir, size_t train_entities,
                                 size_t test_entities) {
    const char pos[4] = {'n', 'v', 'a', 'r'};
    auto entity = [&](const char* prefix, size_t i) {
        return std::string(prefix) + "_word_" + std::to_string(i) + "." + pos[i % 4] + ".01";
    };
    auto emit = [&](const fs::path& path, const char* prefix, size_t begin, size_t end) {
        std::ofstream out(path);
        if (end - begin == 1) {
            // A single entity still needs a line; self-relation keeps the
            // entity count exact.
            out << entity(prefix, begin) << "\t_also_see\t" << entity(prefix, begin) << "\n";
            return;
        }
        for (size_t i = begin; i + 1 < end; i += 2) {
            out << entity(prefix, i) << "\t_hypernym\t" << entity(prefix, i + 1) << "\n";
        }
        if ((end - begin) % 2 == 1) {
            out << entity(prefix, end - 1) << "\t_also_see\t" << entity(prefix, begin) << "\n";
        }
    };
    Wn18rrFixture f{dir / "train.txt", dir / "valid.txt", dir / "test.txt"};
    emit(f.train, "t", 0, train_entities);
    size_t half = test_entities / 2;
    emit(f.valid, "x", 0, half);
    emit(f.test, "x", half, test_entities);
    return f;
}

// ---------------------------------------------------------------------------
// GeoNames

struct GeonamesFixture {
    fs::path features, country_info;
    size_t code_count = 0;
};

/// Feature table shaped like the real inventory: 9 classes, `code_count`
/// codes spread across them, one or more rows per code. Every row is a
/// distinct place name so record counts are predictable.
inline GeonamesFixture make_geonames(const fs::path& dir, size_t code_count = 680,
                                     size_t extra_rows = 200) {
    static const char classes[9] = {'A', 'H', 'L', 'P', 'R', 'S', 'T', 'U', 'V'};
    GeonamesFixture f{dir / "features.txt", dir / "countryInfo.txt", code_count};

    std::ofstream out(f.features);
    std::vector<std::pair<char, std::string>> codes;
    for (size_t i = 0; i < code_count; ++i) {
        char cls = classes[i % 9];
        std::string code = std::string(1, cls) + pad(i / 9, 3);
        codes.emplace_back(cls, code);
    }
    const char* countries[3] = {"US", "DE", "FR"};
    size_t row = 0;
    auto emit_row = [&](const std::string& name, char cls, const std::string& code,
                        const std::string& country) {
        // geonameid name asciiname alternatenames lat lon fclass fcode country ...
        out << row << "\t" << name << "\t" << name << "\t\t0.0\t0.0\t" << cls << "\t" << code
            << "\t" << country << "\t\t\t\t\t\t0\t\t\t\t\n";
        ++row;
    };
    for (auto& [cls, code] : codes) {
        emit_row("Place " + std::to_string(row), cls, code, countries[row % 3]);
    }
    for (size_t i = 0; i < extra_rows; ++i) {
        auto& [cls, code] = codes[i % codes.size()];
        emit_row("Place " + std::to_string(row), cls, code, countries[row % 3]);
    }

    write_file(f.country_info,
               "# GeoNames countryInfo fixture\n"
               "#ISO\tISO3\tISO-Numeric\tfips\tCountry\tCapital\n"
               "US\tUSA\t840\tUS\tUnited States\tWashington\n"
               "DE\tDEU\t276\tGM\tGermany\tBerlin\n"
               "FR\tFRA\t250\tFR\tFrance\tParis\n");
    return f;
}

// ---------------------------------------------------------------------------
// UMLS

struct UmlsFixture {
    olbench::UmlsPaths paths;
    size_t type_count = 127;
    size_t relation_count = 53;
    size_t expected_taxonomy_pairs = 254;  // direct + transitive closure
};

/// Semantic-network files shaped to the published cardinalities: 127 types
/// on 3 levels whose closure yields exactly 254 positive pairs, and 53
/// non-taxonomic relations. MRCONSO/MRSTY carry `concepts` NCI concepts
/// (plus a couple of rows that must be filtered out).
inline UmlsFixture make_umls(const fs::path& dir, size_t concepts = 40) {
    UmlsFixture f;
    f.paths = {dir / "MRCONSO.RRF", dir / "MRSTY.RRF", dir / "SRDEF.txt", dir / "SRSTR.txt"};

    std::vector<std::string> roots = {"Entity", "Event"};
    std::vector<std::string> mids, leaves;
    for (size_t i = 0; i < 25; ++i) mids.push_back("Category " + pad(i + 1, 2));
    for (size_t i = 0; i < 100; ++i) leaves.push_back("Concept Kind " + pad(i + 1, 3));

    std::vector<std::string> relations;
    const char* named[] = {"affects", "causes", "treats", "prevents", "diagnoses",
                           "manages", "contains", "location of", "part of", "result of",
                           "associated with", "interacts with", "produces", "carries out",
                           "exhibits"};
    for (auto* r : named) relations.emplace_back(r);
    for (size_t i = relations.size(); i < 53; ++i) relations.push_back("related via " + pad(i, 2));

    {
        std::ofstream def(f.paths.srdef);
        size_t ui = 1;
        for (auto& t : roots) def << "STY|T" << pad(ui++, 3) << "|" << t << "|A|def|\n";
        for (auto& t : mids) def << "STY|T" << pad(ui++, 3) << "|" << t << "|A.1|def|\n";
        for (auto& t : leaves) def << "STY|T" << pad(ui++, 3) << "|" << t << "|A.1.1|def|\n";
        def << "RL|R000|isa||def|\n";
        for (size_t i = 0; i < relations.size(); ++i) {
            def << "RL|R" << pad(i + 1, 3) << "|" << relations[i] << "||def|\n";
        }
    }

    {
        std::ofstream str(f.paths.srstr);
        // Hierarchy: mids 0..12 under Entity, 13..24 under Event; each leaf
        // has one primary mid parent; leaves 0..28 carry a second parent
        // under the same root, which adds direct edges without adding
        // root-leaf closure pairs: 25 + 100 + 29 direct + 100 transitive = 254.
        for (size_t i = 0; i < mids.size(); ++i) {
            str << mids[i] << "|isa|" << (i < 13 ? roots[0] : roots[1]) << "|D|\n";
        }
        for (size_t i = 0; i < leaves.size(); ++i) {
            str << leaves[i] << "|isa|" << mids[i % 25] << "|D|\n";
        }
        for (size_t i = 0; i < 29; ++i) {
            size_t primary = i % 25;
            size_t secondary = primary < 13 ? (primary + 1) % 13 : 13 + (primary - 13 + 1) % 12;
            str << leaves[i] << "|isa|" << mids[secondary] << "|D|\n";
        }
        str << roots[0] << "|isa||D|\n";  // root rows carry an empty parent
        str << roots[1] << "|isa||D|\n";
        // Relation assertions between types.
        for (size_t k = 0; k < relations.size(); ++k) {
            str << mids[k % mids.size()] << "|" << relations[k] << "|" << leaves[(3 * k) % 100]
                << "|D|\n";
        }
        // Rows about the relation hierarchy itself must be ignored.
        str << relations[0] << "|isa|" << relations[1] << "|D|\n";
    }

    {
        std::ofstream sty(f.paths.mrsty);
        for (size_t i = 0; i < concepts; ++i) {
            std::string type = leaves[i % leaves.size()];
            sty << "C" << pad(i, 7) << "|T" << pad(28 + i % 100, 3) << "|A.1.1|" << type
                << "|AT0|\n";
        }
    }
    {
        std::ofstream conso(f.paths.mrconso);
        for (size_t i = 0; i < concepts; ++i) {
            std::string cui = "C" + pad(i, 7);
            std::string sui = "S" + pad(i, 7);
            std::string str = "nci term " + pad(i, 4);
            conso << cui << "|ENG|P|L" << pad(i, 7) << "|PF|" << sui << "|Y|A" << pad(i, 7)
                  << "||||NCI|PT|CODE" << i << "|" << str << "|0|N||\n";
        }
        // Non-English and foreign-vocabulary rows are filtered out.
        conso << "C9999999|FRE|P|L9999999|PF|S9999999|Y|A9999999||||NCI|PT|X|terme|0|N||\n";
        conso << "C9999998|ENG|P|L9999998|PF|S9999998|Y|A9999998||||MSH|PT|X|mesh term|0|N||\n";
    }
    return f;
}

// ---------------------------------------------------------------------------
// schema.org

struct SchemaorgFixture {
    fs::path types_csv;
    size_t node_count = 797;
    size_t expected_pairs = 2670;  // sum of node depths in the generated tree
};

/// Types CSV shaped like the real export: 797 types over 6 levels arranged
/// so the closure yields exactly 2,670 ancestor pairs (84/150/162/200/200
/// nodes at depths 1..5 under one root).
inline SchemaorgFixture make_schemaorg(const fs::path& dir) {
    SchemaorgFixture f;
    f.types_csv = dir / "types.csv";
    const size_t per_depth[6] = {1, 84, 150, 162, 200, 200};

    std::ofstream out(f.types_csv);
    out << "id,label,comment,subTypeOf\n";
    out << "https://example.org/Thing,Thing,\"the root, of everything\",\n";
    std::vector<std::vector<std::string>> by_depth(6);
    by_depth[0].push_back("Thing");
    for (size_t d = 1; d < 6; ++d) {
        for (size_t i = 0; i < per_depth[d]; ++i) {
            std::string label = "Type" + std::to_string(d) + "x" + pad(i, 3);
            const auto& parents = by_depth[d - 1];
            const std::string& parent = parents[i % parents.size()];
            out << "https://example.org/" << label << "," << label << ",\"doc, text\","
                << "https://example.org/" << parent << "\n";
            by_depth[d].push_back(label);
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Random strictly-leveled DAG taxonomies for oracle property tests.

inline olbench::Taxonomy random_dag_taxonomy(std::mt19937_64& rng, size_t max_nodes = 50,
                                             int max_levels = 5) {
    size_t n = 2 + rng() % (max_nodes - 1);
    int levels = 1 + static_cast<int>(rng() % max_levels);
    std::vector<std::string> labels;
    std::vector<int> level_of;
    std::vector<std::vector<size_t>> at_level(levels);
    for (size_t i = 0; i < n; ++i) {
        int lv = static_cast<int>(i == 0 ? 0 : rng() % levels);
        // Guarantee occupied prefix of levels so every non-root can find a
        // parent one level up.
        while (lv > 0 && at_level[lv - 1].empty()) --lv;
        labels.push_back("n" + std::to_string(i));
        level_of.push_back(lv);
        at_level[lv].push_back(i);
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (size_t i = 0; i < n; ++i) {
        int lv = level_of[i];
        if (lv == 0) continue;
        auto& parents = at_level[lv - 1];
        size_t first = parents[rng() % parents.size()];
        edges.emplace_back(labels[i], labels[first]);
        if (rng() % 3 == 0 && parents.size() > 1) {
            size_t second = parents[rng() % parents.size()];
            if (second != first) edges.emplace_back(labels[i], labels[second]);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return olbench::taxo::build(labels, edges);
}

}  // namespace fixtures
