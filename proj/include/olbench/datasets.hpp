#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/errors.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/text.hpp"

namespace olbench {

struct TermTypingItem {
    std::string item_id;
    std::string surface_form;
    std::optional<std::string> context_sentence;
    std::set<std::string> gold_types;
    SourceId source_id = SourceId::wordnet;
    Partition partition = Partition::unsplit;
};

/// A (type_a, type_b) candidate read as "type_a is a superclass of type_b".
/// Positives come from parent edges and their transitive closure; every
/// positive also yields its inversion as a negative, so labels stay balanced.
struct TypePairItem {
    enum class Provenance { direct, inverted, transitive, transitive_inverted };

    std::string item_id;
    std::string type_a;
    std::string type_b;
    bool label = false;
    Provenance provenance = Provenance::direct;
    Partition partition = Partition::unsplit;
};

inline const char* to_string(TypePairItem::Provenance p) {
    switch (p) {
        case TypePairItem::Provenance::direct: return "direct";
        case TypePairItem::Provenance::inverted: return "inverted";
        case TypePairItem::Provenance::transitive: return "transitive";
        case TypePairItem::Provenance::transitive_inverted: return "transitive_inverted";
    }
    return "?";
}

inline TypePairItem::Provenance pair_provenance_from_string(std::string_view s) {
    if (s == "direct") return TypePairItem::Provenance::direct;
    if (s == "inverted") return TypePairItem::Provenance::inverted;
    if (s == "transitive") return TypePairItem::Provenance::transitive;
    if (s == "transitive_inverted") return TypePairItem::Provenance::transitive_inverted;
    throw ConfigError("unknown provenance: " + std::string(s));
}

struct RelationTripleItem {
    std::string item_id;
    std::string head;
    std::string relation;
    std::string tail;
    bool label = false;
    Partition partition = Partition::unsplit;
};

struct SplitSpec {
    double test_fraction = 0.2;  // in (0, 1]
    uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Task A

inline std::vector<TermTypingItem> build_term_typing(const SourceCorpus& corpus) {
    if (corpus.records.empty()) {
        throw Error(std::string("empty dataset: corpus for ") + to_string(corpus.source_id) +
                    " has no term records");
    }
    std::vector<TermTypingItem> items;
    items.reserve(corpus.records.size());
    for (auto& r : corpus.records) {
        TermTypingItem it;
        it.item_id = std::string("A:") + to_string(r.source_id) + ":" + to_string(r.partition) +
                     ":" + r.term_id;
        it.surface_form = r.surface_form;
        it.context_sentence = r.context_sentence;
        it.gold_types = r.gold_types;
        it.source_id = r.source_id;
        it.partition = r.partition;
        items.push_back(std::move(it));
    }
    std::sort(items.begin(), items.end(),
              [](const TermTypingItem& a, const TermTypingItem& b) { return a.item_id < b.item_id; });
    return items;
}

// ---------------------------------------------------------------------------
// Task B
//
// Positive pairs: every parent edge read downward (parent superclass-of
// child), plus the transitive closure over longer parent paths. Negatives
// are the exact inversions of every positive. `max_gap` bounds the path
// length contributing transitive pairs (0 = unbounded, the default; 1 keeps
// only direct pairs).

inline std::vector<TypePairItem> build_taxonomy_pairs(const Taxonomy& taxonomy, int max_gap = 0) {
    auto report = validate_taxonomy(taxonomy);
    for (auto& issue : report.issues) {
        if (issue.kind == ValidationIssue::Kind::cycle) {
            throw TaxonomyIntegrityError("cannot build pairs: " + issue.detail);
        }
        if (issue.kind == ValidationIssue::Kind::duplicate_label ||
            issue.kind == ValidationIssue::Kind::unknown_endpoint) {
            throw TaxonomyIntegrityError("cannot build pairs: " + issue.detail);
        }
    }

    std::map<std::string, std::set<std::string>> children_of;  // parent -> direct children
    for (auto& [child, parent] : taxonomy.parent_edges) children_of[parent].insert(child);

    // (ancestor, descendant) -> shortest path length, BFS down from each node.
    std::map<std::pair<std::string, std::string>, int> reach;
    for (auto& node : taxonomy.nodes) {
        std::vector<std::pair<std::string, int>> frontier{{node.label, 0}};
        std::unordered_set<std::string> visited{node.label};
        size_t i = 0;
        while (i < frontier.size()) {
            auto [cur, dist] = frontier[i++];
            auto it = children_of.find(cur);
            if (it == children_of.end()) continue;
            for (auto& child : it->second) {
                if (!visited.insert(child).second) continue;
                int d = dist + 1;
                if (max_gap <= 0 || d <= max_gap) {
                    reach[{node.label, child}] = d;
                    frontier.emplace_back(child, d);
                }
            }
        }
    }

    // A pair reachable in one hop is direct even if longer paths also exist;
    // BFS already guarantees shortest distance.
    std::vector<TypePairItem> items;
    items.reserve(reach.size() * 2);
    for (auto& [pair, dist] : reach) {
        TypePairItem pos;
        pos.item_id = "B:" + pair.first + "|" + pair.second;
        pos.type_a = pair.first;
        pos.type_b = pair.second;
        pos.label = true;
        pos.provenance = dist == 1 ? TypePairItem::Provenance::direct
                                   : TypePairItem::Provenance::transitive;
        items.push_back(std::move(pos));
    }
    size_t n_pos = items.size();
    for (size_t i = 0; i < n_pos; ++i) {
        TypePairItem neg;
        neg.item_id = "B:" + items[i].type_b + "|" + items[i].type_a;
        neg.type_a = items[i].type_b;
        neg.type_b = items[i].type_a;
        neg.label = false;
        neg.provenance = items[i].provenance == TypePairItem::Provenance::direct
                             ? TypePairItem::Provenance::inverted
                             : TypePairItem::Provenance::transitive_inverted;
        items.push_back(std::move(neg));
    }
    return items;
}

// ---------------------------------------------------------------------------
// Task C
//
// All asserted (head, relation, tail) triples become positives. Negatives
// are drawn seeded-uniformly without replacement from the remaining
// head x relation x tail combinations over the taxonomy's types (self-pairs
// included unless asserted).

inline std::vector<RelationTripleItem> build_relation_triples(
    const std::vector<RelationAssertion>& relations, const Taxonomy& taxonomy,
    size_t negative_count, uint64_t seed) {
    if (relations.empty()) {
        throw Error("empty dataset: no relation assertions supplied");
    }

    std::vector<std::string> types;
    types.reserve(taxonomy.nodes.size());
    for (auto& n : taxonomy.nodes) types.push_back(n.label);
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());

    std::set<std::string> relation_names;
    for (auto& r : relations) relation_names.insert(r.relation);
    std::vector<std::string> rels(relation_names.begin(), relation_names.end());

    std::unordered_map<std::string, size_t> type_index;
    for (size_t i = 0; i < types.size(); ++i) type_index[types[i]] = i;
    std::unordered_map<std::string, size_t> rel_index;
    for (size_t i = 0; i < rels.size(); ++i) rel_index[rels[i]] = i;

    const size_t t_n = types.size(), r_n = rels.size();
    const uint64_t space = static_cast<uint64_t>(t_n) * r_n * t_n;

    auto encode = [&](const RelationAssertion& a) -> uint64_t {
        auto hi = type_index.find(a.head_type);
        auto ri = rel_index.find(a.relation);
        auto ti = type_index.find(a.tail_type);
        if (hi == type_index.end() || ti == type_index.end()) {
            throw IntegrityError("assertion endpoint not in taxonomy: " + a.head_type + " / " +
                                 a.tail_type);
        }
        return (static_cast<uint64_t>(hi->second) * r_n + ri->second) * t_n + ti->second;
    };
    auto decode = [&](uint64_t idx) -> RelationAssertion {
        size_t tail = idx % t_n;
        idx /= t_n;
        size_t rel = idx % r_n;
        size_t head = idx / r_n;
        return {types[head], rels[rel], types[tail]};
    };

    std::set<uint64_t> asserted;
    for (auto& a : relations) asserted.insert(encode(a));

    const uint64_t candidates = space - asserted.size();
    if (negative_count > candidates) {
        throw CapacityError("requested " + std::to_string(negative_count) +
                            " negatives but only " + std::to_string(candidates) +
                            " non-asserted combinations exist");
    }

    std::vector<uint64_t> negatives;
    negatives.reserve(negative_count);
    std::mt19937_64 rng(seed);
    if (negative_count * 3 >= candidates) {
        // Dense request: enumerate the complement and take a shuffled prefix.
        std::vector<uint64_t> pool;
        pool.reserve(candidates);
        for (uint64_t i = 0; i < space; ++i) {
            if (!asserted.count(i)) pool.push_back(i);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        negatives.assign(pool.begin(), pool.begin() + static_cast<ptrdiff_t>(negative_count));
    } else {
        std::uniform_int_distribution<uint64_t> dist(0, space - 1);
        std::set<uint64_t> drawn;
        while (drawn.size() < negative_count) {
            uint64_t idx = dist(rng);
            if (asserted.count(idx)) continue;
            drawn.insert(idx);
        }
        negatives.assign(drawn.begin(), drawn.end());
    }
    std::sort(negatives.begin(), negatives.end());

    std::vector<RelationTripleItem> items;
    items.reserve(asserted.size() + negatives.size());
    auto push = [&](const RelationAssertion& a, bool label) {
        RelationTripleItem it;
        it.item_id = "C:" + a.head_type + "|" + a.relation + "|" + a.tail_type;
        it.head = a.head_type;
        it.relation = a.relation;
        it.tail = a.tail_type;
        it.label = label;
        items.push_back(std::move(it));
    };
    for (uint64_t idx : asserted) push(decode(idx), true);
    for (uint64_t idx : negatives) push(decode(idx), false);
    return items;
}

// ---------------------------------------------------------------------------
// Splits
//
// Deterministic, input-order invariant: items are canonically sorted by id,
// grouped into label strata, shuffled per stratum with a seed derived from
// (spec.seed, stratum key), and cut so that train gets
// floor(n * (1 - test_fraction)) items overall. Per-stratum train quotas are
// apportioned by largest remainder so label balance carries into both sides.

namespace detail {

// n * share with products that are integers in exact arithmetic snapped
// back before flooring (1.0 - 0.8 is not representable, and 680 * that must
// still cut at 136, not 135).
inline long double exact_share(size_t n, double share) {
    long double exact = static_cast<long double>(n) * static_cast<long double>(share);
    long double nearest = nearbyintl(exact);
    if (fabsl(exact - nearest) < 1e-6L) exact = nearest;
    return exact;
}

inline std::string stratum_key(const TermTypingItem& it) {
    std::string key;
    for (auto& g : it.gold_types) key += g + "|";
    return key;
}
inline std::string stratum_key(const TypePairItem& it) { return it.label ? "true" : "false"; }
inline std::string stratum_key(const RelationTripleItem& it) { return it.label ? "true" : "false"; }

inline const std::string& item_id_of(const TermTypingItem& it) { return it.item_id; }
inline const std::string& item_id_of(const TypePairItem& it) { return it.item_id; }
inline const std::string& item_id_of(const RelationTripleItem& it) { return it.item_id; }

}  // namespace detail

template <typename Item>
std::pair<std::vector<Item>, std::vector<Item>> split_dataset(std::vector<Item> items,
                                                              const SplitSpec& spec) {
    if (items.empty()) throw Error("empty dataset: nothing to split");
    if (!(spec.test_fraction > 0.0 && spec.test_fraction <= 1.0)) {
        throw ConfigError("test_fraction must be in (0, 1]");
    }

    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return detail::item_id_of(a) < detail::item_id_of(b);
    });

    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < items.size(); ++i) {
        strata[detail::stratum_key(items[i])].push_back(i);
    }

    const double train_share = 1.0 - spec.test_fraction;
    const size_t train_total =
        static_cast<size_t>(floorl(detail::exact_share(items.size(), train_share)));

    // Largest-remainder apportionment of the train quota across strata.
    struct Share {
        const std::string* key;
        size_t floor_quota;
        double remainder;
    };
    std::vector<Share> shares;
    size_t used = 0;
    for (auto& [key, idxs] : strata) {
        long double exact = detail::exact_share(idxs.size(), train_share);
        size_t fl = static_cast<size_t>(floorl(exact));
        fl = std::min(fl, idxs.size());
        shares.push_back({&key, fl, static_cast<double>(exact - fl)});
        used += fl;
    }
    std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return *a.key < *b.key;
    });
    std::map<std::string, size_t> quota;
    for (auto& s : shares) quota[*s.key] = s.floor_quota;
    for (auto& s : shares) {
        if (used >= train_total) break;
        if (quota[*s.key] < strata[*s.key].size()) {
            ++quota[*s.key];
            ++used;
        }
    }

    std::vector<bool> is_train(items.size(), false);
    for (auto& [key, idxs] : strata) {
        std::vector<size_t> order = idxs;
        std::mt19937_64 rng(spec.seed ^ fnv1a64(key));
        std::shuffle(order.begin(), order.end(), rng);
        size_t q = quota[key];
        for (size_t i = 0; i < q && i < order.size(); ++i) is_train[order[i]] = true;
    }

    std::pair<std::vector<Item>, std::vector<Item>> out;
    for (size_t i = 0; i < items.size(); ++i) {
        items[i].partition = is_train[i] ? Partition::train : Partition::test;
        (is_train[i] ? out.first : out.second).push_back(std::move(items[i]));
    }
    return out;
}

/// Assign train/test partitions to a corpus's records in place (the
/// upstream split used for Task A sources that ship without one).
inline void split_corpus_records(SourceCorpus& corpus, const SplitSpec& spec) {
    auto items = build_term_typing(corpus);
    auto [train, test] = split_dataset(std::move(items), spec);
    std::unordered_set<std::string> train_ids;
    for (auto& it : train) train_ids.insert(it.item_id);
    for (auto& r : corpus.records) {
        std::string id = std::string("A:") + to_string(r.source_id) + ":" +
                         to_string(r.partition) + ":" + r.term_id;
        r.partition = train_ids.count(id) ? Partition::train : Partition::test;
    }
}

// ---------------------------------------------------------------------------
// Dataset JSONL forms (field order is part of the contract).

inline ojson item_to_json(const TermTypingItem& it) {
    ojson j;
    j["item_id"] = it.item_id;
    j["term"] = it.surface_form;
    if (it.context_sentence) j["sentence"] = *it.context_sentence;
    j["gold_types"] = it.gold_types;
    j["partition"] = to_string(it.partition);
    return j;
}

inline ojson item_to_json(const TypePairItem& it) {
    ojson j;
    j["item_id"] = it.item_id;
    j["a"] = it.type_a;
    j["b"] = it.type_b;
    j["label"] = it.label;
    j["provenance"] = to_string(it.provenance);
    j["partition"] = to_string(it.partition);
    return j;
}

inline ojson item_to_json(const RelationTripleItem& it) {
    ojson j;
    j["item_id"] = it.item_id;
    j["h"] = it.head;
    j["r"] = it.relation;
    j["t"] = it.tail;
    j["label"] = it.label;
    j["partition"] = to_string(it.partition);
    return j;
}

inline TermTypingItem term_item_from_json(const ojson& j, SourceId source) {
    TermTypingItem it;
    it.item_id = j.at("item_id").get<std::string>();
    it.surface_form = j.at("term").get<std::string>();
    if (j.contains("sentence")) it.context_sentence = j.at("sentence").get<std::string>();
    for (auto& g : j.at("gold_types")) it.gold_types.insert(g.get<std::string>());
    it.source_id = source;
    it.partition = partition_from_string(j.at("partition").get<std::string>());
    return it;
}

inline TypePairItem pair_item_from_json(const ojson& j) {
    TypePairItem it;
    it.item_id = j.at("item_id").get<std::string>();
    it.type_a = j.at("a").get<std::string>();
    it.type_b = j.at("b").get<std::string>();
    it.label = j.at("label").get<bool>();
    it.provenance = pair_provenance_from_string(j.at("provenance").get<std::string>());
    it.partition = partition_from_string(j.at("partition").get<std::string>());
    return it;
}

inline RelationTripleItem triple_item_from_json(const ojson& j) {
    RelationTripleItem it;
    it.item_id = j.at("item_id").get<std::string>();
    it.head = j.at("h").get<std::string>();
    it.relation = j.at("r").get<std::string>();
    it.tail = j.at("t").get<std::string>();
    it.label = j.at("label").get<bool>();
    it.partition = partition_from_string(j.at("partition").get<std::string>());
    return it;
}

template <typename Item>
void write_items_jsonl(const std::vector<Item>& items, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (auto& it : items) w.write(item_to_json(it));
}

}  // namespace olbench
