#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "olbench/answers.hpp"
#include "olbench/backend_types.hpp"
#include "olbench/datasets.hpp"
#include "olbench/errors.hpp"
#include "olbench/jsonl.hpp"

namespace olbench {

struct Prediction {
    std::string item_id;
    std::vector<std::string> ranked_labels;  // canonical labels, no duplicates
    std::string raw_text;
    bool ambiguous = false;  // two labels matched equally well; see mapping rules
};

namespace eval_detail {

// ASCII letters/digits continue a word; punctuation and spaces break it.
// Multi-byte UTF-8 is treated as word material so accented words never
// split mid-character.
inline bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || u >= 0x80;
}

// Whole-word prefix: `variant` matches the start of `text` and the match
// ends at a word boundary ("noun" matches "noun phrase" but not "nounish").
inline bool whole_word_prefix(const std::string& text, const std::string& variant) {
    if (variant.empty() || text.size() <= variant.size()) return false;
    if (text.compare(0, variant.size(), variant) != 0) return false;
    return !is_word_char(text[variant.size()]);
}

// Position of the first word-bounded occurrence of `variant` in `text`,
// or npos.
inline size_t find_word(const std::string& text, const std::string& variant) {
    if (variant.empty()) return std::string::npos;
    size_t pos = 0;
    while ((pos = text.find(variant, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        size_t end = pos + variant.size();
        bool right_ok = end == text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return pos;
        pos += 1;
    }
    return std::string::npos;
}

struct Match {
    std::string label;
    size_t variant_len;
};

}  // namespace eval_detail

/// Map raw Task A model text to canonical type labels. Exact normalized
/// matches rank before whole-word-prefix matches; within a tier the longer
/// matched variant wins, with full ties broken by canonical label order and
/// flagged ambiguous. No match yields an empty prediction (a miss), never
/// an error.
inline Prediction map_term_type(const std::string& item_id, const std::string& raw,
                                const AnswerSpace& space) {
    Prediction p;
    p.item_id = item_id;
    p.raw_text = raw;
    std::string text = normalize_answer(raw);
    if (text.empty()) return p;

    std::vector<eval_detail::Match> exact, prefix;
    for (auto& [label, variants] : space.labels) {
        for (auto& v : variants) {
            if (v == text) {
                exact.push_back({label, v.size()});
            } else if (eval_detail::whole_word_prefix(text, v)) {
                prefix.push_back({label, v.size()});
            }
        }
    }
    auto order = [](const eval_detail::Match& a, const eval_detail::Match& b) {
        if (a.variant_len != b.variant_len) return a.variant_len > b.variant_len;
        return a.label < b.label;
    };
    std::sort(exact.begin(), exact.end(), order);
    std::sort(prefix.begin(), prefix.end(), order);

    std::set<std::string> seen;
    auto take = [&](const std::vector<eval_detail::Match>& tier) {
        for (size_t i = 0; i < tier.size(); ++i) {
            if (seen.insert(tier[i].label).second) p.ranked_labels.push_back(tier[i].label);
            if (i + 1 < tier.size() && tier[i].variant_len == tier[i + 1].variant_len &&
                tier[i].label != tier[i + 1].label) {
                p.ambiguous = true;
            }
        }
    };
    take(exact);
    take(prefix);
    return p;
}

/// Rank fill-mask tokens against a Task A space: tokens are mapped in score
/// order, collecting distinct canonical labels.
inline Prediction map_term_type_ranked(const std::string& item_id,
                                       const std::vector<RankedToken>& tokens,
                                       const AnswerSpace& space) {
    Prediction p;
    p.item_id = item_id;
    std::vector<RankedToken> sorted = tokens;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const RankedToken& a, const RankedToken& b) { return a.score > b.score; });
    std::set<std::string> seen;
    for (auto& t : sorted) {
        if (!p.raw_text.empty()) p.raw_text += " ";
        p.raw_text += t.token;
        Prediction one = map_term_type(item_id, t.token, space);
        for (auto& label : one.ranked_labels) {
            if (seen.insert(label).second) p.ranked_labels.push_back(label);
        }
        p.ambiguous = p.ambiguous || one.ambiguous;
    }
    return p;
}

/// Map a boolean-task response. Free text: the first word-bounded variant
/// occurrence decides (position, then variant length). Ranked mask tokens:
/// the highest-scored token belonging to either variant set decides. No hit
/// is a miss (empty prediction).
inline Prediction map_boolean(const std::string& item_id, const RawResponse& response,
                              const AnswerSpace& space) {
    Prediction p;
    p.item_id = item_id;
    if (!response.ranked_tokens.empty()) {
        std::vector<RankedToken> sorted = response.ranked_tokens;
        std::stable_sort(sorted.begin(), sorted.end(), [](const RankedToken& a,
                                                          const RankedToken& b) {
            return a.score > b.score;
        });
        for (auto& t : sorted) {
            if (!p.raw_text.empty()) p.raw_text += " ";
            p.raw_text += t.token;
        }
        for (auto& t : sorted) {
            std::string norm = normalize_answer(t.token);
            for (auto& [label, variants] : space.labels) {
                if (std::find(variants.begin(), variants.end(), norm) != variants.end()) {
                    p.ranked_labels.push_back(label);
                    return p;
                }
            }
        }
        return p;
    }

    p.raw_text = response.text.value_or("");
    std::string text = normalize_answer(p.raw_text);
    if (text.empty()) return p;
    size_t best_pos = std::string::npos;
    size_t best_len = 0;
    std::string best_label;
    for (auto& [label, variants] : space.labels) {
        for (auto& v : variants) {
            size_t pos = eval_detail::find_word(text, v);
            if (pos == std::string::npos) continue;
            if (pos < best_pos || (pos == best_pos && v.size() > best_len)) {
                best_pos = pos;
                best_len = v.size();
                best_label = label;
            }
        }
    }
    if (best_pos != std::string::npos) p.ranked_labels.push_back(best_label);
    return p;
}

// ---------------------------------------------------------------------------
// Metrics

/// Mean average precision truncated at rank k. Per item, AP@k sums
/// precision-at-r over the relevant ranks r <= k and divides by
/// min(k, |gold|); the mean runs over all predictions. With k = 1 and
/// singleton predictions this is the top-1 hit rate against the gold set.
inline double map_at_k(const std::vector<Prediction>& predictions,
                       const std::map<std::string, std::set<std::string>>& golds, int k) {
    if (k < 1) throw ConfigError("map_at_k requires k >= 1");
    if (predictions.empty()) return 0.0;
    double total = 0.0;
    for (auto& p : predictions) {
        auto git = golds.find(p.item_id);
        if (git == golds.end()) {
            throw IntegrityError("prediction for unknown item_id: " + p.item_id);
        }
        const auto& gold = git->second;
        if (gold.empty()) continue;
        double ap = 0.0;
        int hits = 0;
        int upto = std::min<int>(k, static_cast<int>(p.ranked_labels.size()));
        for (int r = 0; r < upto; ++r) {
            if (gold.count(p.ranked_labels[r])) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        ap /= static_cast<double>(std::min<size_t>(k, gold.size()));
        total += ap;
    }
    return total / static_cast<double>(predictions.size());
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision/recall/F1 for boolean tasks. An empty prediction counts as a
/// negative-class call (declining to confirm is a non-confirmation); zero
/// denominators yield zero rather than NaN.
inline Prf prf1(const std::vector<Prediction>& predictions,
                const std::map<std::string, bool>& golds) {
    size_t tp = 0, fp = 0, fn = 0;
    for (auto& p : predictions) {
        auto git = golds.find(p.item_id);
        if (git == golds.end()) {
            throw IntegrityError("prediction for unknown item_id: " + p.item_id);
        }
        bool predicted_true = !p.ranked_labels.empty() && p.ranked_labels.front() == "true";
        if (predicted_true && git->second) ++tp;
        else if (predicted_true && !git->second) ++fp;
        else if (!predicted_true && git->second) ++fn;
    }
    Prf out;
    out.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    out.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    out.f1 = (out.precision + out.recall > 0.0)
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Scoring a run

struct PerItemEntry {
    std::string item_id;
    std::string predicted;  // top-1 canonical label, empty on miss
    std::string gold;
    bool hit = false;
    bool ambiguous = false;
    bool miss = false;  // no mappable answer in the raw response
};

struct EvalReport {
    char task = 'A';
    std::string dataset_id;
    std::string backend_id;
    std::string template_id;
    size_t n_items = 0;
    int k = 1;
    std::optional<double> map_at_k_value;  // Task A
    std::optional<Prf> prf;                // Tasks B/C
    std::vector<PerItemEntry> per_item;

    double primary_metric() const {
        if (map_at_k_value) return *map_at_k_value;
        if (prf) return prf->f1;
        return 0.0;
    }
};

struct RunScore {
    std::vector<EvalReport> per_template;
    std::string best_template_id;
    double best_metric = 0.0;
};

/// A dataset to score against: exactly one of the three task item lists.
struct ScoreDataset {
    char task = 'A';
    std::string dataset_id;
    const std::vector<TermTypingItem>* term_items = nullptr;
    const std::vector<TypePairItem>* pair_items = nullptr;
    const std::vector<RelationTripleItem>* triple_items = nullptr;
};

namespace eval_detail {

template <typename Item>
std::vector<const Item*> test_partition(const std::vector<Item>& items) {
    std::vector<const Item*> out;
    for (auto& it : items) {
        if (it.partition == Partition::test) out.push_back(&it);
    }
    return out;
}

inline std::string gold_repr(const TermTypingItem& it) {
    std::string s;
    for (auto& g : it.gold_types) {
        if (!s.empty()) s += "|";
        s += g;
    }
    return s;
}

}  // namespace eval_detail

/// Score one run: responses must cover every test-partition item exactly
/// once per template. Produces one report per template plus the best-template
/// summary (non-best scores are never discarded).
inline RunScore score_run(const std::vector<RawResponse>& responses, const ScoreDataset& dataset,
                          const AnswerSpace& space, int k = 1) {
    std::map<std::string, std::map<std::string, const RawResponse*>> by_template;  // tpl -> item -> resp
    for (auto& r : responses) {
        auto& slot = by_template[r.template_id][r.item_id];
        if (slot != nullptr) {
            throw IntegrityError("duplicate response for item " + r.item_id + " under template " +
                                 r.template_id);
        }
        slot = &r;
    }
    if (by_template.empty()) throw IntegrityError("no responses to score");

    RunScore score;
    for (auto& [template_id, resp_map] : by_template) {
        EvalReport report;
        report.task = dataset.task;
        report.dataset_id = dataset.dataset_id;
        report.template_id = template_id;
        report.k = k;
        if (!resp_map.empty()) report.backend_id = resp_map.begin()->second->backend_id;

        std::vector<Prediction> predictions;
        std::map<std::string, std::set<std::string>> term_golds;
        std::map<std::string, bool> bool_golds;
        std::vector<std::string> missing;

        auto fetch = [&](const std::string& item_id) -> const RawResponse* {
            auto it = resp_map.find(item_id);
            if (it == resp_map.end()) {
                missing.push_back(item_id);
                return nullptr;
            }
            return it->second;
        };

        if (dataset.task == 'A') {
            if (!dataset.term_items) throw ConfigError("task A dataset without term items");
            auto items = eval_detail::test_partition(*dataset.term_items);
            for (auto* item : items) {
                const RawResponse* r = fetch(item->item_id);
                if (!r) continue;
                Prediction p = r->ranked_tokens.empty()
                                   ? map_term_type(item->item_id, r->text.value_or(""), space)
                                   : map_term_type_ranked(item->item_id, r->ranked_tokens, space);
                term_golds[item->item_id] = item->gold_types;
                PerItemEntry e;
                e.item_id = item->item_id;
                e.predicted = p.ranked_labels.empty() ? "" : p.ranked_labels.front();
                e.gold = eval_detail::gold_repr(*item);
                e.hit = !p.ranked_labels.empty() && item->gold_types.count(p.ranked_labels.front());
                e.ambiguous = p.ambiguous;
                e.miss = p.ranked_labels.empty();
                report.per_item.push_back(std::move(e));
                predictions.push_back(std::move(p));
            }
            if (!missing.empty()) {
                std::string ids;
                for (size_t i = 0; i < missing.size() && i < 10; ++i) ids += " " + missing[i];
                throw IntegrityError("responses missing for " + std::to_string(missing.size()) +
                                     " items under template " + template_id + ":" + ids);
            }
            report.n_items = predictions.size();
            report.map_at_k_value = map_at_k(predictions, term_golds, k);
        } else {
            auto handle_bool = [&](const std::string& item_id, bool gold) {
                const RawResponse* r = fetch(item_id);
                if (!r) return;
                Prediction p = map_boolean(item_id, *r, space);
                bool_golds[item_id] = gold;
                PerItemEntry e;
                e.item_id = item_id;
                e.predicted = p.ranked_labels.empty() ? "" : p.ranked_labels.front();
                e.gold = gold ? "true" : "false";
                bool predicted_true = !p.ranked_labels.empty() && p.ranked_labels.front() == "true";
                e.hit = predicted_true == gold && !p.ranked_labels.empty();
                e.miss = p.ranked_labels.empty();
                // An empty prediction still scores as a negative call; hit
                // reflects the effective call.
                if (p.ranked_labels.empty()) e.hit = !gold;
                report.per_item.push_back(std::move(e));
                predictions.push_back(std::move(p));
            };
            if (dataset.task == 'B') {
                if (!dataset.pair_items) throw ConfigError("task B dataset without pair items");
                for (auto* item : eval_detail::test_partition(*dataset.pair_items)) {
                    handle_bool(item->item_id, item->label);
                }
            } else {
                if (!dataset.triple_items) throw ConfigError("task C dataset without triple items");
                for (auto* item : eval_detail::test_partition(*dataset.triple_items)) {
                    handle_bool(item->item_id, item->label);
                }
            }
            if (!missing.empty()) {
                std::string ids;
                for (size_t i = 0; i < missing.size() && i < 10; ++i) ids += " " + missing[i];
                throw IntegrityError("responses missing for " + std::to_string(missing.size()) +
                                     " items under template " + template_id + ":" + ids);
            }
            report.n_items = predictions.size();
            report.prf = prf1(predictions, bool_golds);
        }
        score.per_template.push_back(std::move(report));
    }

    for (auto& r : score.per_template) {
        if (score.best_template_id.empty() || r.primary_metric() > score.best_metric) {
            score.best_template_id = r.template_id;
            score.best_metric = r.primary_metric();
        }
    }
    return score;
}

// ---------------------------------------------------------------------------
// Serialized forms: aggregate JSON plus a per-item JSONL ledger.

inline ojson report_to_json(const EvalReport& r) {
    ojson j;
    j["task"] = std::string(1, r.task);
    j["dataset_id"] = r.dataset_id;
    j["backend_id"] = r.backend_id;
    j["template_id"] = r.template_id;
    j["n_items"] = r.n_items;
    j["k"] = r.k;
    if (r.map_at_k_value) {
        if (r.k == 1) j["map_at_1"] = *r.map_at_k_value;
        else j["map_at_k"] = *r.map_at_k_value;
    }
    if (r.prf) {
        j["precision"] = r.prf->precision;
        j["recall"] = r.prf->recall;
        j["f1"] = r.prf->f1;
    }
    return j;
}

inline ojson run_score_to_json(const RunScore& s) {
    ojson j;
    ojson per = ojson::array();
    for (auto& r : s.per_template) per.push_back(report_to_json(r));
    j["per_template"] = std::move(per);
    j["best_template_id"] = s.best_template_id;
    j["best_metric"] = s.best_metric;
    return j;
}

inline void write_per_item_ledger(const RunScore& s, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (auto& report : s.per_template) {
        for (auto& e : report.per_item) {
            ojson j;
            j["template_id"] = report.template_id;
            j["item_id"] = e.item_id;
            j["predicted"] = e.predicted;
            j["gold"] = e.gold;
            j["hit"] = e.hit;
            if (e.miss) j["miss"] = true;
            if (e.ambiguous) j["ambiguous"] = true;
            w.write(j);
        }
    }
}

}  // namespace olbench
