#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "olbench/corpus.hpp"
#include "olbench/datasets.hpp"
#include "olbench/errors.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/text.hpp"

namespace olbench {

enum class Task { A, B, C };

inline const char* to_string(Task t) {
    switch (t) {
        case Task::A: return "A";
        case Task::B: return "B";
        case Task::C: return "C";
    }
    return "?";
}

inline Task task_from_string(std::string_view s) {
    if (s == "A" || s == "a") return Task::A;
    if (s == "B" || s == "b") return Task::B;
    if (s == "C" || s == "c") return Task::C;
    throw ConfigError("unknown task: " + std::string(s));
}

/// Which prompt form a model family consumes: cloze with a mask slot
/// (masked), an open-ended question/statement continuation (seq2seq), an
/// instruction-prefixed completion (causal), or the completion variant that
/// ends with "The answer is" (causal_answer_suffix).
enum class ModelFamily { masked, seq2seq, causal, causal_answer_suffix };

inline const char* to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::masked: return "masked";
        case ModelFamily::seq2seq: return "seq2seq";
        case ModelFamily::causal: return "causal";
        case ModelFamily::causal_answer_suffix: return "causal_answer_suffix";
    }
    return "?";
}

inline ModelFamily family_from_string(std::string_view s) {
    if (s == "masked") return ModelFamily::masked;
    if (s == "seq2seq") return ModelFamily::seq2seq;
    if (s == "causal") return ModelFamily::causal;
    if (s == "causal_answer_suffix") return ModelFamily::causal_answer_suffix;
    throw ConfigError("unknown model family: " + std::string(s));
}

struct PromptTemplate {
    std::string template_id;
    Task task = Task::A;
    std::string source_key;  // "wordnet", "geonames", "umls", or "shared"
    ModelFamily family = ModelFamily::masked;
    std::string pattern;
    std::string domain_phrase;
    std::optional<std::string> hierarchy_phrase;
};

struct RenderedPrompt {
    std::string template_id;
    std::string item_id;
    std::string text;
    std::optional<std::string> mask_token_used;
};

namespace prompts {

inline const std::set<std::string>& allowed_placeholders(Task t) {
    static const std::set<std::string> a{"S", "L", "P_domain", "MASK"};
    static const std::set<std::string> b{"a", "b", "P_hierarchy", "MASK"};
    static const std::set<std::string> c{"h", "r", "t", "MASK"};
    switch (t) {
        case Task::A: return a;
        case Task::B: return b;
        case Task::C: return c;
    }
    return a;
}

inline std::vector<std::string> placeholders_in(std::string_view pattern) {
    std::vector<std::string> out;
    size_t pos = 0;
    while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
        size_t end = pattern.find('}', pos);
        if (end == std::string_view::npos) break;
        out.emplace_back(pattern.substr(pos + 1, end - pos - 1));
        pos = end + 1;
    }
    return out;
}

/// Catalog lookup key for a concrete source. The three UMLS subontologies
/// share the UMLS catalogs; Task B shares one catalog across its sources.
inline std::optional<std::string> catalog_source_key(Task task, SourceId source) {
    bool umlsish = source == SourceId::nci || source == SourceId::medcin ||
                   source == SourceId::snomedct_us || source == SourceId::umls;
    switch (task) {
        case Task::A:
            if (source == SourceId::wordnet) return "wordnet";
            if (source == SourceId::geonames) return "geonames";
            if (umlsish) return "umls";
            return std::nullopt;  // schema.org ships no term instances
        case Task::B:
            if (source == SourceId::wordnet) return std::nullopt;  // no type taxonomy
            return "shared";
        case Task::C:
            if (umlsish) return "umls";
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace prompts

/// Loads the template data files (one JSONL per catalog) and serves the
/// per-(task, source, family) catalogs. Patterns are data, not code, so the
/// shipped files can be diffed against their transcription goldens.
class TemplateLibrary {
public:
    explicit TemplateLibrary(const std::filesystem::path& dir) : dir_(dir) {
        if (!std::filesystem::is_directory(dir)) {
            throw ConfigError("template directory not found: " + dir.string());
        }
        std::vector<std::filesystem::path> files;
        for (auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() == ".jsonl") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (auto& f : files) load_file(f);
        if (templates_.empty()) {
            throw ConfigError("no template files in " + dir.string());
        }
    }

    /// Catalog for a (task, source, family) combination, in t1..tN order.
    /// Undefined combinations raise CatalogMissingError naming the gap.
    std::vector<PromptTemplate> catalog(Task task, SourceId source, ModelFamily family) const {
        auto key = prompts::catalog_source_key(task, source);
        std::vector<PromptTemplate> out;
        if (key) {
            for (auto& t : templates_) {
                if (t.task == task && t.source_key == *key && t.family == family) out.push_back(t);
            }
        }
        if (out.empty()) {
            throw CatalogMissingError(std::string("no template catalog for task ") +
                                      to_string(task) + ", source " + to_string(source) +
                                      ", family " + to_string(family));
        }
        return out;
    }

    const std::vector<PromptTemplate>& all() const { return templates_; }

    const PromptTemplate& by_id(const std::string& id) const {
        for (auto& t : templates_) {
            if (t.template_id == id) return t;
        }
        throw CatalogMissingError("no template with id " + id);
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    void load_file(const std::filesystem::path& path) {
        for_each_jsonl(path, [&](const ojson& j, size_t lineno) {
            PromptTemplate t;
            t.template_id = j.at("template_id").get<std::string>();
            t.task = task_from_string(j.at("task").get<std::string>());
            t.source_key = j.at("source").get<std::string>();
            t.family = family_from_string(j.at("family").get<std::string>());
            t.pattern = j.at("pattern").get<std::string>();
            if (j.contains("domain_phrase")) t.domain_phrase = j.at("domain_phrase").get<std::string>();
            if (j.contains("hierarchy_phrase")) {
                t.hierarchy_phrase = j.at("hierarchy_phrase").get<std::string>();
            }
            validate(t, path, lineno);
            if (!ids_.insert(t.template_id).second) {
                throw ParseError(path.string(), lineno, "duplicate template_id " + t.template_id);
            }
            templates_.push_back(std::move(t));
        });
    }

    static void validate(const PromptTemplate& t, const std::filesystem::path& path,
                         size_t lineno) {
        auto& allowed = prompts::allowed_placeholders(t.task);
        size_t masks = 0;
        for (auto& p : prompts::placeholders_in(t.pattern)) {
            if (!allowed.count(p)) {
                throw ParseError(path.string(), lineno,
                                 "placeholder {" + p + "} not allowed in task " +
                                     to_string(t.task) + " patterns");
            }
            if (p == "MASK") ++masks;
        }
        if (t.family == ModelFamily::masked && masks != 1) {
            throw ParseError(path.string(), lineno,
                             "masked-family pattern must contain exactly one {MASK}: " +
                                 t.template_id);
        }
    }

    std::filesystem::path dir_;
    std::vector<PromptTemplate> templates_;
    std::set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Rendering

namespace prompts {

inline std::string substitute_common(const PromptTemplate& t,
                                     const std::map<std::string, std::string>& values,
                                     std::string_view mask_token) {
    std::string text = t.pattern;
    // The context sentence is optional: when absent, the whole "{S}. "
    // segment disappears rather than leaving a stray period.
    auto s_it = values.find("S");
    if (t.pattern.find("{S}") != std::string::npos) {
        if (s_it != values.end() && !s_it->second.empty()) {
            text = replace_all(std::move(text), "{S}", s_it->second);
        } else {
            text = replace_all(std::move(text), "{S}. ", "");
            text = replace_all(std::move(text), "{S}.", "");  // segment at end of line
        }
    }
    for (auto& [k, v] : values) {
        if (k == "S") continue;
        text = replace_all(std::move(text), "{" + k + "}", v);
    }
    if (text.find("{MASK}") != std::string::npos) {
        if (mask_token.empty()) {
            throw RenderError("template " + t.template_id +
                              " requires a mask token but none was provided");
        }
        text = replace_all(std::move(text), "{MASK}", mask_token);
    }
    for (auto& leftover : placeholders_in(text)) {
        throw RenderError("unsubstitutable placeholder {" + leftover + "} in template " +
                          t.template_id);
    }
    return text;
}

}  // namespace prompts

inline RenderedPrompt render(const PromptTemplate& t, const TermTypingItem& item,
                             std::string_view mask_token = "") {
    std::map<std::string, std::string> values{{"L", item.surface_form},
                                              {"P_domain", t.domain_phrase}};
    if (item.context_sentence) values["S"] = *item.context_sentence;
    RenderedPrompt out;
    out.template_id = t.template_id;
    out.item_id = item.item_id;
    out.text = prompts::substitute_common(t, values, mask_token);
    if (t.family == ModelFamily::masked) out.mask_token_used = std::string(mask_token);
    return out;
}

inline RenderedPrompt render(const PromptTemplate& t, const TypePairItem& item,
                             std::string_view mask_token = "") {
    std::map<std::string, std::string> values{{"a", item.type_a}, {"b", item.type_b}};
    if (t.hierarchy_phrase) values["P_hierarchy"] = *t.hierarchy_phrase;
    RenderedPrompt out;
    out.template_id = t.template_id;
    out.item_id = item.item_id;
    out.text = prompts::substitute_common(t, values, mask_token);
    if (t.family == ModelFamily::masked) out.mask_token_used = std::string(mask_token);
    return out;
}

inline RenderedPrompt render(const PromptTemplate& t, const RelationTripleItem& item,
                             std::string_view mask_token = "") {
    std::map<std::string, std::string> values{
        {"h", item.head}, {"r", item.relation}, {"t", item.tail}};
    RenderedPrompt out;
    out.template_id = t.template_id;
    out.item_id = item.item_id;
    out.text = prompts::substitute_common(t, values, mask_token);
    if (t.family == ModelFamily::masked) out.mask_token_used = std::string(mask_token);
    return out;
}

inline ojson template_to_json(const PromptTemplate& t) {
    ojson j;
    j["template_id"] = t.template_id;
    j["task"] = to_string(t.task);
    j["source"] = t.source_key;
    j["family"] = to_string(t.family);
    j["pattern"] = t.pattern;
    if (!t.domain_phrase.empty()) j["domain_phrase"] = t.domain_phrase;
    if (t.hierarchy_phrase) j["hierarchy_phrase"] = *t.hierarchy_phrase;
    return j;
}

}  // namespace olbench
