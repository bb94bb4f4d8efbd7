#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "olbench/errors.hpp"
#include "olbench/jsonl.hpp"

namespace olbench {

/// Backend flavors: the two wire shapes (OpenAI-style completion/chat), the
/// fill-mask shape for masked models, and two deterministic local stubs used
/// for oracle runs and replay tests.
enum class BackendKind { completion, chat, fill_mask, stub_echo_gold, stub_constant };

inline const char* to_string(BackendKind k) {
    switch (k) {
        case BackendKind::completion: return "completion";
        case BackendKind::chat: return "chat";
        case BackendKind::fill_mask: return "fill_mask";
        case BackendKind::stub_echo_gold: return "stub_echo_gold";
        case BackendKind::stub_constant: return "stub_constant";
    }
    return "?";
}

inline BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "completion") return BackendKind::completion;
    if (s == "chat") return BackendKind::chat;
    if (s == "fill_mask") return BackendKind::fill_mask;
    if (s == "stub_echo_gold") return BackendKind::stub_echo_gold;
    if (s == "stub_constant") return BackendKind::stub_constant;
    throw ConfigError("unknown backend kind: " + std::string(s));
}

inline bool is_stub(BackendKind k) {
    return k == BackendKind::stub_echo_gold || k == BackendKind::stub_constant;
}

struct BackendConfig {
    std::string backend_id;
    BackendKind kind = BackendKind::stub_constant;
    std::optional<std::string> endpoint_url;  // required for wire kinds, forbidden for stubs
    std::string model_name;
    int max_output_tokens = 16;
    double temperature = 0.0;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 2;
    std::optional<std::string> stub_constant_text;
    std::string api_key_env = "OLBENCH_API_KEY";
    int mask_top_k = 10;
    std::chrono::milliseconds retry_initial_backoff{200};
    double requests_per_second = 0.0;  // 0 = unlimited

    void validate() const {
        if (backend_id.empty()) throw ConfigError("backend_id must be set");
        if (is_stub(kind)) {
            if (endpoint_url) {
                throw ConfigError("stub backend '" + backend_id + "' must not set endpoint_url");
            }
            if (kind == BackendKind::stub_constant && !stub_constant_text) {
                throw ConfigError("stub_constant backend '" + backend_id +
                                  "' requires stub_constant_text");
            }
        } else {
            if (!endpoint_url || endpoint_url->empty()) {
                throw ConfigError("wire backend '" + backend_id + "' requires endpoint_url");
            }
        }
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    }
};

struct RankedToken {
    std::string token;
    double score = 0.0;
};

struct RawResponse {
    std::string item_id;
    std::string template_id;
    std::string backend_id;
    std::optional<std::string> text;        // completion/chat/stub output
    std::vector<RankedToken> ranked_tokens;  // fill_mask output, >= 1 entry
    double latency_ms = 0.0;
    bool from_cache = false;
};

inline ojson response_to_json(const RawResponse& r) {
    ojson j;
    j["item_id"] = r.item_id;
    j["template_id"] = r.template_id;
    j["backend_id"] = r.backend_id;
    if (r.text) j["text"] = *r.text;
    if (!r.ranked_tokens.empty()) {
        ojson toks = ojson::array();
        for (auto& t : r.ranked_tokens) toks.push_back(ojson{{"token", t.token}, {"score", t.score}});
        j["ranked_tokens"] = std::move(toks);
    }
    j["latency_ms"] = r.latency_ms;
    return j;
}

inline RawResponse response_from_json(const ojson& j) {
    RawResponse r;
    r.item_id = j.at("item_id").get<std::string>();
    r.template_id = j.at("template_id").get<std::string>();
    r.backend_id = j.at("backend_id").get<std::string>();
    if (j.contains("text")) r.text = j.at("text").get<std::string>();
    if (j.contains("ranked_tokens")) {
        for (auto& t : j.at("ranked_tokens")) {
            r.ranked_tokens.push_back({t.at("token").get<std::string>(), t.at("score").get<double>()});
        }
    }
    if (j.contains("latency_ms")) r.latency_ms = j.at("latency_ms").get<double>();
    return r;
}

inline ojson backend_config_to_json(const BackendConfig& c) {
    ojson j;
    j["backend_id"] = c.backend_id;
    j["kind"] = to_string(c.kind);
    if (c.endpoint_url) j["endpoint_url"] = *c.endpoint_url;
    j["model_name"] = c.model_name;
    j["max_output_tokens"] = c.max_output_tokens;
    j["temperature"] = c.temperature;
    j["request_timeout_ms"] = c.request_timeout.count();
    j["max_retries"] = c.max_retries;
    if (c.stub_constant_text) j["stub_constant_text"] = *c.stub_constant_text;
    j["api_key_env"] = c.api_key_env;
    j["mask_top_k"] = c.mask_top_k;
    j["retry_initial_backoff_ms"] = c.retry_initial_backoff.count();
    j["requests_per_second"] = c.requests_per_second;
    return j;
}

inline BackendConfig backend_config_from_json(const ojson& j) {
    BackendConfig c;
    c.backend_id = j.at("backend_id").get<std::string>();
    c.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("endpoint_url")) c.endpoint_url = j.at("endpoint_url").get<std::string>();
    if (j.contains("model_name")) c.model_name = j.at("model_name").get<std::string>();
    if (j.contains("max_output_tokens")) c.max_output_tokens = j.at("max_output_tokens").get<int>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("request_timeout_ms")) {
        c.request_timeout = std::chrono::milliseconds(j.at("request_timeout_ms").get<int64_t>());
    }
    if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
    if (j.contains("stub_constant_text")) {
        c.stub_constant_text = j.at("stub_constant_text").get<std::string>();
    }
    if (j.contains("api_key_env")) c.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("mask_top_k")) c.mask_top_k = j.at("mask_top_k").get<int>();
    if (j.contains("retry_initial_backoff_ms")) {
        c.retry_initial_backoff =
            std::chrono::milliseconds(j.at("retry_initial_backoff_ms").get<int64_t>());
    }
    if (j.contains("requests_per_second")) {
        c.requests_per_second = j.at("requests_per_second").get<double>();
    }
    c.validate();
    return c;
}

}  // namespace olbench
