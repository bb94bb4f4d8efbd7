#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>

#include "olbench/backend_types.hpp"
#include "olbench/errors.hpp"
#include "olbench/hash.hpp"
#include "olbench/jsonl.hpp"
#include "olbench/prompts.hpp"
#include "olbench/text.hpp"

namespace olbench {

/// Cache key: cryptographic hash over every field that can change a model's
/// answer. Fields are length-prefixed so adjacent values cannot collide.
inline std::string cache_key(const BackendConfig& config, const RenderedPrompt& prompt) {
    auto field = [](std::string_view v) {
        return std::to_string(v.size()) + ":" + std::string(v) + ";";
    };
    std::string material;
    material += field(config.model_name);
    material += field(to_string(config.kind));
    material += field(std::to_string(config.temperature));
    material += field(std::to_string(config.max_output_tokens));
    material += field(prompt.text);
    return sha256_hex(material);
}

namespace backend_detail {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint_url missing scheme: " + url);
    size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

inline std::string truncated(const std::string& body, size_t limit = 200) {
    if (body.size() <= limit) return body;
    return body.substr(0, limit) + "...";
}

// Wire bodies go to stderr when OLBENCH_DEBUG_HTTP is set. Auth material
// never appears: the header value is replaced wholesale.
inline bool debug_http() {
    static const bool enabled = [] {
        const char* v = std::getenv("OLBENCH_DEBUG_HTTP");
        return v && *v && std::string_view(v) != "0";
    }();
    return enabled;
}

inline void debug_log(const char* direction, const std::string& url, const std::string& body,
                      bool authed) {
    if (!debug_http()) return;
    std::fprintf(stderr, "[http %s] %s%s\n  %s\n", direction, url.c_str(),
                 authed ? " (Authorization: Bearer <redacted>)" : "", body.c_str());
}

inline RawResponse wire_invoke_once(const BackendConfig& config, const RenderedPrompt& prompt) {
    auto url = parse_url(*config.endpoint_url);
    httplib::Client client(url.base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.request_timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.request_timeout) -
                 std::chrono::duration_cast<std::chrono::microseconds>(secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    ojson body;
    switch (config.kind) {
        case BackendKind::completion:
            body = {{"model", config.model_name},
                    {"prompt", prompt.text},
                    {"temperature", config.temperature},
                    {"max_tokens", config.max_output_tokens}};
            break;
        case BackendKind::chat:
            body = {{"model", config.model_name},
                    {"messages", ojson::array({ojson{{"role", "user"}, {"content", prompt.text}}})},
                    {"temperature", config.temperature},
                    {"max_tokens", config.max_output_tokens}};
            break;
        case BackendKind::fill_mask:
            body = {{"model", config.model_name},
                    {"prompt", prompt.text},
                    {"mask_token", prompt.mask_token_used.value_or("")},
                    {"top_k", config.mask_top_k}};
            break;
        default:
            throw ConfigError("wire invoke on non-wire backend kind");
    }

    debug_log("request", *config.endpoint_url, body.dump(), !headers.empty());
    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
        throw TimeoutError("no response from " + *config.endpoint_url + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    debug_log("response", *config.endpoint_url,
              std::to_string(res->status) + " " + truncated(res->body, 2000), false);
    if (res->status < 200 || res->status >= 300) {
        std::string msg = "HTTP " + std::to_string(res->status) + " from " +
                          *config.endpoint_url + ": " + truncated(res->body);
        if (retryable_status(res->status)) throw BackendError(msg);
        throw BackendError(msg + " (not retryable)");
    }

    ojson j;
    try {
        j = ojson::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError("unparseable response body: " + truncated(res->body));
    }

    RawResponse out;
    out.item_id = prompt.item_id;
    out.template_id = prompt.template_id;
    out.backend_id = config.backend_id;
    try {
        if (config.kind == BackendKind::fill_mask) {
            if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty()) {
                throw BackendError("fill_mask response carried no ranked tokens: " +
                                   truncated(res->body));
            }
            for (auto& t : j["tokens"]) {
                out.ranked_tokens.push_back(
                    {t.at("token").get<std::string>(), t.value("score", 0.0)});
            }
        } else if (config.kind == BackendKind::chat) {
            out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } else {
            out.text = j.at("choices").at(0).at("text").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("response body missing expected fields (" + std::string(e.what()) +
                           "): " + truncated(res->body) + " (not retryable)");
    }
    return out;
}

inline bool is_retryable(const BackendError& e) {
    return std::string_view(e.what()).find("(not retryable)") == std::string_view::npos;
}

}  // namespace backend_detail

/// One backend call. Stub kinds answer deterministically without touching
/// the network (`stub_gold` supplies the echo text for stub_echo_gold); wire
/// kinds retry transient failures up to max_retries with exponential
/// backoff. Compatibility rule: masked prompts need a fill_mask or stub
/// backend, non-masked prompts must not hit fill_mask.
inline RawResponse invoke(const BackendConfig& config, const RenderedPrompt& prompt,
                          const std::optional<std::string>& stub_gold = {}) {
    config.validate();
    bool masked_prompt = prompt.mask_token_used.has_value();
    if (!is_stub(config.kind)) {
        if (masked_prompt && config.kind != BackendKind::fill_mask) {
            throw ConfigError("masked prompt requires a fill_mask backend, got " +
                              std::string(to_string(config.kind)));
        }
        if (!masked_prompt && config.kind == BackendKind::fill_mask) {
            throw ConfigError("fill_mask backend requires masked prompts");
        }
    }

    auto start = std::chrono::steady_clock::now();
    RawResponse out;
    switch (config.kind) {
        case BackendKind::stub_echo_gold:
            if (!stub_gold) {
                throw ConfigError("stub_echo_gold needs the item's gold text");
            }
            out.item_id = prompt.item_id;
            out.template_id = prompt.template_id;
            out.backend_id = config.backend_id;
            out.text = *stub_gold;
            break;
        case BackendKind::stub_constant:
            out.item_id = prompt.item_id;
            out.template_id = prompt.template_id;
            out.backend_id = config.backend_id;
            out.text = *config.stub_constant_text;
            break;
        default: {
            int attempts = 0;
            std::chrono::milliseconds backoff = config.retry_initial_backoff;
            while (true) {
                ++attempts;
                try {
                    out = backend_detail::wire_invoke_once(config, prompt);
                    break;
                } catch (const BackendError& e) {
                    bool transient =
                        dynamic_cast<const TimeoutError*>(&e) || backend_detail::is_retryable(e);
                    if (!transient || attempts > config.max_retries) throw;
                    std::this_thread::sleep_for(backoff);
                    backoff *= 2;
                }
            }
            break;
        }
    }
    out.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return out;
}

// ---------------------------------------------------------------------------
// Disk cache: one append-only JSONL log per backend plus an index sidecar
// (key<TAB>offset). Unreadable entries are skipped with a counted warning
// and simply miss.

class CacheStore {
public:
    explicit CacheStore(const std::filesystem::path& dir) : dir_(dir) {
        std::filesystem::create_directories(dir);
    }

    std::optional<RawResponse> lookup(const std::string& backend_id, const std::string& key) {
        std::lock_guard<std::mutex> lock(mu_);
        Shard& shard = shard_for(backend_id);
        auto it = shard.index.find(key);
        if (it == shard.index.end()) return std::nullopt;
        std::ifstream in(log_path(backend_id));
        if (!in) return std::nullopt;
        in.seekg(static_cast<std::streamoff>(it->second));
        std::string line;
        if (!std::getline(in, line)) {
            ++corrupt_entries_;
            return std::nullopt;
        }
        try {
            ojson j = ojson::parse(line);
            if (j.at("key").get<std::string>() != key) {
                ++corrupt_entries_;
                return std::nullopt;
            }
            RawResponse r = response_from_json(j.at("response"));
            r.from_cache = true;
            return r;
        } catch (const std::exception&) {
            ++corrupt_entries_;
            return std::nullopt;
        }
    }

    /// Lookup labeled for a concrete request. Distinct (item, template)
    /// pairs can render byte-identical prompts and therefore share one
    /// entry; the payload is cached, the identity belongs to the request.
    std::optional<RawResponse> lookup_for(const std::string& backend_id, const std::string& key,
                                          const RenderedPrompt& prompt) {
        auto hit = lookup(backend_id, key);
        if (hit) {
            hit->item_id = prompt.item_id;
            hit->template_id = prompt.template_id;
        }
        return hit;
    }

    void append(const std::string& backend_id, const std::string& key, const RawResponse& resp) {
        std::lock_guard<std::mutex> lock(mu_);
        Shard& shard = shard_for(backend_id);
        if (shard.index.count(key)) return;  // append-only, first write wins
        std::ofstream log(log_path(backend_id), std::ios::app);
        if (!log) throw Error("cannot open cache log: " + log_path(backend_id).string());
        log.seekp(0, std::ios::end);
        uint64_t offset = static_cast<uint64_t>(log.tellp());
        ojson j;
        j["key"] = key;
        j["response"] = response_to_json(resp);
        log << j.dump() << '\n';
        log.flush();
        shard.index.emplace(key, offset);
        std::ofstream idx(idx_path(backend_id), std::ios::app);
        if (idx) idx << key << '\t' << offset << '\n';
    }

    size_t size(const std::string& backend_id) {
        std::lock_guard<std::mutex> lock(mu_);
        return shard_for(backend_id).index.size();
    }

    bool contains(const std::string& backend_id, const std::string& key) {
        std::lock_guard<std::mutex> lock(mu_);
        return shard_for(backend_id).index.count(key) > 0;
    }

    size_t corrupt_entries() const { return corrupt_entries_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    struct Shard {
        bool loaded = false;
        std::unordered_map<std::string, uint64_t> index;
    };

    std::filesystem::path log_path(const std::string& backend_id) const {
        return dir_ / (backend_id + ".log");
    }
    std::filesystem::path idx_path(const std::string& backend_id) const {
        return dir_ / (backend_id + ".idx");
    }

    Shard& shard_for(const std::string& backend_id) {
        Shard& shard = shards_[backend_id];
        if (shard.loaded) return shard;
        shard.loaded = true;
        // Prefer the sidecar; fall back to scanning the log when the
        // sidecar is missing or stale.
        auto log = log_path(backend_id);
        auto idx = idx_path(backend_id);
        bool idx_ok = false;
        if (std::filesystem::exists(idx)) {
            idx_ok = true;
            std::ifstream in(idx);
            std::string line;
            while (std::getline(in, line)) {
                size_t tab = line.find('\t');
                if (tab == std::string::npos) {
                    idx_ok = false;
                    break;
                }
                try {
                    shard.index[line.substr(0, tab)] = std::stoull(line.substr(tab + 1));
                } catch (const std::exception&) {
                    idx_ok = false;
                    break;
                }
            }
        }
        if (!idx_ok) {
            shard.index.clear();
            if (std::filesystem::exists(log)) {
                std::ifstream in(log);
                std::string line;
                uint64_t offset = 0;
                while (std::getline(in, line)) {
                    uint64_t line_start = offset;
                    offset += line.size() + 1;
                    try {
                        ojson j = ojson::parse(line);
                        shard.index[j.at("key").get<std::string>()] = line_start;
                    } catch (const std::exception&) {
                        ++corrupt_entries_;
                    }
                }
                // Rewrite the sidecar from the rebuilt index.
                std::ofstream out(idx, std::ios::trunc);
                for (auto& [k, off] : shard.index) out << k << '\t' << off << '\n';
            }
        }
        return shard;
    }

    std::filesystem::path dir_;
    std::mutex mu_;
    std::unordered_map<std::string, Shard> shards_;
    std::atomic<size_t> corrupt_entries_{0};
};

/// Cache-through invoke: hits return the stored response (from_cache=true,
/// no wire traffic); misses call the backend and persist before returning.
inline RawResponse invoke_cached(const BackendConfig& config, const RenderedPrompt& prompt,
                                 CacheStore& cache,
                                 const std::optional<std::string>& stub_gold = {}) {
    std::string key = cache_key(config, prompt);
    if (auto hit = cache.lookup_for(config.backend_id, key, prompt)) return *hit;
    RawResponse fresh = invoke(config, prompt, stub_gold);
    cache.append(config.backend_id, key, fresh);
    // Two concurrent misses on one key race the append; the log's entry is
    // canonical, so every caller returns what the cache actually stored.
    if (auto canonical = cache.lookup_for(config.backend_id, key, prompt)) {
        canonical->from_cache = false;
        return *canonical;
    }
    return fresh;
}

// ---------------------------------------------------------------------------
// Bounded-parallelism dispatcher. Owns a queue of (prompt, gold) work,
// runs at most `parallelism` invocations at once, and delivers responses in
// input order. The invoke function is a seam so tests can count concurrency
// and failures without a server.

struct DispatchStats {
    std::atomic<size_t> wire_calls{0};   // invocations that missed the cache
    std::atomic<size_t> cache_hits{0};
    std::atomic<size_t> failures{0};
};

struct WorkItem {
    RenderedPrompt prompt;
    std::optional<std::string> stub_gold;
};

class Dispatcher {
public:
    using InvokeFn = std::function<RawResponse(const BackendConfig&, const RenderedPrompt&,
                                               const std::optional<std::string>&)>;

    Dispatcher(BackendConfig config, CacheStore* cache, int parallelism)
        : config_(std::move(config)), cache_(cache), parallelism_(std::max(1, parallelism)) {
        invoke_fn_ = [](const BackendConfig& c, const RenderedPrompt& p,
                        const std::optional<std::string>& g) { return invoke(c, p, g); };
    }

    void set_invoke_fn(InvokeFn fn) { invoke_fn_ = std::move(fn); }

    const DispatchStats& stats() const { return stats_; }

    std::vector<RawResponse> run(const std::vector<WorkItem>& work) {
        std::vector<RawResponse> results(work.size());
        std::atomic<size_t> next{0};
        std::atomic<bool> abort{false};
        std::mutex err_mu;
        std::exception_ptr first_error;

        auto min_interval = config_.requests_per_second > 0.0
                                ? std::chrono::duration<double>(1.0 / config_.requests_per_second)
                                : std::chrono::duration<double>(0);

        auto worker = [&]() {
            while (!abort.load()) {
                size_t i = next.fetch_add(1);
                if (i >= work.size()) return;
                try {
                    results[i] = run_one(work[i], min_interval);
                } catch (...) {
                    ++stats_.failures;
                    {
                        std::lock_guard<std::mutex> lock(err_mu);
                        if (!first_error) first_error = std::current_exception();
                    }
                    abort.store(true);
                    return;
                }
            }
        };

        std::vector<std::thread> threads;
        int n = std::min<int>(parallelism_, static_cast<int>(work.size()));
        threads.reserve(static_cast<size_t>(std::max(1, n)));
        for (int i = 0; i < n; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();

        if (first_error) std::rethrow_exception(first_error);
        return results;
    }

private:
    RawResponse run_one(const WorkItem& w, std::chrono::duration<double> min_interval) {
        if (cache_) {
            std::string key = cache_key(config_, w.prompt);
            if (auto hit = cache_->lookup_for(config_.backend_id, key, w.prompt)) {
                ++stats_.cache_hits;
                return *hit;
            }
            throttle(min_interval);
            RawResponse fresh = invoke_fn_(config_, w.prompt, w.stub_gold);
            ++stats_.wire_calls;
            cache_->append(config_.backend_id, key, fresh);
            // Concurrent misses on one key race the append; the log entry is
            // canonical and is what replays will serve.
            if (auto canonical = cache_->lookup_for(config_.backend_id, key, w.prompt)) {
                canonical->from_cache = false;
                return *canonical;
            }
            return fresh;
        }
        throttle(min_interval);
        RawResponse r = invoke_fn_(config_, w.prompt, w.stub_gold);
        ++stats_.wire_calls;
        return r;
    }

    void throttle(std::chrono::duration<double> min_interval) {
        if (min_interval.count() <= 0.0) return;
        std::unique_lock<std::mutex> lock(throttle_mu_);
        auto now = std::chrono::steady_clock::now();
        auto earliest = last_request_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                            min_interval);
        if (now < earliest) {
            lock.unlock();
            std::this_thread::sleep_for(earliest - now);
            lock.lock();
        }
        last_request_ = std::chrono::steady_clock::now();
    }

    BackendConfig config_;
    CacheStore* cache_;
    int parallelism_;
    InvokeFn invoke_fn_;
    DispatchStats stats_;
    std::mutex throttle_mu_;
    std::chrono::steady_clock::time_point last_request_{};
};

}  // namespace olbench
