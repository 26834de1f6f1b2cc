#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "featdiag/common.hpp"
#include "featdiag/errors.hpp"

namespace featdiag {

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.5;
    int max_tokens = 1024;
    std::string model_name;
    std::string trial_id;
};

// Content hash identifying a request in the replay store. Covers everything
// that changes the distribution of the answer.
inline std::string prompt_hash(const CompletionRequest& req) {
    std::string key = req.model_name;
    key.push_back('\x1f');
    key += format_sig6(req.temperature);
    key.push_back('\x1f');
    key += std::to_string(req.max_tokens);
    key.push_back('\x1f');
    key += req.prompt;
    return hex16(fnv1a64(key));
}

struct Transcript {
    std::string trial_id;
    std::string prompt_hash;
    std::string prompt;
    std::string response;
    std::string model_name;
    double temperature = 0.5;
    int max_tokens = 0;
    std::string timestamp;

    nlohmann::ordered_json to_json() const {
        return {{"trial_id", trial_id},
                {"prompt_hash", prompt_hash},
                {"prompt", prompt},
                {"response", response},
                {"model_name", model_name},
                {"params", {{"temperature", temperature}, {"max_tokens", max_tokens}}},
                {"timestamp", timestamp}};
    }

    static Transcript from_json(const nlohmann::json& j) {
        Transcript t;
        t.trial_id = j.value("trial_id", std::string());
        t.prompt_hash = j.at("prompt_hash").get<std::string>();
        t.prompt = j.value("prompt", std::string());
        t.response = j.value("response", std::string());
        t.model_name = j.value("model_name", std::string());
        if (j.contains("params")) {
            t.temperature = j["params"].value("temperature", 0.5);
            t.max_tokens = j["params"].value("max_tokens", 0);
        }
        t.timestamp = j.value("timestamp", std::string());
        return t;
    }
};

struct CompletionBackend {
    virtual ~CompletionBackend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// replay backend

// Read-only transcript store keyed by prompt hash. Lookups never touch the
// network and a miss fails loudly rather than fabricating a response.
class ReplayStore {
public:
    ReplayStore() = default;

    static ReplayStore load(const std::string& jsonl_path) {
        ReplayStore store;
        std::ifstream in(jsonl_path);
        if (!in) throw ConfigError("cannot open replay store: " + jsonl_path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(jsonl_path + ":" + std::to_string(lineno) + " is not valid JSON: " + e.what());
            }
            Transcript t = Transcript::from_json(j);
            store.responses_[t.prompt_hash] = t.response;
        }
        return store;
    }

    void insert(const std::string& hash, std::string response) { responses_[hash] = std::move(response); }

    std::optional<std::string> lookup(const std::string& hash) const {
        auto it = responses_.find(hash);
        if (it == responses_.end()) return std::nullopt;
        return it->second;
    }

    size_t size() const { return responses_.size(); }

private:
    std::unordered_map<std::string, std::string> responses_;
};

class ReplayBackend final : public CompletionBackend {
public:
    explicit ReplayBackend(ReplayStore store) : store_(std::move(store)) {}

    std::string complete(const CompletionRequest& request) override {
        auto hit = store_.lookup(prompt_hash(request));
        if (!hit)
            throw ReplayMiss("no recorded response for hash " + prompt_hash(request) +
                             (request.trial_id.empty() ? "" : " (" + request.trial_id + ")"));
        return *hit;
    }

private:
    ReplayStore store_;
};

// ---------------------------------------------------------------------------
// HTTP backend

struct HttpGatewayConfig {
    std::string endpoint_url;                   // e.g. https://api.example.com/v1/chat/completions
    std::string api_key_env = "FEATDIAG_API_KEY";
    std::string transcript_path;                // JSONL append target; empty disables recording
    int max_attempts = 5;
    int base_delay_ms = 1000;                   // doubles per retry
    int max_inflight = 4;
};

namespace detail {

inline std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// splits scheme://host[:port]/path into (origin, path)
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace detail

// OpenAI-compatible chat-completions client with exponential backoff on 429
// and 5xx. Every attempt sequence appends exactly one transcript, including
// final failures (the response field then carries an error marker).
class HttpBackend final : public CompletionBackend {
public:
    explicit HttpBackend(HttpGatewayConfig config)
        : config_(std::move(config)),
          inflight_(std::max(1, config_.max_inflight)) {
        if (config_.endpoint_url.empty()) throw ConfigError("http backend needs endpoint_url");
    }

    std::string complete(const CompletionRequest& request) override {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw MissingCredentials("environment variable " + config_.api_key_env + " is not set");

        inflight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{inflight_};

        nlohmann::json body = {{"model", request.model_name},
                               {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
                               {"temperature", request.temperature},
                               {"max_tokens", request.max_tokens}};
        const std::string payload = body.dump();
        auto [origin, path] = detail::split_url(config_.endpoint_url);
        httplib::Client client(origin);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

        std::string failure;
        for (int attempt = 0; attempt < std::max(1, config_.max_attempts); ++attempt) {
            if (attempt > 0) {
                auto delay = std::chrono::milliseconds(config_.base_delay_ms) * (1LL << (attempt - 1));
                std::this_thread::sleep_for(delay);
            }
            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                failure = "connection error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                failure = "http status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                failure = "http status " + std::to_string(res->status);
                break; // other 4xx: not retryable
            }
            std::string content;
            if (!extract_content(res->body, content)) {
                failure = "malformed completion body";
                break;
            }
            record(request, content);
            return content;
        }
        record(request, "<<endpoint-error: " + failure + ">>");
        throw EndpointError(failure + " from " + config_.endpoint_url);
    }

private:
    static bool extract_content(const std::string& body, std::string& out) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) return false;
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) return false;
        const auto& choice = j["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content")) return false;
        if (!choice["message"]["content"].is_string()) return false;
        out = choice["message"]["content"].get<std::string>();
        return true;
    }

    void record(const CompletionRequest& request, const std::string& response) {
        if (config_.transcript_path.empty()) return;
        Transcript t{request.trial_id, prompt_hash(request), request.prompt, response,
                     request.model_name, request.temperature, request.max_tokens,
                     detail::utc_timestamp()};
        std::lock_guard<std::mutex> lock(transcript_mutex_);
        std::ofstream out(config_.transcript_path, std::ios::app);
        if (out) out << t.to_json().dump() << '\n';
    }

    HttpGatewayConfig config_;
    std::counting_semaphore<> inflight_;
    std::mutex transcript_mutex_;
};

} // namespace featdiag
