#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"
#include "maro/error.hpp"

namespace maro {

enum class Role { Linguistic, Comment, FactQuestion, FactCheck, Questioning, Optimizer, Judge };

std::string_view role_name(Role role) noexcept;
std::optional<Role> role_from_name(std::string_view name) noexcept;

/// Per-role sampling temperatures. The optimizer samples at 1.0 for diverse
/// proposals and the judge at 0.0 for consistent verdicts.
struct TemperatureTable {
    double analysis = 0.7;
    double optimizer = 1.0;
    double judge = 0.0;

    double for_role(Role role) const noexcept;
};

struct ChatRequest {
    Role role = Role::Judge;
    std::string system_prompt;
    std::string user_content;
    double temperature = 0.0;
    int max_tokens = 2048;
    /// Distinguishes repeated samples of an identical prompt (e.g. optimizer
    /// iteration and attempt). Part of the request digest; never sent upstream.
    std::string sample_tag;
};

struct Usage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    Usage usage;
    bool from_cache = false;
};

/// Digest over every request field, independent of the endpoint.
std::string request_digest(const ChatRequest& request);

/// Fixed-length key over (endpoint id, request fields, optional nonce).
std::string cache_key(std::string_view endpoint_id, const ChatRequest& request, std::string_view nonce = {});

nlohmann::json request_to_json(const ChatRequest& request);
ChatRequest request_from_json(const nlohmann::json& j);

/// Chat-completion backend. Implementations are safe to call concurrently.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string endpoint_id() const = 0;
};

// ---- scripted mock ---------------------------------------------------------

enum class MatchKind {
    Exact,     ///< user_content equals pattern
    Contains,  ///< user_content contains pattern
    Any,       ///< matches every request of the role
    Digest,    ///< request_digest equals pattern (transcript replay)
};

using Responder = std::function<std::string(const ChatRequest&)>;

struct ScriptEntry {
    std::optional<Role> role;  ///< nullopt matches any role
    MatchKind kind = MatchKind::Contains;
    std::string pattern;
    std::variant<std::string, Responder> response;
};

/// Deterministic backend answering from a script. Entries are tried in
/// declaration order and the first match wins. Every request is captured.
class ScriptedMock final : public Provider {
public:
    explicit ScriptedMock(std::vector<ScriptEntry> script, std::string endpoint = "mock");

    ChatResponse complete(const ChatRequest& request) override;
    std::string endpoint_id() const override { return endpoint_; }

    std::size_t calls() const noexcept { return calls_.load(); }
    std::vector<ChatRequest> captured() const;
    void reset_counters();

    /// Artificial per-call delay, used by benchmarks to model network latency.
    void set_latency(std::chrono::microseconds latency) { latency_ = latency; }

    /// Forces failures for requests whose user_content contains `needle`.
    void fail_when(std::string needle, Errc code);

private:
    std::vector<ScriptEntry> script_;
    std::string endpoint_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex mu_;
    std::vector<ChatRequest> captured_;
    std::chrono::microseconds latency_{0};
    std::vector<std::pair<std::string, Errc>> failures_;
};

/// JSON script file: {"entries":[{"role":"Judge","match":"contains",
/// "pattern":"...","response":"..."}]}.
std::vector<ScriptEntry> load_script(const std::filesystem::path& path);

/// Transcript file (see RecordingProvider) turned into Digest entries.
std::vector<ScriptEntry> load_transcript_script(const std::filesystem::path& path);

// ---- cache / recording decorators -----------------------------------------

/// Persistent response cache backed by an append-only line-delimited file.
class ResponseCache {
public:
    ResponseCache() = default;  // in-memory only
    explicit ResponseCache(std::filesystem::path file);

    std::optional<ChatResponse> get(const std::string& key) const;
    void put(const std::string& key, const ChatResponse& response);
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> file_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, ChatResponse> entries_;
};

class CachingProvider final : public Provider {
public:
    /// Optimizer requests bypass the cache unless `optimizer_nonce` is set.
    CachingProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ResponseCache> cache,
                    std::optional<std::string> optimizer_nonce = std::nullopt);

    ChatResponse complete(const ChatRequest& request) override;
    std::string endpoint_id() const override { return inner_->endpoint_id(); }

private:
    std::shared_ptr<Provider> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::optional<std::string> nonce_;
};

/// Appends one transcript record per completed call.
class RecordingProvider final : public Provider {
public:
    RecordingProvider(std::shared_ptr<Provider> inner, const std::filesystem::path& transcript);

    ChatResponse complete(const ChatRequest& request) override;
    std::string endpoint_id() const override { return inner_->endpoint_id(); }

private:
    std::shared_ptr<Provider> inner_;
    std::mutex mu_;
    std::ofstream out_;
};

/// Sums token usage and call counts across threads.
class UsageMeter final : public Provider {
public:
    explicit UsageMeter(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string endpoint_id() const override { return inner_->endpoint_id(); }

    std::size_t calls() const noexcept { return calls_.load(); }
    std::size_t cache_hits() const noexcept { return hits_.load(); }
    long long prompt_tokens() const noexcept { return prompt_.load(); }
    long long completion_tokens() const noexcept { return completion_.load(); }

private:
    std::shared_ptr<Provider> inner_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> hits_{0};
    std::atomic<long long> prompt_{0};
    std::atomic<long long> completion_{0};
};

// ---- live HTTP backend -----------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    double jitter = 0.25;  ///< fraction of the delay, uniformly +/-
};

struct EndpointConfig {
    std::string base_url;  ///< e.g. https://api.openai.com/v1
    std::string model;
    std::string api_key_env = "MARO_API_KEY";
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
};

/// OpenAI-compatible POST {base_url}/chat/completions.
class HttpChatProvider final : public Provider {
public:
    explicit HttpChatProvider(EndpointConfig config);

    ChatResponse complete(const ChatRequest& request) override;
    std::string endpoint_id() const override { return config_.base_url + "#" + config_.model; }

    /// Request body for the wire format. Exposed for tests.
    nlohmann::json request_body(const ChatRequest& request) const;
    static ChatResponse parse_response_body(const std::string& body);

private:
    ChatResponse attempt(const ChatRequest& request) const;

    EndpointConfig config_;
    std::string scheme_host_;
    std::string path_prefix_;
};

/// Splits "https://host:port/prefix" into ("https://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(const std::string& url);

/// Runs `fn` with bounded exponential backoff over retryable maro::Error.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn());

}  // namespace maro

#include "maro/detail/retry.hpp"
