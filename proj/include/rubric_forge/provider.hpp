/// @file provider.hpp
/// @brief Chat-completion gateway: HTTP client with retries and bounded
/// parallelism, a content-addressed response cache, and a deterministic
/// scripted mock. The only module that performs network I/O.

#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rubric_forge/types.hpp"

namespace rubric_forge {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::vector<std::string>> stop;

    /// messages non-empty; first role system or user; temperature >= 0;
    /// max_tokens positive. Throws std::invalid_argument.
    void validate() const;
};

enum class FinishReason { Stop, Length, Other };

std::string_view to_string(FinishReason r);
FinishReason finish_reason_from_string(std::string_view name);

struct Usage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

struct ChatResponse {
    std::string content;  // present even when empty
    FinishReason finish_reason = FinishReason::Stop;  // Length flags truncation
    Usage usage;
    std::string provider_id;
};

struct RetryPolicy {
    int max_attempts = 4;
    int initial_backoff_ms = 250;
    int max_backoff_ms = 8000;
};

struct ProviderConfig {
    std::string base_url;  // e.g. https://host:port/v1
    std::string api_key;   // from RUBRIC_FORGE_API_KEY
    int max_in_flight = 4;
    RetryPolicy retry;
    std::optional<std::filesystem::path> cache_dir;
    int request_timeout_s = 120;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class ProviderError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Network failure or retryable HTTP status, after retries were exhausted.
class TransportError : public ProviderError {
  public:
    TransportError(const std::string& msg, int attempts)
        : ProviderError(msg), attempts_(attempts) {}
    int attempts() const { return attempts_; }

  private:
    int attempts_;
};

/// HTTP 401/403. Never retried.
class AuthError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

/// Any other non-retryable 4xx. Never retried.
class BadRequestError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

// ---------------------------------------------------------------------------
// Hashing & cache
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data);

/// Content hash of (model, messages, temperature, max_tokens, stop) over a
/// canonical serialization; invariant under key ordering and whitespace.
std::string request_hash(const ChatRequest& req);

/// One file per request hash: <dir>/<2-hex-prefix>/<hash>.json holding
/// {request_hash, response, timestamp}. Concurrent readers are fine; writers
/// go through write-temp-then-rename.
class CacheStore {
  public:
    explicit CacheStore(std::filesystem::path dir);

    std::optional<ChatResponse> get(const std::string& hash) const;
    void put(const std::string& hash, const ChatResponse& resp) const;
    std::filesystem::path entry_path(const std::string& hash) const;

  private:
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

class Provider {
  public:
    virtual ~Provider() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

/// Counting permit shared by all workers; cache hits never consume a permit.
class Semaphore {
  public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire();
    void release();

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

/// Chat-completions HTTP gateway (POST <base>/chat/completions, bearer auth).
/// Retries transport errors and 429/5xx with exponential backoff and
/// decorrelated jitter; 401/403 and other 4xx are terminal.
class HttpProvider : public Provider {
  public:
    explicit HttpProvider(ProviderConfig config);
    ChatResponse complete(const ChatRequest& req) override;

  private:
    ProviderConfig config_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // e.g. /v1
    Semaphore permits_;
};

/// Scripted mock: responses come from a by-hash fixture map, then from a
/// pattern table (regex on the last user message, optionally filtered by
/// model) evaluated in order. $1..$9 in a pattern response are replaced with
/// capture groups. A request nothing matches is a BadRequestError.
class MockProvider : public Provider {
  public:
    struct Pattern {
        std::string pattern;
        std::optional<std::string> model;  // regex on req.model when present
        std::string response;
        FinishReason finish_reason = FinishReason::Stop;
    };

    struct CallRecord {
        std::string model;
        std::string hash;
        std::string last_user;
    };

    MockProvider() = default;

    /// Loads <dir>/patterns.jsonl and <dir>/by-hash/<hash>.txt fixtures.
    static std::unique_ptr<MockProvider> from_dir(const std::filesystem::path& dir);

    void add_fixture(const std::string& hash, std::string response,
                     FinishReason reason = FinishReason::Stop);
    void add_pattern(Pattern p);

    /// Simulated per-call latency, for concurrency tests.
    void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

    /// When set, appends one JSON line per call for post-hoc inspection.
    void set_call_log(std::filesystem::path path) { call_log_ = std::move(path); }

    ChatResponse complete(const ChatRequest& req) override;

    std::vector<CallRecord> calls() const;
    int call_count() const;
    int max_observed_in_flight() const;

  private:
    mutable std::mutex mutex_;
    std::map<std::string, std::pair<std::string, FinishReason>> by_hash_;
    std::vector<Pattern> patterns_;
    std::vector<CallRecord> calls_;
    std::optional<std::filesystem::path> call_log_;
    std::chrono::milliseconds latency_{0};
    int in_flight_ = 0;
    int max_in_flight_seen_ = 0;
};

/// Applies the max_in_flight permit to an arbitrary inner provider.
class ThrottlingProvider : public Provider {
  public:
    ThrottlingProvider(std::unique_ptr<Provider> inner, int max_in_flight)
        : inner_(std::move(inner)), permits_(max_in_flight) {}
    ChatResponse complete(const ChatRequest& req) override;

  private:
    std::unique_ptr<Provider> inner_;
    Semaphore permits_;
};

/// Content-addressed read-through cache in front of any provider.
class CachingProvider : public Provider {
  public:
    CachingProvider(std::unique_ptr<Provider> inner, CacheStore store)
        : inner_(std::move(inner)), store_(std::move(store)) {}
    ChatResponse complete(const ChatRequest& req) override;

    long long hits() const { return hits_; }
    long long misses() const { return misses_; }

  private:
    std::unique_ptr<Provider> inner_;
    CacheStore store_;
    std::mutex mutex_;
    long long hits_ = 0;
    long long misses_ = 0;
};

/// The assembled provider stack used by the CLI:
/// cache (optional) -> throttle -> http | mock.
struct ProviderStack {
    std::unique_ptr<Provider> provider;
    CachingProvider* cache = nullptr;  // non-owning views into the stack
    MockProvider* mock = nullptr;
};

ProviderStack make_provider(const ProviderConfig& config,
                            const std::optional<std::filesystem::path>& mock_dir,
                            const std::optional<std::filesystem::path>& mock_call_log = {});

}  // namespace rubric_forge
