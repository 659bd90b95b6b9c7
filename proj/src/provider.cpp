#include "rubric_forge/provider.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <random>
#include <regex>
#include <thread>

#include <httplib.h>  // CPPHTTPLIB_OPENSSL_SUPPORT comes from the build

#include "rubric_forge/jsonl.hpp"

namespace rubric_forge {

using json = nlohmann::json;

std::string_view to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(FinishReason r) {
    switch (r) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Other: return "other";
    }
    return "other";
}

FinishReason finish_reason_from_string(std::string_view name) {
    if (name == "stop") return FinishReason::Stop;
    if (name == "length") return FinishReason::Length;
    return FinishReason::Other;
}

void ChatRequest::validate() const {
    if (messages.empty()) throw std::invalid_argument("ChatRequest: no messages");
    if (messages.front().role == Role::Assistant)
        throw std::invalid_argument("ChatRequest: first message must be system or user");
    if (temperature < 0) throw std::invalid_argument("ChatRequest: negative temperature");
    if (max_tokens <= 0) throw std::invalid_argument("ChatRequest: max_tokens must be positive");
}

void ProviderConfig::validate() const {
    if (max_in_flight < 1) throw std::invalid_argument("ProviderConfig: max_in_flight < 1");
    if (retry.max_attempts < 1) throw std::invalid_argument("ProviderConfig: max_attempts < 1");
    if (retry.initial_backoff_ms <= 0 || retry.max_backoff_ms <= 0 ||
        retry.initial_backoff_ms > retry.max_backoff_ms)
        throw std::invalid_argument("ProviderConfig: bad backoff bounds");
    if (request_timeout_s <= 0) throw std::invalid_argument("ProviderConfig: bad timeout");
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string request_hash(const ChatRequest& req) {
    // nlohmann::json orders object keys, so dump() is canonical; whitespace
    // and key order in any upstream representation cannot change the hash.
    json body;
    body["model"] = req.model;
    body["messages"] = json::array();
    for (const auto& m : req.messages)
        body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (req.stop) body["stop"] = *req.stop;
    return sha256_hex(body.dump());
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

namespace {

json response_to_json(const ChatResponse& resp) {
    return json{{"content", resp.content},
                {"finish_reason", std::string(to_string(resp.finish_reason))},
                {"usage",
                 {{"prompt_tokens", resp.usage.prompt_tokens},
                  {"completion_tokens", resp.usage.completion_tokens}}},
                {"provider_id", resp.provider_id}};
}

ChatResponse response_from_json(const json& j) {
    ChatResponse resp;
    resp.content = j.value("content", std::string{});
    resp.finish_reason = finish_reason_from_string(j.value("finish_reason", "stop"));
    if (j.contains("usage")) {
        resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0LL);
        resp.usage.completion_tokens = j["usage"].value("completion_tokens", 0LL);
    }
    resp.provider_id = j.value("provider_id", std::string{});
    return resp;
}

}  // namespace

CacheStore::CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path CacheStore::entry_path(const std::string& hash) const {
    return dir_ / hash.substr(0, 2) / (hash + ".json");
}

std::optional<ChatResponse> CacheStore::get(const std::string& hash) const {
    std::ifstream in(entry_path(hash), std::ios::binary);
    if (!in) return std::nullopt;
    try {
        json envelope = json::parse(in);
        return response_from_json(envelope.at("response"));
    } catch (const json::exception&) {
        return std::nullopt;  // corrupt entry behaves like a miss
    }
}

void CacheStore::put(const std::string& hash, const ChatResponse& resp) const {
    json envelope{{"request_hash", hash},
                  {"response", response_to_json(resp)},
                  {"timestamp",
                   std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count()}};
    atomic_write(entry_path(hash), envelope.dump());
}

// ---------------------------------------------------------------------------
// Semaphore
// ---------------------------------------------------------------------------

void Semaphore::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return count_ > 0; });
    --count_;
}

void Semaphore::release() {
    {
        std::lock_guard lock(mutex_);
        ++count_;
    }
    cv_.notify_one();
}

namespace {

struct PermitGuard {
    explicit PermitGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~PermitGuard() { sem.release(); }
    Semaphore& sem;
};

}  // namespace

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

HttpProvider::HttpProvider(ProviderConfig config)
    : config_(std::move(config)), permits_(std::max(1, config_.max_in_flight)) {
    config_.validate();
    // Split base_url into origin and path prefix.
    const std::string& url = config_.base_url;
    size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw std::invalid_argument("ProviderConfig: base_url needs a scheme: " + url);
    size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) {
        origin_ = url;
        path_prefix_.clear();
    } else {
        origin_ = url.substr(0, path);
        path_prefix_ = url.substr(path);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

ChatResponse HttpProvider::complete(const ChatRequest& req) {
    req.validate();
    json body;
    body["model"] = req.model;
    body["messages"] = json::array();
    for (const auto& m : req.messages)
        body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (req.stop) body["stop"] = *req.stop;
    const std::string payload = body.dump();
    const std::string route = path_prefix_ + "/chat/completions";

    PermitGuard permit(permits_);

    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
    int backoff_ms = config_.retry.initial_backoff_ms;
    std::string last_error;

    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        httplib::Client client(origin_);
        client.set_connection_timeout(config_.request_timeout_s, 0);
        client.set_read_timeout(config_.request_timeout_s, 0);
        client.set_write_timeout(config_.request_timeout_s, 0);
        if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

        auto res = client.Post(route, payload, "application/json");

        bool retryable;
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            retryable = true;
        } else if (res->status == 200) {
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const json::exception& e) {
                throw TransportError("unparseable provider response: " + std::string(e.what()),
                                     attempt);
            }
            ChatResponse out;
            try {
                const auto& choice = reply.at("choices").at(0);
                out.content = choice.at("message").value("content", std::string{});
                out.finish_reason =
                    finish_reason_from_string(choice.value("finish_reason", "stop"));
            } catch (const json::exception& e) {
                throw TransportError("provider response missing choices: " + std::string(e.what()),
                                     attempt);
            }
            if (reply.contains("usage")) {
                out.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0LL);
                out.usage.completion_tokens = reply["usage"].value("completion_tokens", 0LL);
            }
            out.provider_id = reply.value("id", std::string{});
            return out;
        } else if (res->status == 401 || res->status == 403) {
            throw AuthError("authentication failed (HTTP " + std::to_string(res->status) + ")");
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            retryable = true;
        } else {
            throw BadRequestError("HTTP " + std::to_string(res->status) + ": " +
                                  res->body.substr(0, 200));
        }

        if (retryable && attempt < config_.retry.max_attempts) {
            // Decorrelated jitter: sleep in [initial, prev*3], capped.
            std::uniform_int_distribution<int> dist(config_.retry.initial_backoff_ms,
                                                    std::max(config_.retry.initial_backoff_ms,
                                                             backoff_ms * 3));
            backoff_ms = std::min(dist(jitter_rng), config_.retry.max_backoff_ms);
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        }
    }
    throw TransportError("retries exhausted: " + last_error, config_.retry.max_attempts);
}

// ---------------------------------------------------------------------------
// Mock provider
// ---------------------------------------------------------------------------

std::unique_ptr<MockProvider> MockProvider::from_dir(const std::filesystem::path& dir) {
    auto mock = std::make_unique<MockProvider>();
    auto patterns_file = dir / "patterns.jsonl";
    if (std::filesystem::exists(patterns_file)) {
        for (const auto& row : read_jsonl(patterns_file)) {
            Pattern p;
            p.pattern = row.at("pattern").get<std::string>();
            if (row.contains("model")) p.model = row["model"].get<std::string>();
            p.response = row.at("response").get<std::string>();
            p.finish_reason = finish_reason_from_string(row.value("finish_reason", "stop"));
            mock->add_pattern(std::move(p));
        }
    }
    auto by_hash = dir / "by-hash";
    if (std::filesystem::is_directory(by_hash)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(by_hash))
            if (entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) mock->add_fixture(f.stem().string(), read_file(f));
    }
    return mock;
}

void MockProvider::add_fixture(const std::string& hash, std::string response, FinishReason reason) {
    std::lock_guard lock(mutex_);
    by_hash_[hash] = {std::move(response), reason};
}

void MockProvider::add_pattern(Pattern p) {
    std::lock_guard lock(mutex_);
    patterns_.push_back(std::move(p));
}

ChatResponse MockProvider::complete(const ChatRequest& req) {
    req.validate();
    std::string last_user;
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
        if (it->role == Role::User) {
            last_user = it->content;
            break;
        }
    }
    const std::string hash = request_hash(req);

    {
        std::lock_guard lock(mutex_);
        ++in_flight_;
        max_in_flight_seen_ = std::max(max_in_flight_seen_, in_flight_);
        calls_.push_back({req.model, hash, last_user});
        if (call_log_) {
            std::ofstream log(*call_log_, std::ios::app);
            json line{{"model", req.model},
                      {"hash", hash},
                      {"last_user_excerpt", last_user.substr(0, 120)}};
            log << line.dump() << '\n';
        }
    }
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    struct InFlightGuard {
        MockProvider* self;
        ~InFlightGuard() {
            std::lock_guard lock(self->mutex_);
            --self->in_flight_;
        }
    } guard{this};

    std::lock_guard lock(mutex_);
    if (auto it = by_hash_.find(hash); it != by_hash_.end())
        return ChatResponse{it->second.first, it->second.second, {}, "mock-" + hash.substr(0, 8)};

    for (const auto& p : patterns_) {
        if (p.model) {
            std::regex model_re(*p.model);
            if (!std::regex_search(req.model, model_re)) continue;
        }
        std::regex re(p.pattern);
        std::smatch m;
        if (!std::regex_search(last_user, m, re)) continue;
        std::string text = p.response;
        for (size_t g = 1; g < m.size() && g <= 9; ++g) {
            std::string needle = "$" + std::to_string(g);
            size_t pos = 0;
            while ((pos = text.find(needle, pos)) != std::string::npos) {
                text.replace(pos, needle.size(), m[g].str());
                pos += m[g].str().size();
            }
        }
        return ChatResponse{std::move(text), p.finish_reason, {}, "mock-" + hash.substr(0, 8)};
    }
    throw BadRequestError("mock: no fixture or pattern matched request " + hash.substr(0, 12) +
                          " (last user message begins: " + last_user.substr(0, 80) + ")");
}

std::vector<MockProvider::CallRecord> MockProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

int MockProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(calls_.size());
}

int MockProvider::max_observed_in_flight() const {
    std::lock_guard lock(mutex_);
    return max_in_flight_seen_;
}

// ---------------------------------------------------------------------------
// Decorators
// ---------------------------------------------------------------------------

ChatResponse ThrottlingProvider::complete(const ChatRequest& req) {
    PermitGuard permit(permits_);
    return inner_->complete(req);
}

ChatResponse CachingProvider::complete(const ChatRequest& req) {
    const std::string hash = request_hash(req);
    if (auto cached = store_.get(hash)) {
        std::lock_guard lock(mutex_);
        ++hits_;
        return *cached;
    }
    ChatResponse resp = inner_->complete(req);
    store_.put(hash, resp);
    std::lock_guard lock(mutex_);
    ++misses_;
    return resp;
}

ProviderStack make_provider(const ProviderConfig& config,
                            const std::optional<std::filesystem::path>& mock_dir,
                            const std::optional<std::filesystem::path>& mock_call_log) {
    ProviderStack stack;
    std::unique_ptr<Provider> inner;
    if (mock_dir) {
        auto mock = MockProvider::from_dir(*mock_dir);
        if (mock_call_log) mock->set_call_log(*mock_call_log);
        stack.mock = mock.get();
        inner = std::make_unique<ThrottlingProvider>(std::move(mock), config.max_in_flight);
    } else {
        inner = std::make_unique<HttpProvider>(config);
    }
    if (config.cache_dir) {
        auto caching =
            std::make_unique<CachingProvider>(std::move(inner), CacheStore(*config.cache_dir));
        stack.cache = caching.get();
        stack.provider = std::move(caching);
    } else {
        stack.provider = std::move(inner);
    }
    return stack;
}

}  // namespace rubric_forge
