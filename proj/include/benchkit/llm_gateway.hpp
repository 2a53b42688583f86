#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace benchkit {

struct ChatRequest {
    std::string model;
    std::string system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 4096;
};

struct ChatResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    bool from_cache = false;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model;
};

// Provider backends implement the raw calls; Gateway adds caching, retries
// and the in-flight bound. Implementations must be thread-safe.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResponse chat(const ChatRequest& req) = 0;
    virtual std::vector<EmbeddingVector> embed(const std::string& model,
                                               const std::vector<std::string>& texts) = 0;
};

struct GatewayConfig {
    std::string cache_dir;       // empty disables caching
    int max_attempts = 3;        // total tries per call
    int backoff_base_ms = 250;   // doubled per retry, plus jitter
    int max_in_flight = 8;
    size_t embed_batch_limit = 2048;
};

struct GatewayStats {
    uint64_t provider_calls = 0;  // chat calls + embedding batch calls
    uint64_t cache_hits = 0;
    uint64_t retries = 0;
};

class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, GatewayConfig config);

    // Cache key is a pure function of the request content, so a warm cache
    // replays a whole run without touching the provider.
    ChatResponse chat(const ChatRequest& req);

    // One vector per text, order preserving; misses are batched up to
    // embed_batch_limit per provider call; each text is cached individually.
    std::vector<EmbeddingVector> embed(const std::string& model,
                                       const std::vector<std::string>& texts);

    GatewayStats stats() const;
    const GatewayConfig& config() const { return config_; }

    static std::string chat_cache_key(const ChatRequest& req);
    static std::string embed_cache_key(const std::string& model, const std::string& text);

private:
    class InFlightGuard;

    template <typename Fn>
    auto with_retries(Fn&& call) -> decltype(call());

    std::shared_ptr<Provider> provider_;
    GatewayConfig config_;

    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    int slots_in_use_ = 0;

    mutable std::mutex cache_mutex_;

    std::atomic<uint64_t> provider_calls_{0};
    std::atomic<uint64_t> cache_hits_{0};
    std::atomic<uint64_t> retries_{0};
};

// OpenAI-compatible chat-completions / embeddings wire shapes over HTTP.
// The API key is read from the named environment variable at call time.
struct HttpProviderConfig {
    std::string base_url;            // e.g. "https://api.openai.com/v1"
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 120;
};

class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);
    ChatResponse chat(const ChatRequest& req) override;
    std::vector<EmbeddingVector> embed(const std::string& model,
                                       const std::vector<std::string>& texts) override;

private:
    HttpProviderConfig config_;
};

// Deterministic offline provider. Dispatches on markers in the system
// instruction (quality scoring, judging, topic naming) and otherwise plays a
// chat model whose verbosity depends on the model id. Embeddings are hashed
// bag-of-words vectors. Every response is a pure function of the request, so
// full pipeline runs reproduce bit-for-bit without network access.
class StubProvider : public Provider {
public:
    ChatResponse chat(const ChatRequest& req) override;
    std::vector<EmbeddingVector> embed(const std::string& model,
                                       const std::vector<std::string>& texts) override;

    static constexpr int kEmbedDim = 32;
};

}  // namespace benchkit
