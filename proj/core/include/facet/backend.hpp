#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "facet/cache.hpp"
#include "facet/errors.hpp"
#include "facet/types.hpp"

namespace facet {

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_id;
    // Distinguishes deliberate repeat queries (diversity sampling) that must
    // not collapse onto one cache entry.
    std::optional<std::uint64_t> seed;
};

struct VisionRequest {
    std::string source; // opaque image locator
    std::string system_prompt;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_id;
};

struct BackendPolicy {
    int max_in_flight = 4;
    int max_retries = 2; // transient failures only
    std::chrono::milliseconds base_backoff{200};
    std::chrono::milliseconds timeout{120000};
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat_complete(const ChatRequest& request) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    // One unit-norm vector per input text, same order.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

class VisionBackend {
public:
    virtual ~VisionBackend() = default;
    virtual std::string caption(const VisionRequest& request) = 0;
};

class TaggerBackend {
public:
    virtual ~TaggerBackend() = default;
    // Top-k vocabulary entries by score, descending; ties by name ascending.
    virtual TagRecord tag(const std::string& source, const std::vector<std::string>& vocabulary,
                          std::size_t k) = 0;
};

// The capability bundle handed to pipeline stages. Members may be null when a
// stage does not use them; `workers` bounds per-item fan-out (the caching
// layer separately bounds raw in-flight calls).
struct BackendSet {
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<EmbeddingBackend> embedder;
    std::shared_ptr<VisionBackend> vision;
    std::shared_ptr<TaggerBackend> tagger;
    int workers = 4;
};

// Counting semaphore bounding in-flight raw calls per capability.
class Gate {
public:
    explicit Gate(int limit);

    class Pass {
    public:
        explicit Pass(Gate* gate) : gate_(gate) {}
        ~Pass();
        Pass(const Pass&) = delete;
        Pass& operator=(const Pass&) = delete;

    private:
        Gate* gate_;
    };

    Pass acquire();

private:
    friend class Pass;
    void release();
    std::mutex mutex_;
    std::condition_variable ready_;
    int available_;
};

// Runs fn, retrying transient backend failures per policy with exponential
// backoff; retries exhausted -> exhausted error. Other kinds propagate.
template <typename Fn>
auto call_with_retry(const BackendPolicy& policy, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const BackendError& e) {
            if (e.kind() != FailureKind::transient) throw;
            if (attempt >= policy.max_retries)
                throw BackendError(FailureKind::exhausted,
                                   std::string("retries exhausted: ") + e.what());
            std::this_thread::sleep_for(policy.base_backoff * (1 << attempt));
        }
    }
}

// The decorators below add caching, bounded concurrency, input validation,
// and transient-retry around a raw backend. A null inner backend turns the
// decorator into a replay client: a cache miss raises CacheMissError instead
// of touching the network.

class CachingChatBackend : public ChatBackend {
public:
    CachingChatBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<ResponseCache> cache,
                       BackendPolicy policy);
    std::string chat_complete(const ChatRequest& request) override;

private:
    std::shared_ptr<ChatBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    BackendPolicy policy_;
    std::unique_ptr<Gate> gate_;
};

class CachingEmbeddingBackend : public EmbeddingBackend {
public:
    CachingEmbeddingBackend(std::shared_ptr<EmbeddingBackend> inner,
                            std::shared_ptr<ResponseCache> cache, BackendPolicy policy,
                            std::string model_id);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

private:
    std::shared_ptr<EmbeddingBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    BackendPolicy policy_;
    std::string model_id_;
    std::unique_ptr<Gate> gate_;
};

class CachingVisionBackend : public VisionBackend {
public:
    CachingVisionBackend(std::shared_ptr<VisionBackend> inner,
                         std::shared_ptr<ResponseCache> cache, BackendPolicy policy);
    std::string caption(const VisionRequest& request) override;

private:
    std::shared_ptr<VisionBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    BackendPolicy policy_;
    std::unique_ptr<Gate> gate_;
};

class CachingTaggerBackend : public TaggerBackend {
public:
    CachingTaggerBackend(std::shared_ptr<TaggerBackend> inner,
                         std::shared_ptr<ResponseCache> cache, BackendPolicy policy,
                         std::string model_id);
    TagRecord tag(const std::string& source, const std::vector<std::string>& vocabulary,
                  std::size_t k) override;

private:
    std::shared_ptr<TaggerBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    BackendPolicy policy_;
    std::string model_id_;
    std::unique_ptr<Gate> gate_;
};

} // namespace facet
