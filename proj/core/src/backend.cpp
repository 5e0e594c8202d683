#include "facet/backend.hpp"

#include <algorithm>
#include <cmath>

#include "facet/io.hpp"

namespace facet {
namespace {

using nlohmann::json;

void validate(const ChatRequest& request) {
    if (trim(request.system_prompt).empty() || trim(request.user_prompt).empty())
        throw ValidationError("chat request prompts must be non-empty");
    if (request.temperature < 0.0) throw ValidationError("temperature must be >= 0");
    if (request.max_tokens <= 0) throw ValidationError("max_tokens must be positive");
}

json chat_payload(const ChatRequest& request) {
    json payload{{"system", request.system_prompt},
                 {"user", request.user_prompt},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    if (request.seed) payload["seed"] = *request.seed;
    return payload;
}

json vision_payload(const VisionRequest& request) {
    return json{{"source", request.source},
                {"system", request.system_prompt},
                {"prompt", request.prompt},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens}};
}

std::vector<double> normalized_or_throw(std::vector<double> vec) {
    double norm_sq = 0.0;
    for (double x : vec) norm_sq += x * x;
    if (norm_sq <= 0.0)
        throw BackendError(FailureKind::malformed, "embedding backend returned a zero vector");
    double norm = std::sqrt(norm_sq);
    for (double& x : vec) x /= norm;
    return vec;
}

void sort_tags(std::vector<ScoredTag>& tags) {
    std::sort(tags.begin(), tags.end(), [](const ScoredTag& a, const ScoredTag& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.tag < b.tag;
    });
}

} // namespace

const char* failure_kind_name(FailureKind kind) {
    switch (kind) {
        case FailureKind::transient: return "transient";
        case FailureKind::exhausted: return "exhausted";
        case FailureKind::auth: return "auth";
        case FailureKind::malformed: return "malformed";
        case FailureKind::fetch: return "fetch";
        case FailureKind::unscripted: return "unscripted";
    }
    return "unknown";
}

Gate::Gate(int limit) : available_(limit) {
    if (limit <= 0) throw ValidationError("max_in_flight must be positive");
}

Gate::Pass Gate::acquire() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return available_ > 0; });
    --available_;
    return Pass(this);
}

void Gate::release() {
    std::lock_guard lock(mutex_);
    ++available_;
    ready_.notify_one();
}

Gate::Pass::~Pass() {
    if (gate_) gate_->release();
}

CachingChatBackend::CachingChatBackend(std::shared_ptr<ChatBackend> inner,
                                       std::shared_ptr<ResponseCache> cache, BackendPolicy policy)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      policy_(policy),
      gate_(std::make_unique<Gate>(policy.max_in_flight)) {}

std::string CachingChatBackend::chat_complete(const ChatRequest& request) {
    validate(request);
    auto payload = chat_payload(request);
    auto key = CacheKey::make("chat", request.model_id, payload);
    if (auto hit = cache_->get(key)) return *hit;
    if (!inner_) throw CacheMissError(key.digest, "chat response not in cache");
    auto pass = gate_->acquire();
    auto response = call_with_retry(policy_, [&] { return inner_->chat_complete(request); });
    cache_->put(key, payload, response);
    return response;
}

CachingEmbeddingBackend::CachingEmbeddingBackend(std::shared_ptr<EmbeddingBackend> inner,
                                                 std::shared_ptr<ResponseCache> cache,
                                                 BackendPolicy policy, std::string model_id)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      policy_(policy),
      model_id_(std::move(model_id)),
      gate_(std::make_unique<Gate>(policy.max_in_flight)) {}

std::vector<std::vector<double>> CachingEmbeddingBackend::embed(
    const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed requires at least one text");
    std::vector<std::vector<double>> out(texts.size());
    std::vector<CacheKey> keys;
    keys.reserve(texts.size());
    std::vector<std::size_t> misses;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        keys.push_back(CacheKey::make("embed", model_id_, json{{"text", texts[i]}}));
        if (auto hit = cache_->get(keys[i]))
            out[i] = json::parse(*hit).get<std::vector<double>>();
        else
            misses.push_back(i);
    }
    if (misses.empty()) return out;
    if (!inner_)
        throw CacheMissError(keys[misses.front()].digest, "embedding not in cache");

    std::vector<std::string> miss_texts;
    miss_texts.reserve(misses.size());
    for (std::size_t i : misses) miss_texts.push_back(texts[i]);
    auto pass = gate_->acquire();
    auto fresh = call_with_retry(policy_, [&] { return inner_->embed(miss_texts); });
    if (fresh.size() != misses.size())
        throw BackendError(FailureKind::malformed,
                           "embedding backend returned " + std::to_string(fresh.size()) +
                               " vectors for " + std::to_string(misses.size()) + " texts");
    for (std::size_t n = 0; n < misses.size(); ++n) {
        auto vec = normalized_or_throw(std::move(fresh[n]));
        std::size_t i = misses[n];
        cache_->put(keys[i], json{{"text", texts[i]}}, json(vec).dump());
        out[i] = std::move(vec);
    }
    return out;
}

CachingVisionBackend::CachingVisionBackend(std::shared_ptr<VisionBackend> inner,
                                           std::shared_ptr<ResponseCache> cache,
                                           BackendPolicy policy)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      policy_(policy),
      gate_(std::make_unique<Gate>(policy.max_in_flight)) {}

std::string CachingVisionBackend::caption(const VisionRequest& request) {
    if (trim(request.prompt).empty())
        throw ValidationError("vision request prompt must be non-empty");
    auto payload = vision_payload(request);
    auto key = CacheKey::make("vision", request.model_id, payload);
    if (auto hit = cache_->get(key)) return *hit;
    if (!inner_) throw CacheMissError(key.digest, "caption not in cache");
    auto pass = gate_->acquire();
    auto response = call_with_retry(policy_, [&] { return inner_->caption(request); });
    if (trim(response).empty())
        throw BackendError(FailureKind::malformed, "vision backend returned an empty caption");
    cache_->put(key, payload, response);
    return response;
}

CachingTaggerBackend::CachingTaggerBackend(std::shared_ptr<TaggerBackend> inner,
                                           std::shared_ptr<ResponseCache> cache,
                                           BackendPolicy policy, std::string model_id)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      policy_(policy),
      model_id_(std::move(model_id)),
      gate_(std::make_unique<Gate>(policy.max_in_flight)) {}

TagRecord CachingTaggerBackend::tag(const std::string& source,
                                    const std::vector<std::string>& vocabulary, std::size_t k) {
    if (vocabulary.empty()) throw ValidationError("tagger vocabulary must be non-empty");
    if (k == 0 || k > vocabulary.size())
        throw ValidationError("tagger k must be in [1, vocabulary size]");
    json payload{{"source", source}, {"vocabulary", vocabulary}, {"k", k}};
    auto key = CacheKey::make("tag", model_id_, payload);
    auto decode = [&](const std::string& body) {
        TagRecord record;
        record.image_id = source;
        record.tags = json::parse(body).get<std::vector<ScoredTag>>();
        return record;
    };
    if (auto hit = cache_->get(key)) return decode(*hit);
    if (!inner_) throw CacheMissError(key.digest, "tag scores not in cache");
    auto pass = gate_->acquire();
    auto record =
        call_with_retry(policy_, [&] { return inner_->tag(source, vocabulary, k); });
    if (record.tags.size() != k)
        throw BackendError(FailureKind::malformed,
                           "tagger returned " + std::to_string(record.tags.size()) +
                               " tags, expected " + std::to_string(k));
    sort_tags(record.tags);
    json body = json::array();
    for (const auto& tag : record.tags) body.push_back(json{{"tag", tag.tag}, {"score", tag.score}});
    cache_->put(key, payload, body.dump());
    record.image_id = source;
    return record;
}

} // namespace facet
