#pragma once

#include <chrono>
#include <string>

#include "facet/backend.hpp"

namespace facet {

// One remote capability endpoint. Credentials are never stored in config
// values; `credential_env` names the environment variable holding the bearer
// token (empty = unauthenticated endpoint).
struct HttpEndpoint {
    std::string base_url; // scheme://host[:port]
    std::string path;     // capability-specific default when empty
    std::string model_id;
    std::string credential_env;
    std::chrono::milliseconds timeout{120000};
};

// Chat-completions client for an OpenAI-compatible server.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpEndpoint endpoint);
    std::string chat_complete(const ChatRequest& request) override;

private:
    HttpEndpoint endpoint_;
};

// Embeddings client; vectors are re-normalized to unit length.
class HttpEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(HttpEndpoint endpoint);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

private:
    HttpEndpoint endpoint_;
};

// Vision chat client. Local image sources are inlined as data URIs;
// http(s) sources pass through as remote image URLs unless `inline_remote`.
class HttpVisionBackend : public VisionBackend {
public:
    explicit HttpVisionBackend(HttpEndpoint endpoint, bool inline_remote = false);
    std::string caption(const VisionRequest& request) override;

private:
    HttpEndpoint endpoint_;
    bool inline_remote_;
};

// Open-vocabulary tagger service client. Protocol: POST {source, vocabulary,
// k, model} -> {"tags": [{"tag", "score"}, ...]}.
class HttpTaggerBackend : public TaggerBackend {
public:
    explicit HttpTaggerBackend(HttpEndpoint endpoint);
    TagRecord tag(const std::string& source, const std::vector<std::string>& vocabulary,
                  std::size_t k) override;

private:
    HttpEndpoint endpoint_;
};

// Reads the token from endpoint.credential_env; missing/empty -> auth error
// when the env name is set.
std::string bearer_token(const HttpEndpoint& endpoint);

// Turns a local image file into a data: URI with a type guessed from the
// extension. Unreadable file -> fetch error.
std::string image_data_uri(const std::string& path);

} // namespace facet
