#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "facet/http_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "facet/digest.hpp"

namespace facet {
namespace {

using nlohmann::json;

bool is_remote(const std::string& source) {
    return source.rfind("http://", 0) == 0 || source.rfind("https://", 0) == 0;
}

std::string mime_for(const std::string& path) {
    auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
    if (ext == "png") return "image/png";
    if (ext == "gif") return "image/gif";
    if (ext == "webp") return "image/webp";
    if (ext == "bmp") return "image/bmp";
    return "application/octet-stream";
}

json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    httplib::Headers headers;
    auto token = bearer_token(endpoint);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result)
        throw BackendError(FailureKind::transient,
                           "request to " + endpoint.base_url + path + " failed: " +
                               httplib::to_string(result.error()));
    int status = result->status;
    if (status == 401 || status == 403)
        throw BackendError(FailureKind::auth, "endpoint " + endpoint.base_url + path +
                                                  " rejected credentials (HTTP " +
                                                  std::to_string(status) + ")");
    if (status == 408 || status == 429 || status >= 500)
        throw BackendError(FailureKind::transient, "endpoint " + endpoint.base_url + path +
                                                       " returned HTTP " +
                                                       std::to_string(status));
    if (status < 200 || status >= 300)
        throw BackendError(FailureKind::malformed, "endpoint " + endpoint.base_url + path +
                                                       " returned HTTP " +
                                                       std::to_string(status) + ": " +
                                                       result->body.substr(0, 200));
    try {
        return json::parse(result->body);
    } catch (const json::exception& e) {
        throw BackendError(FailureKind::malformed,
                           std::string("endpoint returned invalid JSON: ") + e.what());
    }
}

std::string first_choice_content(const json& doc) {
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        throw BackendError(FailureKind::malformed, "choice content is not a string");
    } catch (const json::exception& e) {
        throw BackendError(FailureKind::malformed,
                           std::string("unexpected completion shape: ") + e.what());
    }
}

} // namespace

std::string bearer_token(const HttpEndpoint& endpoint) {
    if (endpoint.credential_env.empty()) return "";
    const char* value = std::getenv(endpoint.credential_env.c_str());
    if (!value || !*value)
        throw BackendError(FailureKind::auth, "credential environment variable " +
                                                  endpoint.credential_env + " is not set");
    return value;
}

std::string image_data_uri(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendError(FailureKind::fetch, "cannot read image " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return "data:" + mime_for(path) + ";base64," + base64_encode(buffer.str());
}

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpChatBackend::chat_complete(const ChatRequest& request) {
    json body{{"model", request.model_id.empty() ? endpoint_.model_id : request.model_id},
              {"messages", json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                                        json{{"role", "user"}, {"content", request.user_prompt}}})},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (request.seed) body["seed"] = *request.seed;
    auto path = endpoint_.path.empty() ? "/v1/chat/completions" : endpoint_.path;
    return first_choice_content(post_json(endpoint_, path, body));
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

std::vector<std::vector<double>> HttpEmbeddingBackend::embed(
    const std::vector<std::string>& texts) {
    json body{{"model", endpoint_.model_id}, {"input", texts}};
    auto path = endpoint_.path.empty() ? "/v1/embeddings" : endpoint_.path;
    auto doc = post_json(endpoint_, path, body);
    std::vector<std::vector<double>> out(texts.size());
    try {
        for (const auto& row : doc.at("data")) {
            auto index = row.at("index").get<std::size_t>();
            if (index >= out.size())
                throw BackendError(FailureKind::malformed, "embedding index out of range");
            out[index] = row.at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw BackendError(FailureKind::malformed,
                           std::string("unexpected embeddings shape: ") + e.what());
    }
    for (auto& vec : out) {
        double norm_sq = 0.0;
        for (double x : vec) norm_sq += x * x;
        if (norm_sq <= 0.0)
            throw BackendError(FailureKind::malformed, "embedding endpoint returned zero vector");
        double norm = std::sqrt(norm_sq);
        for (double& x : vec) x /= norm;
    }
    return out;
}

HttpVisionBackend::HttpVisionBackend(HttpEndpoint endpoint, bool inline_remote)
    : endpoint_(std::move(endpoint)), inline_remote_(inline_remote) {}

std::string HttpVisionBackend::caption(const VisionRequest& request) {
    std::string url = request.source;
    if (!is_remote(request.source) || inline_remote_) url = image_data_uri(request.source);

    json content = json::array({json{{"type", "text"}, {"text", request.prompt}},
                                json{{"type", "image_url"}, {"image_url", json{{"url", url}}}}});
    json messages = json::array();
    if (!request.system_prompt.empty())
        messages.push_back(json{{"role", "system"}, {"content", request.system_prompt}});
    messages.push_back(json{{"role", "user"}, {"content", content}});

    json body{{"model", request.model_id.empty() ? endpoint_.model_id : request.model_id},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    auto path = endpoint_.path.empty() ? "/v1/chat/completions" : endpoint_.path;
    return first_choice_content(post_json(endpoint_, path, body));
}

HttpTaggerBackend::HttpTaggerBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

TagRecord HttpTaggerBackend::tag(const std::string& source,
                                 const std::vector<std::string>& vocabulary, std::size_t k) {
    json body{{"model", endpoint_.model_id},
              {"source", source},
              {"vocabulary", vocabulary},
              {"k", k}};
    auto path = endpoint_.path.empty() ? "/tag" : endpoint_.path;
    auto doc = post_json(endpoint_, path, body);

    TagRecord record;
    record.image_id = source;
    try {
        for (const auto& row : doc.at("tags"))
            record.tags.push_back({row.at("tag").get<std::string>(),
                                   row.at("score").get<double>()});
    } catch (const json::exception& e) {
        throw BackendError(FailureKind::malformed,
                           std::string("unexpected tagger shape: ") + e.what());
    }
    std::sort(record.tags.begin(), record.tags.end(), [](const ScoredTag& a, const ScoredTag& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.tag < b.tag;
    });
    if (record.tags.size() < k)
        throw BackendError(FailureKind::malformed,
                           "tagger returned " + std::to_string(record.tags.size()) +
                               " scores for k=" + std::to_string(k));
    record.tags.resize(k);
    return record;
}

} // namespace facet
