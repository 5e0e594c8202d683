#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace facet {

struct CacheKey {
    std::string digest; // sha256 hex over capability, model, canonical payload

    // Payload must already contain every value that influences the response
    // (decoding parameters included); any field change changes the digest.
    static CacheKey make(std::string_view capability, std::string_view model_id,
                         const nlohmann::json& payload);
};

// Append-only content-addressed store of backend responses. One JSON file per
// digest; writes are write-temp-then-rename, so concurrent writers of the
// same key are idempotent and readers never see partial entries.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const CacheKey& key) const;
    void put(const CacheKey& key, const nlohmann::json& request, std::string_view response);
    bool contains(const CacheKey& key) const;

    const std::filesystem::path& dir() const { return dir_; }
    std::size_t entry_count() const;

private:
    std::filesystem::path entry_path(const CacheKey& key) const;
    std::filesystem::path dir_;
};

} // namespace facet
