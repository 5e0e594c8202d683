#include "facet/cache.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>

#include "facet/digest.hpp"
#include "facet/errors.hpp"

namespace facet {

CacheKey CacheKey::make(std::string_view capability, std::string_view model_id,
                        const nlohmann::json& payload) {
    std::string material;
    material += capability;
    material += '\n';
    material += model_id;
    material += '\n';
    material += payload.dump();
    return CacheKey{sha256_hex(material)};
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const {
    if (key.digest.size() < 3) throw ValidationError("malformed cache digest: " + key.digest);
    return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
    auto path = entry_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        auto doc = nlohmann::json::parse(buffer.str());
        return doc.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("corrupt cache entry " + path.string() + ": " + e.what());
    }
}

bool ResponseCache::contains(const CacheKey& key) const {
    return std::filesystem::exists(entry_path(key));
}

void ResponseCache::put(const CacheKey& key, const nlohmann::json& request,
                        std::string_view response) {
    auto path = entry_path(key);
    if (std::filesystem::exists(path)) return;
    std::filesystem::create_directories(path.parent_path());

    auto now = std::chrono::system_clock::now().time_since_epoch();
    nlohmann::json entry{
        {"digest", key.digest},
        {"request", request},
        {"response", std::string(response)},
        {"created_at_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};

    static std::atomic<std::uint64_t> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write cache entry " + tmp.string());
        auto body = entry.dump(2);
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::size_t ResponseCache::entry_count() const {
    std::size_t count = 0;
    if (!std::filesystem::exists(dir_)) return 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_))
        if (entry.is_regular_file() && entry.path().extension() == ".json") ++count;
    return count;
}

} // namespace facet
