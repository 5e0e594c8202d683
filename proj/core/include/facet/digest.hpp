#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace facet {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view data);

// Cheap deterministic PRNG used wherever reproducibility across platforms
// matters (std::shuffle and the distributions are implementation-defined).
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next();
    // Uniform in [0, 1).
    double next_unit();
    // Uniform in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);
};

// Seed a SplitMix64 stream from arbitrary text.
std::uint64_t seed_from_text(std::string_view text);

// Fisher-Yates with SplitMix64; stable across platforms for a fixed seed.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace facet
