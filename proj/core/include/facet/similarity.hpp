#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace facet {

class EmbeddingBackend;

double clamp01(double value);

// Cosine similarity; 0 when either vector has zero norm. Dimensions must agree.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct NearestMatch {
    std::size_t index = 0;
    double cosine = 0.0;
};

// Highest-cosine candidate; ties resolve to the lowest index. Empty input -> nullopt.
std::optional<NearestMatch> nearest_vector(const std::vector<double>& query,
                                           const std::vector<std::vector<double>>& candidates);

// Embeds query and candidates in one batch and picks the nearest candidate.
std::optional<NearestMatch> nearest_name(EmbeddingBackend& embedder, std::string_view query,
                                         const std::vector<std::string>& candidates);

} // namespace facet
