#include "facet/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "facet/backend.hpp"
#include "facet/errors.hpp"

namespace facet {

double clamp01(double value) { return std::min(1.0, std::max(0.0, value)); }

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine dimension mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<NearestMatch> nearest_vector(const std::vector<double>& query,
                                           const std::vector<std::vector<double>>& candidates) {
    std::optional<NearestMatch> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double sim = cosine(query, candidates[i]);
        if (!best || sim > best->cosine) best = NearestMatch{i, sim};
    }
    return best;
}

std::optional<NearestMatch> nearest_name(EmbeddingBackend& embedder, std::string_view query,
                                         const std::vector<std::string>& candidates) {
    if (candidates.empty()) return std::nullopt;
    std::vector<std::string> texts;
    texts.reserve(candidates.size() + 1);
    texts.emplace_back(query);
    texts.insert(texts.end(), candidates.begin(), candidates.end());
    auto vectors = embedder.embed(texts);
    std::vector<std::vector<double>> candidate_vectors(vectors.begin() + 1, vectors.end());
    return nearest_vector(vectors.front(), candidate_vectors);
}

} // namespace facet
