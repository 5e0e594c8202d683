#include "facet/types.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace facet {

std::string trim(std::string_view text) {
    auto begin = text.begin();
    auto end = text.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
    return std::string(begin, end);
}

std::string normalize_name(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

bool names_equal(std::string_view a, std::string_view b) {
    return normalize_name(a) == normalize_name(b);
}

bool is_unassigned(std::string_view name) { return names_equal(name, kUnassigned); }

bool Collection::contains(std::string_view image_id) const {
    return index_.find(image_id) != index_.end();
}

const ImageRecord& Collection::at(std::string_view image_id) const {
    auto it = index_.find(image_id);
    if (it == index_.end())
        throw ValidationError("unknown image_id: " + std::string(image_id));
    return records_[it->second];
}

Collection validate_collection(std::vector<ImageRecord> records) {
    if (records.empty()) throw ValidationError("collection is empty");
    Collection collection;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (trim(rec.image_id).empty())
            throw ValidationError("image record " + std::to_string(i) + " has an empty image_id");
        if (trim(rec.source).empty())
            throw ValidationError("image " + rec.image_id + " has an empty source");
        if (rec.popularity && *rec.popularity < 0.0)
            throw ValidationError("image " + rec.image_id + " has negative popularity");
        auto [it, inserted] = collection.index_.emplace(rec.image_id, i);
        if (!inserted) throw ValidationError("duplicate image_id: " + rec.image_id);
    }
    collection.records_ = std::move(records);
    return collection;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::caption_proposer: return "caption_proposer";
        case Provenance::tag_proposer: return "tag_proposer";
        case Provenance::image_proposer: return "image_proposer";
        case Provenance::user_supplied: return "user_supplied";
    }
    return "user_supplied";
}

Provenance provenance_from_name(std::string_view name) {
    if (name == "caption_proposer") return Provenance::caption_proposer;
    if (name == "tag_proposer") return Provenance::tag_proposer;
    if (name == "image_proposer") return Provenance::image_proposer;
    if (name == "user_supplied") return Provenance::user_supplied;
    throw ParseError("unknown provenance: " + std::string(name));
}

const char* granularity_name(Granularity g) {
    switch (g) {
        case Granularity::coarse: return "coarse";
        case Granularity::mid: return "mid";
        case Granularity::fine: return "fine";
    }
    return "mid";
}

Granularity granularity_from_name(std::string_view name) {
    if (name == "coarse") return Granularity::coarse;
    if (name == "mid") return Granularity::mid;
    if (name == "fine") return Granularity::fine;
    throw ParseError("unknown granularity: " + std::string(name));
}

const std::vector<std::string>& CandidateHierarchy::level(Granularity g) const {
    switch (g) {
        case Granularity::coarse: return coarse;
        case Granularity::mid: return mid;
        case Granularity::fine: return fine;
    }
    return mid;
}

std::vector<std::string>& CandidateHierarchy::level(Granularity g) {
    switch (g) {
        case Granularity::coarse: return coarse;
        case Granularity::mid: return mid;
        case Granularity::fine: return fine;
    }
    return mid;
}

void validate_hierarchy(const CandidateHierarchy& hierarchy) {
    for (Granularity g : kAllGranularities) {
        const auto& names = hierarchy.level(g);
        if (names.empty())
            throw ValidationError(std::string("hierarchy for ") + hierarchy.criterion_id +
                                  " has no " + granularity_name(g) + " candidates");
        std::set<std::string> seen;
        for (const auto& name : names) {
            if (trim(name).empty())
                throw ValidationError(std::string("hierarchy for ") + hierarchy.criterion_id +
                                      " has an empty " + granularity_name(g) + " candidate");
            if (!seen.insert(normalize_name(name)).second)
                throw ValidationError(std::string("hierarchy for ") + hierarchy.criterion_id +
                                      " repeats " + granularity_name(g) + " candidate '" + name +
                                      "'");
        }
    }
}

Substructure make_substructure(std::string criterion_id, Granularity granularity,
                               std::map<std::string, std::string> assignments) {
    Substructure sub;
    sub.criterion_id = std::move(criterion_id);
    sub.granularity = granularity;
    std::set<std::string> names;
    for (const auto& [image_id, cluster] : assignments) {
        if (trim(cluster).empty())
            throw ValidationError("image " + image_id + " assigned to an empty cluster name");
        if (!is_unassigned(cluster)) names.insert(cluster);
    }
    sub.assignments = std::move(assignments);
    sub.cluster_names.assign(names.begin(), names.end());
    return sub;
}

void validate_substructure(const Substructure& sub, std::optional<std::size_t> collection_size) {
    std::set<std::string> known;
    for (const auto& name : sub.cluster_names) known.insert(normalize_name(name));
    for (const auto& [image_id, cluster] : sub.assignments) {
        if (is_unassigned(cluster)) continue;
        if (!known.count(normalize_name(cluster)))
            throw ValidationError("image " + image_id + " assigned to unknown cluster '" +
                                  cluster + "'");
    }
    if (collection_size && sub.assignments.size() != *collection_size)
        throw ValidationError("substructure for " + sub.criterion_id + " covers " +
                              std::to_string(sub.assignments.size()) + " images, expected " +
                              std::to_string(*collection_size));
}

Distribution Distribution::from_counts(std::string criterion_id, Granularity granularity,
                                       std::map<std::string, std::int64_t> counts) {
    Distribution dist;
    dist.criterion_id = std::move(criterion_id);
    dist.granularity = granularity;
    std::int64_t total = 0;
    for (const auto& [name, count] : counts) {
        if (count < 0)
            throw ValidationError("negative count for cluster '" + name + "'");
        total += count;
    }
    if (total == 0) throw ValidationError("distribution has no mass");
    for (const auto& [name, count] : counts)
        dist.probabilities[name] = static_cast<double>(count) / static_cast<double>(total);
    dist.counts = std::move(counts);
    return dist;
}

Distribution Distribution::from_substructure(const Substructure& sub, bool include_sentinel) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& name : sub.cluster_names) counts[name] = 0;
    for (const auto& [image_id, cluster] : sub.assignments) {
        if (is_unassigned(cluster)) {
            if (include_sentinel) counts[std::string(kUnassigned)] += 1;
            continue;
        }
        counts[cluster] += 1;
    }
    return from_counts(sub.criterion_id, sub.granularity, std::move(counts));
}

std::int64_t Distribution::total() const {
    std::int64_t total = 0;
    for (const auto& [name, count] : counts) total += count;
    return total;
}

const std::map<std::string, std::string>* GroundTruth::labels_for(
    std::string_view criterion) const {
    for (const auto& [name, map] : labels)
        if (names_equal(name, criterion)) return &map;
    return nullptr;
}

} // namespace facet
