#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facet/errors.hpp"

namespace facet {

// Cluster absorbing assignment failures. Present at every granularity,
// excluded from cluster counts, scores, and analytics unless asked for.
inline constexpr std::string_view kUnassigned = "unassigned";

// --- name handling -----------------------------------------------------------

std::string trim(std::string_view text);
// trim + lowercase + collapse internal whitespace runs to single spaces.
std::string normalize_name(std::string_view text);
// Case-insensitive, whitespace-trimmed equality; the default comparison for
// criterion and cluster names everywhere.
bool names_equal(std::string_view a, std::string_view b);
bool is_unassigned(std::string_view name);

// --- collection --------------------------------------------------------------

struct ImageRecord {
    std::string image_id;
    std::string source; // opaque locator: file path or URI, handed to backends
    std::optional<double> popularity;
    std::map<std::string, std::string> metadata;
};

class Collection {
public:
    Collection() = default;
    const std::vector<ImageRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool contains(std::string_view image_id) const;
    const ImageRecord& at(std::string_view image_id) const;

    friend Collection validate_collection(std::vector<ImageRecord> records);

private:
    std::vector<ImageRecord> records_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

// Checks collection invariants (unique non-empty ids, popularity >= 0,
// non-empty collection) and builds the id index. Input order is preserved.
Collection validate_collection(std::vector<ImageRecord> records);

// --- criteria ----------------------------------------------------------------

enum class Provenance { caption_proposer, tag_proposer, image_proposer, user_supplied };
enum class CriterionStatus { raw, refined };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(std::string_view name);

struct Criterion {
    std::string criterion_id;
    std::string name; // non-empty after trim
    Provenance provenance = Provenance::user_supplied;
    CriterionStatus status = CriterionStatus::raw;
    std::vector<std::string> merged_from; // raw criterion_ids; refined only
};

// --- captions and tags -------------------------------------------------------

enum class CaptionKind { generic, criterion_specific };

struct CaptionRecord {
    std::string image_id;
    std::string text; // non-empty
    CaptionKind kind = CaptionKind::generic;
    std::string criterion_id; // set iff kind == criterion_specific
};

struct ScoredTag {
    std::string tag;
    double score = 0.0;
};

struct TagRecord {
    std::string image_id;
    std::vector<ScoredTag> tags; // distinct, sorted by score descending
};

// --- granularity -------------------------------------------------------------

enum class Granularity { coarse = 0, mid = 1, fine = 2 };

inline constexpr Granularity kAllGranularities[] = {Granularity::coarse, Granularity::mid,
                                                    Granularity::fine};
const char* granularity_name(Granularity g);
Granularity granularity_from_name(std::string_view name);

struct CandidateHierarchy {
    std::string criterion_id;
    std::vector<std::string> coarse;
    std::vector<std::string> mid;
    std::vector<std::string> fine;

    const std::vector<std::string>& level(Granularity g) const;
    std::vector<std::string>& level(Granularity g);
};

// Each level non-empty; names within a level distinct under normalize_name.
void validate_hierarchy(const CandidateHierarchy& hierarchy);

// --- substructures -----------------------------------------------------------

struct Substructure {
    std::string criterion_id;
    Granularity granularity = Granularity::mid;
    std::map<std::string, std::string> assignments; // image_id -> cluster name
    std::vector<std::string> cluster_names;         // non-sentinel clusters (C_l)

    std::size_t cluster_count() const { return cluster_names.size(); } // K_l
};

// Builds a substructure from assignments: cluster_names become the distinct
// non-sentinel assigned names, sorted lexicographically.
Substructure make_substructure(std::string criterion_id, Granularity granularity,
                               std::map<std::string, std::string> assignments);

// Every assigned name is the sentinel or a member of cluster_names, and
// `collection_size` images are covered when a collection is given.
void validate_substructure(const Substructure& sub,
                           std::optional<std::size_t> collection_size = std::nullopt);

// --- distributions -----------------------------------------------------------

struct Distribution {
    std::string criterion_id;
    Granularity granularity = Granularity::mid;
    std::map<std::string, std::int64_t> counts;
    std::map<std::string, double> probabilities; // counts normalized, sums to 1

    static Distribution from_counts(std::string criterion_id, Granularity granularity,
                                    std::map<std::string, std::int64_t> counts);
    // Cluster-size distribution of a substructure.
    static Distribution from_substructure(const Substructure& sub,
                                          bool include_sentinel = false);
    std::int64_t total() const;
};

// --- evaluation --------------------------------------------------------------

struct PerCriterionScore {
    double cacc = 0.0;
    double sacc = 0.0;
    double hm = 0.0;
    Granularity chosen_granularity = Granularity::mid;
};

struct MetricReport {
    double tpr = 0.0;
    double diversity = 0.0;
    std::map<std::string, PerCriterionScore> per_criterion; // keyed by criterion_id
    // Reporting context, not scores:
    std::map<std::string, std::string> matched_gt; // criterion_id -> gt criterion name
    std::vector<std::string> uncovered_gt;         // gt criteria no prediction matched
    std::vector<std::string> skipped;              // matched but unevaluable (no labels)
    std::string matcher_mode;                      // "embedding" or "llm-judge"
    std::string notes;
};

struct GroundTruth {
    std::vector<std::string> criteria;                               // Y
    std::map<std::string, std::map<std::string, std::string>> labels; // criterion -> image -> label

    // Label map for a criterion name under names_equal, if any.
    const std::map<std::string, std::string>* labels_for(std::string_view criterion) const;
};

} // namespace facet
