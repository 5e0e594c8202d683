#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facet/backend.hpp"
#include "facet/types.hpp"

namespace facet {

struct GrouperOptions {
    std::size_t name_word_cap = 5; // initial names longer than this are truncated
    int hierarchy_retries = 2;     // taxonomy re-prompts before giving up
    double snap_floor = 0.5;       // off-list answer -> nearest candidate floor
    std::size_t mid_tag_queries = 10;
    std::size_t coarse_per_mid = 3;
    std::size_t fine_per_mid = 10;
    double failure_threshold = 0.05; // tolerated per-image backend failure fraction
    int max_tokens = 1024;
    std::string chat_model;
    std::string vision_model;
};

// multi: full three-granularity taxonomy. flat: one merged list, assigned at
// mid. initial: per-image names used directly as mid clusters, no refinement.
enum class GroupMode { multi, flat, initial };

const char* group_mode_name(GroupMode mode);
GroupMode group_mode_from_name(std::string_view name);

struct InitialNameSet {
    std::string criterion_id;
    std::map<std::string, std::string> by_image; // image_id -> name or sentinel

    // Distinct non-sentinel names, case-insensitively deduplicated to the
    // lexicographically smallest spelling, sorted.
    std::vector<std::string> distinct() const;
};

struct GroupResult {
    std::vector<Substructure> substructures; // one per granularity, or mid only
    std::vector<CaptionRecord> captions;     // criterion-specific captions, when used
    InitialNameSet initial;                  // per-image names, when produced
    std::optional<CandidateHierarchy> hierarchy;
    std::vector<std::string> warnings;
};

// Caption grouper: criterion-specific captions -> per-image initial names ->
// (multi) three-level taxonomy or (flat) merged list -> per-level caption
// classification. Per-image failures become sentinel assignments; captioning
// failures beyond the threshold abort the stage.
GroupResult group_by_captions(const Collection& collection, const Criterion& criterion,
                              const BackendSet& backends, const GrouperOptions& options,
                              GroupMode mode = GroupMode::multi);

struct VqaQuestion {
    std::string criterion_id;
    std::string question;
};

// One question per criterion eliciting an abstract, a common, and a specific
// category name. Unusable after one re-prompt -> StageError.
VqaQuestion vqa_question_for_criterion(const Criterion& criterion, const BackendSet& backends,
                                       const GrouperOptions& options);

// VQA grouper: asks the question against every image and splits the triple
// answer across granularities. Unparseable answers become sentinels.
GroupResult group_by_vqa(const Collection& collection, const Criterion& criterion,
                         const BackendSet& backends, const GrouperOptions& options);

struct TagHierarchy {
    std::string criterion_id;
    std::vector<std::string> mid; // deduplicated union over repeat queries, sorted
    std::map<std::string, std::vector<std::string>> super_of; // mid -> coarse expansions
    std::map<std::string, std::vector<std::string>> sub_of;   // mid -> fine expansions
    std::vector<std::string> warnings;

    std::vector<std::string> coarse_candidates() const;
    std::vector<std::string> fine_candidates() const;
    CandidateHierarchy as_candidates() const;
};

// Tag vocabulary for one criterion: repeated mid-level queries (distinct
// seeds) unioned, then each mid tag expanded up and down. Individual query
// failures are warnings; losing every mid query aborts the stage.
TagHierarchy build_tag_hierarchy(const Criterion& criterion, const BackendSet& backends,
                                 const GrouperOptions& options);

// Tag grouper: scores each granularity's candidate list against every image
// and assigns the top tag. Score ties break lexicographically and are flagged.
GroupResult group_by_tags(const Collection& collection, const Criterion& criterion,
                          const TagHierarchy& hierarchy, const BackendSet& backends,
                          const GrouperOptions& options);

} // namespace facet
