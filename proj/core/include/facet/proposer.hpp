#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facet/backend.hpp"
#include "facet/grid.hpp"
#include "facet/types.hpp"

namespace facet {

struct ProposerOptions {
    std::size_t subset_size = 400;        // captions per proposal subset
    std::size_t criteria_per_subset = 10; // requested per caption subset
    std::size_t grid_side = 8;
    std::size_t criteria_per_grid = 5;
    std::size_t token_budget = 115000;    // tag prompt split threshold (estimated)
    std::uint64_t shuffle_seed = 0;
    double failure_threshold = 0.05;      // tolerated captioning failure fraction
    double lineage_floor = 0.5;           // raw->refined nearest-embedding floor
    int max_tokens = 2048;
    std::string chat_model;
    std::string vision_model;
};

struct ItemFailure {
    std::string item_id;
    std::string message;
};

struct CaptionOutcome {
    std::vector<CaptionRecord> captions; // successes, collection order
    std::vector<ItemFailure> failures;
};

// One generic caption per image. Per-image backend failures are collected;
// the stage fails only when the failure fraction exceeds the threshold.
CaptionOutcome generate_generic_captions(const Collection& collection,
                                         const BackendSet& backends,
                                         const ProposerOptions& options);

struct ProposerRun {
    std::string kind; // "caption" | "tag" | "image_grid"
    std::uint64_t shuffle_seed = 0;
    std::size_t subset_size = 0;
    std::vector<std::vector<std::string>> subsets; // member image_ids, in subset order
    std::vector<Criterion> raw_criteria;           // deduplicated, name-sorted, ids raw-NNNN
    std::vector<std::string> warnings;
};

// Shuffles captions, splits into subsets of subset_size, asks for criteria
// per subset, accumulates the deduplicated union. A subset whose response
// stays unparseable after one re-prompt is skipped with a warning.
ProposerRun propose_from_captions(const std::vector<CaptionRecord>& captions,
                                  const BackendSet& backends, const ProposerOptions& options);

// All per-image tag lists in one prompt, split into subsets only when the
// rendered prompt would exceed the token budget.
ProposerRun propose_from_tags(const std::vector<TagRecord>& tag_records,
                              const BackendSet& backends, const ProposerOptions& options);

// Shuffles the collection, composes square grids (short tail padded blank),
// asks the vision backend for criteria per grid.
ProposerRun propose_from_image_grids(const Collection& collection, GridComposer& composer,
                                     const std::filesystem::path& grid_dir,
                                     const BackendSet& backends, const ProposerOptions& options);

struct RefinementResult {
    std::vector<Criterion> refined;        // status refined, ids crit-NNNN, name-sorted
    std::vector<std::string> discarded;    // raw ids with no refined match at the floor
    bool unrefined = false;                // response unparseable; pool passed through
    std::vector<std::string> warnings;
};

// Asks the model to merge and rephrase the raw pool, then recovers lineage by
// nearest raw->refined embedding: every raw criterion lands in exactly one
// merged_from list or in `discarded`.
RefinementResult refine_criteria_pool(const std::vector<Criterion>& raw_pool,
                                      const BackendSet& backends,
                                      const ProposerOptions& options);

// Dedupes names case-insensitively (keeping the lexicographically smallest
// spelling), sorts, and assigns sequential ids under the prefix. The one
// canonical ordering shared by every proposer path.
std::vector<Criterion> finalize_pool(const std::vector<std::string>& names,
                                     Provenance provenance, CriterionStatus status,
                                     std::string_view id_prefix);

} // namespace facet
