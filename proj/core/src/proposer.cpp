#include "facet/proposer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "facet/digest.hpp"
#include "facet/parallel.hpp"
#include "facet/parsing.hpp"
#include "facet/prompts.hpp"
#include "facet/similarity.hpp"

namespace facet {
namespace {

char id_digit(std::size_t value, int place) {
    for (int i = 0; i < place; ++i) value /= 10;
    return static_cast<char>('0' + value % 10);
}

std::string sequential_id(std::string_view prefix, std::size_t index) {
    std::string id(prefix);
    id += '-';
    for (int place = 3; place >= 0; --place) id += id_digit(index + 1, place);
    return id;
}

std::string chat(const BackendSet& backends, const prompts::Prompt& prompt,
                 const ProposerOptions& options,
                 std::optional<std::uint64_t> seed = std::nullopt) {
    if (!backends.chat) throw ConfigError("no chat backend configured");
    ChatRequest request;
    request.system_prompt = prompt.system;
    request.user_prompt = prompt.user;
    request.max_tokens = options.max_tokens;
    request.model_id = options.chat_model;
    request.seed = seed;
    return backends.chat->chat_complete(request);
}

// Parse a bulleted response, re-prompting once with a format reminder before
// giving up. Returns nullopt with a message when both attempts fail.
std::optional<std::vector<std::string>> bullets_or_message(
    const BackendSet& backends, const prompts::Prompt& prompt, const ProposerOptions& options,
    std::string& message) {
    try {
        return parse_bulleted_list(chat(backends, prompt, options));
    } catch (const ParseError&) {
    }
    prompts::Prompt reminded{prompt.system,
                             prompts::with_reminder(prompt.user, prompts::kBulletListReminder)};
    try {
        return parse_bulleted_list(chat(backends, reminded, options));
    } catch (const ParseError& e) {
        message = e.what();
        return std::nullopt;
    }
}

} // namespace

std::vector<Criterion> finalize_pool(const std::vector<std::string>& names,
                                     Provenance provenance, CriterionStatus status,
                                     std::string_view id_prefix) {
    // Representative spelling per normalized name: lexicographically smallest,
    // so the pool is independent of arrival order.
    std::map<std::string, std::string> spelling;
    for (const auto& raw : names) {
        std::string clean = trim(raw);
        if (clean.empty()) continue;
        auto key = normalize_name(clean);
        auto it = spelling.find(key);
        if (it == spelling.end() || clean < it->second) spelling[key] = clean;
    }
    std::vector<std::string> ordered;
    ordered.reserve(spelling.size());
    for (const auto& [key, name] : spelling) ordered.push_back(name);
    std::sort(ordered.begin(), ordered.end());

    std::vector<Criterion> pool;
    pool.reserve(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        Criterion criterion;
        criterion.criterion_id = sequential_id(id_prefix, i);
        criterion.name = ordered[i];
        criterion.provenance = provenance;
        criterion.status = status;
        pool.push_back(std::move(criterion));
    }
    return pool;
}

CaptionOutcome generate_generic_captions(const Collection& collection,
                                         const BackendSet& backends,
                                         const ProposerOptions& options) {
    if (!backends.vision) throw ConfigError("no vision backend configured");
    auto prompt = prompts::generic_caption();

    struct Slot {
        std::optional<CaptionRecord> record;
        std::optional<ItemFailure> failure;
    };
    auto slots = parallel_map(
        collection.records(), backends.workers, [&](const ImageRecord& record, std::size_t) {
            Slot slot;
            VisionRequest request;
            request.source = record.source;
            request.system_prompt = prompt.system;
            request.prompt = prompt.user;
            request.max_tokens = options.max_tokens;
            request.model_id = options.vision_model;
            try {
                CaptionRecord caption;
                caption.image_id = record.image_id;
                caption.text = backends.vision->caption(request);
                caption.kind = CaptionKind::generic;
                slot.record = std::move(caption);
            } catch (const BackendError& e) {
                slot.failure = ItemFailure{record.image_id, e.what()};
            }
            return slot;
        });

    CaptionOutcome outcome;
    for (auto& slot : slots) {
        if (slot.record) outcome.captions.push_back(std::move(*slot.record));
        if (slot.failure) outcome.failures.push_back(std::move(*slot.failure));
    }
    double failed = static_cast<double>(outcome.failures.size());
    if (failed > options.failure_threshold * static_cast<double>(collection.size()))
        throw StageError("captioning failed for " + std::to_string(outcome.failures.size()) +
                         " of " + std::to_string(collection.size()) + " images");
    return outcome;
}

ProposerRun propose_from_captions(const std::vector<CaptionRecord>& captions,
                                  const BackendSet& backends, const ProposerOptions& options) {
    if (captions.empty()) throw ValidationError("no captions to propose from");
    if (options.subset_size == 0) throw ValidationError("subset_size must be positive");

    auto shuffled = captions;
    deterministic_shuffle(shuffled, options.shuffle_seed);

    std::vector<std::vector<CaptionRecord>> subsets;
    for (std::size_t start = 0; start < shuffled.size(); start += options.subset_size) {
        auto end = std::min(start + options.subset_size, shuffled.size());
        subsets.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                             shuffled.begin() + static_cast<std::ptrdiff_t>(end));
    }

    ProposerRun run;
    run.kind = "caption";
    run.shuffle_seed = options.shuffle_seed;
    run.subset_size = options.subset_size;
    for (const auto& subset : subsets) {
        std::vector<std::string> members;
        members.reserve(subset.size());
        for (const auto& record : subset) members.push_back(record.image_id);
        run.subsets.push_back(std::move(members));
    }

    struct SubsetResult {
        std::vector<std::string> names;
        std::optional<std::string> warning;
    };
    auto results = parallel_map(
        subsets, backends.workers, [&](const std::vector<CaptionRecord>& subset, std::size_t i) {
            std::vector<std::string> texts;
            texts.reserve(subset.size());
            for (const auto& record : subset) texts.push_back(record.text);
            auto prompt = prompts::caption_proposal(texts, options.criteria_per_subset);
            SubsetResult result;
            std::string message;
            if (auto names = bullets_or_message(backends, prompt, options, message))
                result.names = std::move(*names);
            else
                result.warning = "subset " + std::to_string(i + 1) + " skipped: " + message;
            return result;
        });

    std::vector<std::string> names;
    for (auto& result : results) {
        names.insert(names.end(), result.names.begin(), result.names.end());
        if (result.warning) run.warnings.push_back(std::move(*result.warning));
    }
    run.raw_criteria =
        finalize_pool(names, Provenance::caption_proposer, CriterionStatus::raw, "raw");
    return run;
}

ProposerRun propose_from_tags(const std::vector<TagRecord>& tag_records,
                              const BackendSet& backends, const ProposerOptions& options) {
    if (tag_records.empty()) throw ValidationError("no tag records to propose from");

    // Greedy split keeping each rendered prompt under the token budget.
    std::size_t scaffold = estimate_tokens(prompts::tag_proposal({}).user);
    std::vector<std::vector<const TagRecord*>> subsets(1);
    std::size_t line_tokens = 0;
    for (const auto& record : tag_records) {
        std::string joined;
        for (const auto& tag : record.tags) {
            if (!joined.empty()) joined += ", ";
            joined += tag.tag;
        }
        std::size_t line = estimate_tokens("Image 0000: \"" + joined + "\"\n");
        if (!subsets.back().empty() && scaffold + line_tokens + line > options.token_budget) {
            subsets.emplace_back();
            line_tokens = 0;
        }
        subsets.back().push_back(&record);
        line_tokens += line;
    }

    ProposerRun run;
    run.kind = "tag";
    run.shuffle_seed = options.shuffle_seed;
    run.subset_size = 0; // sized by token budget, not by count
    for (const auto& subset : subsets) {
        std::vector<std::string> members;
        members.reserve(subset.size());
        for (const auto* record : subset) members.push_back(record->image_id);
        run.subsets.push_back(std::move(members));
    }

    struct SubsetResult {
        std::vector<std::string> names;
        std::optional<std::string> warning;
    };
    auto results = parallel_map(
        subsets, backends.workers,
        [&](const std::vector<const TagRecord*>& subset, std::size_t i) {
            std::vector<std::vector<std::string>> tags_per_image;
            tags_per_image.reserve(subset.size());
            for (const auto* record : subset) {
                std::vector<std::string> tags;
                tags.reserve(record->tags.size());
                for (const auto& tag : record->tags) tags.push_back(tag.tag);
                tags_per_image.push_back(std::move(tags));
            }
            auto prompt = prompts::tag_proposal(tags_per_image);
            SubsetResult result;
            std::string message;
            if (auto names = bullets_or_message(backends, prompt, options, message))
                result.names = std::move(*names);
            else
                result.warning = "subset " + std::to_string(i + 1) + " skipped: " + message;
            return result;
        });

    std::vector<std::string> names;
    for (auto& result : results) {
        names.insert(names.end(), result.names.begin(), result.names.end());
        if (result.warning) run.warnings.push_back(std::move(*result.warning));
    }
    run.raw_criteria = finalize_pool(names, Provenance::tag_proposer, CriterionStatus::raw, "raw");
    return run;
}

ProposerRun propose_from_image_grids(const Collection& collection, GridComposer& composer,
                                     const std::filesystem::path& grid_dir,
                                     const BackendSet& backends, const ProposerOptions& options) {
    if (!backends.vision) throw ConfigError("no vision backend configured");
    if (options.grid_side == 0) throw ValidationError("grid_side must be positive");

    std::vector<const ImageRecord*> shuffled;
    shuffled.reserve(collection.size());
    for (const auto& record : collection.records()) shuffled.push_back(&record);
    deterministic_shuffle(shuffled, options.shuffle_seed);

    std::size_t per_grid = options.grid_side * options.grid_side;
    std::vector<std::vector<const ImageRecord*>> grids;
    for (std::size_t start = 0; start < shuffled.size(); start += per_grid) {
        auto end = std::min(start + per_grid, shuffled.size());
        grids.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                           shuffled.begin() + static_cast<std::ptrdiff_t>(end));
    }

    ProposerRun run;
    run.kind = "image_grid";
    run.shuffle_seed = options.shuffle_seed;
    run.subset_size = per_grid;
    for (const auto& grid : grids) {
        std::vector<std::string> members;
        members.reserve(grid.size());
        for (const auto* record : grid) members.push_back(record->image_id);
        run.subsets.push_back(std::move(members));
    }

    auto prompt = prompts::grid_proposal(options.grid_side, options.criteria_per_grid);

    struct GridResult {
        std::vector<std::string> names;
        std::optional<std::string> warning;
    };
    auto results = parallel_map(
        grids, backends.workers,
        [&](const std::vector<const ImageRecord*>& grid, std::size_t i) {
            std::vector<std::string> sources;
            sources.reserve(grid.size());
            for (const auto* record : grid) sources.push_back(record->source);
            auto locator =
                composer.compose(sources, options.grid_side, grid_dir / sequential_id("grid", i));

            auto ask = [&](const std::string& text) {
                VisionRequest request;
                request.source = locator;
                request.system_prompt = prompt.system;
                request.prompt = text;
                request.max_tokens = options.max_tokens;
                request.model_id = options.vision_model;
                return backends.vision->caption(request);
            };
            GridResult result;
            try {
                result.names = parse_bulleted_list(ask(prompt.user));
                return result;
            } catch (const ParseError&) {
            }
            try {
                result.names = parse_bulleted_list(
                    ask(prompts::with_reminder(prompt.user, prompts::kBulletListReminder)));
            } catch (const ParseError& e) {
                result.warning = "grid " + std::to_string(i + 1) + " skipped: " + e.what();
            }
            return result;
        });

    std::vector<std::string> names;
    for (auto& result : results) {
        names.insert(names.end(), result.names.begin(), result.names.end());
        if (result.warning) run.warnings.push_back(std::move(*result.warning));
    }
    run.raw_criteria =
        finalize_pool(names, Provenance::image_proposer, CriterionStatus::raw, "raw");
    return run;
}

RefinementResult refine_criteria_pool(const std::vector<Criterion>& raw_pool,
                                      const BackendSet& backends,
                                      const ProposerOptions& options) {
    if (raw_pool.empty()) throw ValidationError("criteria pool is empty");
    if (!backends.embedder) throw ConfigError("refinement requires an embedding backend");

    std::vector<std::string> raw_names;
    raw_names.reserve(raw_pool.size());
    for (const auto& criterion : raw_pool) raw_names.push_back(criterion.name);

    RefinementResult result;
    auto pass_through = [&](const std::string& warning) {
        result.unrefined = true;
        result.warnings.push_back(warning);
        result.refined = finalize_pool(raw_names, Provenance::user_supplied,
                                       CriterionStatus::refined, "crit");
        for (auto& refined : result.refined) {
            for (const auto& raw : raw_pool) {
                if (names_equal(raw.name, refined.name)) {
                    refined.merged_from.push_back(raw.criterion_id);
                    refined.provenance = raw.provenance;
                }
            }
            std::sort(refined.merged_from.begin(), refined.merged_from.end());
        }
        return result;
    };

    auto prompt = prompts::pool_refinement(raw_names);
    std::string message;
    auto parsed = bullets_or_message(backends, prompt, options, message);
    if (!parsed) return pass_through("refinement response unparseable: " + message);

    result.refined =
        finalize_pool(*parsed, Provenance::user_supplied, CriterionStatus::refined, "crit");
    if (result.refined.empty()) return pass_through("refinement produced no usable names");

    // Lineage by nearest refined-name embedding; below the floor -> discarded.
    std::vector<std::string> texts = raw_names;
    for (const auto& refined : result.refined) texts.push_back(refined.name);
    auto vectors = backends.embedder->embed(texts);
    std::vector<std::vector<double>> refined_vectors(
        vectors.begin() + static_cast<std::ptrdiff_t>(raw_names.size()), vectors.end());

    for (std::size_t i = 0; i < raw_pool.size(); ++i) {
        auto best = nearest_vector(vectors[i], refined_vectors);
        if (best && best->cosine >= options.lineage_floor)
            result.refined[best->index].merged_from.push_back(raw_pool[i].criterion_id);
        else
            result.discarded.push_back(raw_pool[i].criterion_id);
    }
    for (auto& refined : result.refined) {
        std::sort(refined.merged_from.begin(), refined.merged_from.end());
        if (refined.merged_from.empty()) {
            result.warnings.push_back("refined criterion '" + refined.name +
                                      "' has no raw contributor");
            continue;
        }
        for (const auto& raw : raw_pool) {
            if (raw.criterion_id == refined.merged_from.front()) {
                refined.provenance = raw.provenance;
                break;
            }
        }
    }
    return result;
}

} // namespace facet
