#include "facet/grouper.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "facet/parallel.hpp"
#include "facet/parsing.hpp"
#include "facet/prompts.hpp"
#include "facet/similarity.hpp"

namespace facet {
namespace {

constexpr std::string_view kAiAssistant = "You are a helpful AI assistant";

void require_refined(const Criterion& criterion) {
    if (criterion.status != CriterionStatus::refined)
        throw ValidationError("criterion " + criterion.criterion_id +
                              " is raw; groupers take refined criteria");
    if (trim(criterion.name).empty())
        throw ValidationError("criterion " + criterion.criterion_id + " has an empty name");
}

std::string chat(const BackendSet& backends, const prompts::Prompt& prompt,
                 const GrouperOptions& options,
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

// normalized name -> lexicographically smallest spelling seen for it.
std::map<std::string, std::string> smallest_spelling(const std::vector<std::string>& names) {
    std::map<std::string, std::string> canon;
    for (const auto& name : names) {
        if (name.empty() || is_unassigned(name)) continue;
        auto key = normalize_name(name);
        auto it = canon.find(key);
        if (it == canon.end() || name < it->second) canon[key] = name;
    }
    return canon;
}

// Order-preserving case-insensitive dedupe; keeps the first spelling.
std::vector<std::string> dedupe_first(const std::vector<std::string>& names) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) continue;
        if (seen.insert(normalize_name(name)).second) out.push_back(name);
    }
    return out;
}

// Three-level taxonomy over the distinct initial names, retried with a
// varying reminder so each attempt reaches the backend.
CandidateHierarchy caption_taxonomy(const Criterion& criterion,
                                    const std::vector<std::string>& names,
                                    const BackendSet& backends, const GrouperOptions& options,
                                    std::vector<std::string>& warnings) {
    auto base = prompts::hierarchy_refinement(criterion.name, names);
    std::string last_error;
    for (int attempt = 0; attempt <= options.hierarchy_retries; ++attempt) {
        prompts::Prompt prompt = base;
        if (attempt > 0) {
            std::string reminder(prompts::kHierarchyReminder);
            reminder += " Attempt " + std::to_string(attempt + 1) + ".";
            prompt.user = prompts::with_reminder(base.user, reminder);
        }
        try {
            auto levels = parse_hierarchy_levels(chat(backends, prompt, options));
            CandidateHierarchy hierarchy;
            hierarchy.criterion_id = criterion.criterion_id;
            hierarchy.coarse = dedupe_first(levels.coarse);
            hierarchy.mid = dedupe_first(levels.mid);
            hierarchy.fine = dedupe_first(levels.fine);
            validate_hierarchy(hierarchy);
            if (attempt > 0)
                warnings.push_back("taxonomy accepted on attempt " + std::to_string(attempt + 1));
            return hierarchy;
        } catch (const ParseError& e) {
            last_error = e.what();
        } catch (const ValidationError& e) {
            last_error = e.what();
        }
    }
    throw StageError("taxonomy for criterion " + criterion.criterion_id + " unusable after " +
                     std::to_string(options.hierarchy_retries + 1) + " attempts: " + last_error);
}

// Single merged candidate list, same retry budget as the taxonomy.
std::vector<std::string> flat_candidates(const Criterion& criterion,
                                         const std::vector<std::string>& names,
                                         const BackendSet& backends,
                                         const GrouperOptions& options,
                                         std::vector<std::string>& warnings) {
    auto base = prompts::flat_refinement(criterion.name, names);
    std::string last_error;
    for (int attempt = 0; attempt <= options.hierarchy_retries; ++attempt) {
        prompts::Prompt prompt = base;
        if (attempt > 0) {
            std::string reminder(prompts::kBulletListReminder);
            reminder += " Attempt " + std::to_string(attempt + 1) + ".";
            prompt.user = prompts::with_reminder(base.user, reminder);
        }
        try {
            auto candidates = dedupe_first(parse_bulleted_list(chat(backends, prompt, options)));
            if (candidates.empty()) throw ParseError("no usable candidate names");
            if (attempt > 0)
                warnings.push_back("merged list accepted on attempt " + std::to_string(attempt + 1));
            return candidates;
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw StageError("merged list for criterion " + criterion.criterion_id + " unusable after " +
                     std::to_string(options.hierarchy_retries + 1) + " attempts: " + last_error);
}

// Classifies one caption into one of the candidates. Off-list answers snap to
// the nearest candidate above the floor; anything else lands on the sentinel.
std::string classify_caption(const BackendSet& backends, const GrouperOptions& options,
                             const Criterion& criterion, const std::string& image_id,
                             const std::string& caption,
                             const std::vector<std::string>& candidates,
                             std::vector<std::string>& warnings) {
    auto base = prompts::final_assignment(criterion.name, caption, candidates);
    std::string answer;
    try {
        try {
            answer = extract_answer_span(chat(backends, base, options));
        } catch (const ParseError&) {
            prompts::Prompt reminded{
                base.system,
                prompts::with_reminder(base.user, prompts::kCategorySpanReminder)};
            answer = extract_answer_span(chat(backends, reminded, options));
        }
    } catch (const ParseError& e) {
        warnings.push_back("assignment for " + image_id + " unparseable: " + e.what());
        return std::string(kUnassigned);
    } catch (const BackendError& e) {
        warnings.push_back("assignment for " + image_id + " failed: " + e.what());
        return std::string(kUnassigned);
    }
    answer = strip_decorations(answer);
    if (answer.empty()) {
        warnings.push_back("assignment for " + image_id + " empty");
        return std::string(kUnassigned);
    }
    for (const auto& candidate : candidates)
        if (names_equal(answer, candidate)) return candidate;
    try {
        auto best = nearest_name(*backends.embedder, answer, candidates);
        if (best && best->cosine >= options.snap_floor) {
            warnings.push_back("answer '" + answer + "' for " + image_id + " snapped to '" +
                               candidates[best->index] + "'");
            return candidates[best->index];
        }
    } catch (const BackendError& e) {
        warnings.push_back("snap lookup for " + image_id + " failed: " + e.what());
    }
    warnings.push_back("answer '" + answer + "' for " + image_id + " matched no candidate");
    return std::string(kUnassigned);
}

} // namespace

const char* group_mode_name(GroupMode mode) {
    switch (mode) {
    case GroupMode::multi: return "multi";
    case GroupMode::flat: return "flat";
    case GroupMode::initial: return "initial";
    }
    throw ValidationError("unknown group mode");
}

GroupMode group_mode_from_name(std::string_view name) {
    auto key = normalize_name(name);
    if (key == "multi") return GroupMode::multi;
    if (key == "flat") return GroupMode::flat;
    if (key == "initial") return GroupMode::initial;
    throw ConfigError("unknown group mode: " + std::string(name));
}

std::vector<std::string> InitialNameSet::distinct() const {
    std::vector<std::string> names;
    names.reserve(by_image.size());
    for (const auto& [image, name] : by_image) names.push_back(name);
    auto canon = smallest_spelling(names);
    std::vector<std::string> out;
    out.reserve(canon.size());
    for (const auto& [key, name] : canon) out.push_back(name);
    std::sort(out.begin(), out.end());
    return out;
}

GroupResult group_by_captions(const Collection& collection, const Criterion& criterion,
                              const BackendSet& backends, const GrouperOptions& options,
                              GroupMode mode) {
    require_refined(criterion);
    if (!backends.vision || !backends.chat)
        throw ConfigError("caption grouping requires vision and chat backends");
    if (mode != GroupMode::initial && !backends.embedder)
        throw ConfigError("caption grouping needs an embedding backend to snap answers");

    GroupResult result;
    result.initial.criterion_id = criterion.criterion_id;

    auto caption_prompt = prompts::criterion_caption(criterion.name);
    struct CaptionSlot {
        std::optional<CaptionRecord> record;
        std::optional<std::string> warning;
    };
    auto caption_slots = parallel_map(
        collection.records(), backends.workers, [&](const ImageRecord& record, std::size_t) {
            CaptionSlot slot;
            VisionRequest request;
            request.source = record.source;
            request.system_prompt = caption_prompt.system;
            request.prompt = caption_prompt.user;
            request.max_tokens = options.max_tokens;
            request.model_id = options.vision_model;
            try {
                CaptionRecord caption;
                caption.image_id = record.image_id;
                caption.text = backends.vision->caption(request);
                caption.kind = CaptionKind::criterion_specific;
                caption.criterion_id = criterion.criterion_id;
                slot.record = std::move(caption);
            } catch (const BackendError& e) {
                slot.warning = "caption for " + record.image_id + " failed: " + e.what();
            }
            return slot;
        });

    std::size_t caption_failures = 0;
    for (auto& slot : caption_slots) {
        if (slot.record) result.captions.push_back(std::move(*slot.record));
        if (slot.warning) {
            ++caption_failures;
            result.warnings.push_back(std::move(*slot.warning));
        }
    }
    if (static_cast<double>(caption_failures) >
        options.failure_threshold * static_cast<double>(collection.size()))
        throw StageError("captioning failed for " + std::to_string(caption_failures) + " of " +
                         std::to_string(collection.size()) + " images");

    for (const auto& record : collection.records())
        result.initial.by_image[record.image_id] = std::string(kUnassigned);

    struct NameSlot {
        std::string image_id;
        std::string name;
        std::optional<std::string> warning;
    };
    auto name_slots = parallel_map(
        result.captions, backends.workers, [&](const CaptionRecord& caption, std::size_t) {
            NameSlot slot{caption.image_id, std::string(kUnassigned), std::nullopt};
            auto base = prompts::initial_naming(criterion.name, caption.text);
            try {
                std::string answer;
                try {
                    answer = extract_answer_span(chat(backends, base, options));
                } catch (const ParseError&) {
                    prompts::Prompt reminded{
                        base.system,
                        prompts::with_reminder(base.user, prompts::kAnswerSpanReminder)};
                    answer = extract_answer_span(chat(backends, reminded, options));
                }
                std::string name = strip_decorations(answer);
                if (name.empty()) throw ParseError("empty name");
                if (word_count(name) > options.name_word_cap) {
                    slot.warning = "name for " + caption.image_id + " truncated: " + name;
                    name = truncate_words(name, options.name_word_cap);
                }
                slot.name = std::move(name);
            } catch (const ParseError& e) {
                slot.warning =
                    "initial name for " + caption.image_id + " unparseable: " + e.what();
            } catch (const BackendError& e) {
                slot.warning = "initial naming for " + caption.image_id + " failed: " + e.what();
            }
            return slot;
        });
    for (auto& slot : name_slots) {
        result.initial.by_image[slot.image_id] = std::move(slot.name);
        if (slot.warning) result.warnings.push_back(std::move(*slot.warning));
    }

    if (mode == GroupMode::initial) {
        std::vector<std::string> names;
        for (const auto& [image, name] : result.initial.by_image) names.push_back(name);
        auto canon = smallest_spelling(names);
        std::map<std::string, std::string> assignments;
        for (const auto& [image, name] : result.initial.by_image)
            assignments[image] = is_unassigned(name) ? std::string(kUnassigned)
                                                     : canon.at(normalize_name(name));
        result.substructures.push_back(
            make_substructure(criterion.criterion_id, Granularity::mid, std::move(assignments)));
        return result;
    }

    auto distinct = result.initial.distinct();
    if (distinct.empty())
        throw StageError("no usable initial names for criterion " + criterion.criterion_id);

    std::vector<std::pair<Granularity, std::vector<std::string>>> rounds;
    if (mode == GroupMode::multi) {
        auto hierarchy = caption_taxonomy(criterion, distinct, backends, options, result.warnings);
        for (auto granularity : kAllGranularities)
            rounds.emplace_back(granularity, hierarchy.level(granularity));
        result.hierarchy = std::move(hierarchy);
    } else {
        rounds.emplace_back(Granularity::mid,
                            flat_candidates(criterion, distinct, backends, options,
                                            result.warnings));
    }

    std::map<std::string, const std::string*> caption_of;
    for (const auto& caption : result.captions) caption_of[caption.image_id] = &caption.text;

    struct AssignSlot {
        std::string image_id;
        std::vector<std::string> names; // one per round
        std::vector<std::string> warnings;
    };
    auto assign_slots = parallel_map(
        collection.records(), backends.workers, [&](const ImageRecord& record, std::size_t) {
            AssignSlot slot;
            slot.image_id = record.image_id;
            auto found = caption_of.find(record.image_id);
            for (const auto& [granularity, candidates] : rounds) {
                if (found == caption_of.end())
                    slot.names.emplace_back(kUnassigned);
                else
                    slot.names.push_back(classify_caption(backends, options, criterion,
                                                          record.image_id, *found->second,
                                                          candidates, slot.warnings));
            }
            return slot;
        });

    for (std::size_t round = 0; round < rounds.size(); ++round) {
        std::map<std::string, std::string> assignments;
        for (const auto& slot : assign_slots) assignments[slot.image_id] = slot.names[round];
        result.substructures.push_back(make_substructure(
            criterion.criterion_id, rounds[round].first, std::move(assignments)));
    }
    for (auto& slot : assign_slots)
        for (auto& warning : slot.warnings) result.warnings.push_back(std::move(warning));
    return result;
}

VqaQuestion vqa_question_for_criterion(const Criterion& criterion, const BackendSet& backends,
                                       const GrouperOptions& options) {
    require_refined(criterion);
    auto base = prompts::vqa_question_generation(criterion.name);
    auto usable = [](const std::string& question) {
        auto key = normalize_name(question);
        return key.find("abstract") != std::string::npos &&
               key.find("common") != std::string::npos &&
               key.find("specific") != std::string::npos;
    };
    std::string last_error;
    try {
        auto question = strip_decorations(extract_answer_span(chat(backends, base, options)));
        if (usable(question)) return {criterion.criterion_id, question};
        last_error = "question does not ask for all three granularities";
    } catch (const ParseError& e) {
        last_error = e.what();
    }
    prompts::Prompt reminded{base.system,
                             prompts::with_reminder(base.user, prompts::kQuestionReminder)};
    try {
        auto question = strip_decorations(extract_answer_span(chat(backends, reminded, options)));
        if (usable(question)) return {criterion.criterion_id, question};
        last_error = "question does not ask for all three granularities";
    } catch (const ParseError& e) {
        last_error = e.what();
    }
    throw StageError("no usable question for criterion " + criterion.criterion_id + ": " +
                     last_error);
}

GroupResult group_by_vqa(const Collection& collection, const Criterion& criterion,
                         const BackendSet& backends, const GrouperOptions& options) {
    require_refined(criterion);
    if (!backends.vision || !backends.chat)
        throw ConfigError("vqa grouping requires chat and vision backends");
    auto question = vqa_question_for_criterion(criterion, backends, options);

    GroupResult result;
    result.initial.criterion_id = criterion.criterion_id;

    struct Slot {
        std::string image_id;
        std::array<std::string, 3> names;
        std::optional<std::string> warning;
        bool failed = false;
    };
    auto slots = parallel_map(
        collection.records(), backends.workers, [&](const ImageRecord& record, std::size_t) {
            Slot slot;
            slot.image_id = record.image_id;
            slot.names.fill(std::string(kUnassigned));
            VisionRequest request;
            request.source = record.source;
            request.system_prompt = std::string(kAiAssistant);
            request.prompt = question.question;
            request.max_tokens = options.max_tokens;
            request.model_id = options.vision_model;
            try {
                auto reply = backends.vision->caption(request);
                try {
                    auto triple = parse_triple(reply);
                    for (std::size_t i = 0; i < 3; ++i) slot.names[i] = triple[i];
                } catch (const ParseError& e) {
                    slot.warning = "answer for " + record.image_id + " unparseable: " + e.what();
                }
            } catch (const BackendError& e) {
                slot.failed = true;
                slot.warning = "vqa for " + record.image_id + " failed: " + e.what();
            }
            return slot;
        });

    std::size_t failures = 0;
    for (auto& slot : slots) {
        if (slot.failed) ++failures;
        if (slot.warning) result.warnings.push_back(std::move(*slot.warning));
    }
    if (static_cast<double>(failures) >
        options.failure_threshold * static_cast<double>(collection.size()))
        throw StageError("vqa failed for " + std::to_string(failures) + " of " +
                         std::to_string(collection.size()) + " images");

    for (std::size_t level = 0; level < 3; ++level) {
        std::vector<std::string> names;
        names.reserve(slots.size());
        for (const auto& slot : slots) names.push_back(slot.names[level]);
        auto canon = smallest_spelling(names);
        std::map<std::string, std::string> assignments;
        for (const auto& slot : slots) {
            const auto& name = slot.names[level];
            assignments[slot.image_id] = is_unassigned(name) ? std::string(kUnassigned)
                                                             : canon.at(normalize_name(name));
        }
        result.substructures.push_back(make_substructure(
            criterion.criterion_id, kAllGranularities[level], std::move(assignments)));
    }
    return result;
}

std::vector<std::string> TagHierarchy::coarse_candidates() const {
    std::vector<std::string> names;
    for (const auto& [tag, expansions] : super_of)
        names.insert(names.end(), expansions.begin(), expansions.end());
    auto canon = smallest_spelling(names);
    std::vector<std::string> out;
    out.reserve(canon.size());
    for (const auto& [key, name] : canon) out.push_back(name);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> TagHierarchy::fine_candidates() const {
    std::vector<std::string> names;
    for (const auto& [tag, expansions] : sub_of)
        names.insert(names.end(), expansions.begin(), expansions.end());
    auto canon = smallest_spelling(names);
    std::vector<std::string> out;
    out.reserve(canon.size());
    for (const auto& [key, name] : canon) out.push_back(name);
    std::sort(out.begin(), out.end());
    return out;
}

CandidateHierarchy TagHierarchy::as_candidates() const {
    CandidateHierarchy hierarchy;
    hierarchy.criterion_id = criterion_id;
    hierarchy.coarse = coarse_candidates();
    hierarchy.mid = mid;
    hierarchy.fine = fine_candidates();
    return hierarchy;
}

TagHierarchy build_tag_hierarchy(const Criterion& criterion, const BackendSet& backends,
                                 const GrouperOptions& options) {
    require_refined(criterion);
    if (!backends.chat) throw ConfigError("tag hierarchy requires a chat backend");
    if (options.mid_tag_queries == 0)
        throw ValidationError("mid_tag_queries must be positive");

    TagHierarchy hierarchy;
    hierarchy.criterion_id = criterion.criterion_id;

    auto base = prompts::mid_tag_generation(criterion.name);
    std::vector<std::uint64_t> seeds(options.mid_tag_queries);
    std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});

    struct MidSlot {
        std::vector<std::string> names;
        std::optional<std::string> warning;
    };
    auto mid_slots =
        parallel_map(seeds, backends.workers, [&](std::uint64_t seed, std::size_t) {
            MidSlot slot;
            try {
                try {
                    slot.names = parse_bulleted_list(chat(backends, base, options, seed));
                } catch (const ParseError&) {
                    prompts::Prompt reminded{
                        base.system,
                        prompts::with_reminder(base.user, prompts::kBulletListReminder)};
                    slot.names = parse_bulleted_list(chat(backends, reminded, options, seed));
                }
            } catch (const ParseError& e) {
                slot.warning = "mid tag query " + std::to_string(seed) +
                               " unparseable: " + e.what();
            } catch (const BackendError& e) {
                slot.warning = "mid tag query " + std::to_string(seed) + " failed: " + e.what();
            }
            return slot;
        });

    std::vector<std::string> pooled;
    std::size_t failed_queries = 0;
    for (auto& slot : mid_slots) {
        pooled.insert(pooled.end(), slot.names.begin(), slot.names.end());
        if (slot.warning) {
            ++failed_queries;
            hierarchy.warnings.push_back(std::move(*slot.warning));
        }
    }
    if (failed_queries == options.mid_tag_queries)
        throw StageError("every mid tag query failed for criterion " + criterion.criterion_id);
    auto canon = smallest_spelling(pooled);
    for (const auto& [key, name] : canon) hierarchy.mid.push_back(name);
    std::sort(hierarchy.mid.begin(), hierarchy.mid.end());
    if (hierarchy.mid.empty())
        throw StageError("mid tag queries produced no tags for criterion " +
                         criterion.criterion_id);

    struct ExpansionSlot {
        std::string tag;
        std::vector<std::string> coarse;
        std::vector<std::string> fine;
        std::vector<std::string> warnings;
    };
    auto expand = [&](const prompts::Prompt& prompt, std::size_t cap, const std::string& tag,
                      std::string_view direction,
                      std::vector<std::string>& warnings) -> std::vector<std::string> {
        try {
            auto fields = dedupe_first(split_ampersand(chat(backends, prompt, options)));
            if (fields.size() > cap) fields.resize(cap);
            if (fields.empty())
                warnings.push_back(std::string(direction) + " expansion of '" + tag +
                                   "' produced no names");
            return fields;
        } catch (const BackendError& e) {
            warnings.push_back(std::string(direction) + " expansion of '" + tag +
                               "' failed: " + e.what());
            return {};
        }
    };
    auto expansion_slots =
        parallel_map(hierarchy.mid, backends.workers, [&](const std::string& tag, std::size_t) {
            ExpansionSlot slot;
            slot.tag = tag;
            slot.coarse = expand(prompts::coarse_tag_expansion(criterion.name, tag),
                                 options.coarse_per_mid, tag, "coarse", slot.warnings);
            slot.fine = expand(prompts::fine_tag_expansion(criterion.name, tag),
                               options.fine_per_mid, tag, "fine", slot.warnings);
            return slot;
        });
    for (auto& slot : expansion_slots) {
        hierarchy.super_of[slot.tag] = std::move(slot.coarse);
        hierarchy.sub_of[slot.tag] = std::move(slot.fine);
        for (auto& warning : slot.warnings) hierarchy.warnings.push_back(std::move(warning));
    }
    return hierarchy;
}

GroupResult group_by_tags(const Collection& collection, const Criterion& criterion,
                          const TagHierarchy& hierarchy, const BackendSet& backends,
                          const GrouperOptions& options) {
    require_refined(criterion);
    if (!backends.tagger) throw ConfigError("tag grouping requires a tagger backend");
    if (hierarchy.criterion_id != criterion.criterion_id)
        throw ValidationError("tag hierarchy belongs to criterion " + hierarchy.criterion_id +
                              ", not " + criterion.criterion_id);

    std::array<std::vector<std::string>, 3> candidates = {
        hierarchy.coarse_candidates(), hierarchy.mid, hierarchy.fine_candidates()};
    if (candidates[0].empty() && candidates[1].empty() && candidates[2].empty())
        throw StageError("tag hierarchy has no candidates at any granularity");

    GroupResult result;
    result.initial.criterion_id = criterion.criterion_id;
    result.hierarchy = hierarchy.as_candidates();
    std::size_t attempted_levels = 0;
    for (std::size_t level = 0; level < 3; ++level) {
        if (candidates[level].empty())
            result.warnings.push_back(std::string("no candidates at ") +
                                      granularity_name(kAllGranularities[level]) +
                                      " granularity; images left unassigned");
        else
            ++attempted_levels;
    }

    struct Slot {
        std::string image_id;
        std::array<std::string, 3> names;
        std::array<bool, 3> tied{};
        std::vector<std::string> warnings;
        std::size_t failures = 0;
    };
    auto slots = parallel_map(
        collection.records(), backends.workers, [&](const ImageRecord& record, std::size_t) {
            Slot slot;
            slot.image_id = record.image_id;
            slot.names.fill(std::string(kUnassigned));
            for (std::size_t level = 0; level < 3; ++level) {
                const auto& names = candidates[level];
                if (names.empty()) continue;
                auto k = std::min<std::size_t>(2, names.size());
                try {
                    auto scored = backends.tagger->tag(record.source, names, k);
                    if (scored.tags.empty()) continue;
                    slot.names[level] = scored.tags.front().tag;
                    if (scored.tags.size() > 1 &&
                        scored.tags[0].score == scored.tags[1].score)
                        slot.tied[level] = true;
                } catch (const BackendError& e) {
                    ++slot.failures;
                    slot.warnings.push_back(
                        std::string(granularity_name(kAllGranularities[level])) +
                        " tagging for " + record.image_id + " failed: " + e.what());
                }
            }
            return slot;
        });

    std::size_t failures = 0;
    std::array<std::size_t, 3> ties{};
    for (auto& slot : slots) {
        failures += slot.failures;
        for (std::size_t level = 0; level < 3; ++level)
            if (slot.tied[level]) ++ties[level];
        for (auto& warning : slot.warnings) result.warnings.push_back(std::move(warning));
    }
    double attempted = static_cast<double>(attempted_levels * collection.size());
    if (static_cast<double>(failures) > options.failure_threshold * attempted)
        throw StageError("tagging failed for " + std::to_string(failures) + " of " +
                         std::to_string(static_cast<std::size_t>(attempted)) + " assignments");
    for (std::size_t level = 0; level < 3; ++level)
        if (ties[level] > 0)
            result.warnings.push_back(std::to_string(ties[level]) + " top-score ties at " +
                                      granularity_name(kAllGranularities[level]) +
                                      " granularity broke lexicographically");

    for (std::size_t level = 0; level < 3; ++level) {
        std::map<std::string, std::string> assignments;
        for (const auto& slot : slots) assignments[slot.image_id] = slot.names[level];
        result.substructures.push_back(make_substructure(
            criterion.criterion_id, kAllGranularities[level], std::move(assignments)));
    }
    return result;
}

} // namespace facet
