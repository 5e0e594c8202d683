#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace facet::prompts {

struct Prompt {
    std::string system;
    std::string user;
};

// Appended to the user prompt on a re-prompt after a parse failure. The
// reminder changes the request payload, so a cached unparseable response is
// not replayed verbatim.
inline constexpr std::string_view kBulletListReminder =
    "Reminder: answer only with a list separated by bullet points \"*\".";
inline constexpr std::string_view kAnswerSpanReminder =
    "Reminder: respond only in the format \"*Answer*\".";
inline constexpr std::string_view kHierarchyReminder =
    "Reminder: output only the JSON object with keys \"level 1\", \"level 2\", and \"level 3\".";
inline constexpr std::string_view kTripleReminder =
    "Reminder: reply with exactly three category names separated by commas.";
inline constexpr std::string_view kCategorySpanReminder =
    "Reminder: respond with the classification result in the format \"*category name*\".";
inline constexpr std::string_view kQuestionReminder =
    "Reminder: the generated prompt must ask for an abstract, a common, and a specific "
    "category name, and must be wrapped as \"* Answer *\".";

std::string with_reminder(std::string_view user_prompt, std::string_view reminder);

// Vision prompt producing one detailed description per image.
Prompt generic_caption();

// Vision prompt over a stitched square grid, requesting `criteria_count`
// grouping criteria as bullets.
Prompt grid_proposal(std::size_t grid_side, std::size_t criteria_count);

// Chat prompt embedding one caption subset, requesting `criteria_count`
// criteria as bullets.
Prompt caption_proposal(const std::vector<std::string>& captions, std::size_t criteria_count);

// Chat prompt embedding per-image tag lists (comma-joined per image).
Prompt tag_proposal(const std::vector<std::vector<std::string>>& tags_per_image);

// Merge/rephrase pass over the raw criteria pool; bullets out.
Prompt pool_refinement(const std::vector<std::string>& criterion_names);

// Vision prompt for a caption focused on one criterion.
Prompt criterion_caption(std::string_view criterion);

// Labels one criterion-specific caption; answer as *Answer*, five words max.
Prompt initial_naming(std::string_view criterion, std::string_view caption);

// Refines initial names into a three-level taxonomy returned as JSON.
Prompt hierarchy_refinement(std::string_view criterion,
                            const std::vector<std::string>& initial_names);

// Single-granularity variant: merges initial names into one flat bullet list.
Prompt flat_refinement(std::string_view criterion, const std::vector<std::string>& initial_names);

// Classifies one caption into one of the listed candidates; *category name* out.
Prompt final_assignment(std::string_view criterion, std::string_view caption,
                        const std::vector<std::string>& candidates);

// Asks the chat model to write a VQA question eliciting abstract/common/
// specific names for the criterion.
Prompt vqa_question_generation(std::string_view criterion);

// Mid-granularity tag candidates for a criterion; bullets out.
Prompt mid_tag_generation(std::string_view criterion);

// Three broader super-categories of a mid tag, "&"-separated.
Prompt coarse_tag_expansion(std::string_view criterion, std::string_view mid_tag);

// Ten narrower sub-categories of a mid tag, "&"-separated.
Prompt fine_tag_expansion(std::string_view criterion, std::string_view mid_tag);

} // namespace facet::prompts
