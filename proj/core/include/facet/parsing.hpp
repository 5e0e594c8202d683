#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace facet {

// Drops surrounding quote/emphasis pairs and trailing [.,;:!], repeatedly,
// until stable. The cleanup applied to every parsed fragment.
std::string strip_decorations(std::string_view text);

// Lines starting with "*", "-", or "N." (after trim) become items, in order,
// decorations stripped, empties dropped. Zero items -> ParseError.
std::vector<std::string> parse_bulleted_list(std::string_view text);

// Content of the first non-empty *...* span (so **Bold** reads as "Bold").
// No span -> ParseError.
std::string extract_answer_span(std::string_view text);

// First balanced {...} region, string- and escape-aware. None -> ParseError.
std::string extract_json_object(std::string_view text);

struct HierarchyLevels {
    std::vector<std::string> coarse;
    std::vector<std::string> mid;
    std::vector<std::string> fine;
};

// Parses the embedded JSON object whose keys "level 1".."level 3"
// (case-insensitive) map to flat name lists.
HierarchyLevels parse_hierarchy_levels(std::string_view text);

// Exactly three fields split on comma, semicolon, or newline. Other
// arities -> ParseError.
std::array<std::string, 3> parse_triple(std::string_view text);

// "&"-separated fields, decorations stripped, empties dropped.
std::vector<std::string> split_ampersand(std::string_view text);

// First max_words whitespace-delimited words, single-space joined.
std::string truncate_words(std::string_view text, std::size_t max_words);
std::size_t word_count(std::string_view text);

// Rough chat-token estimate (bytes / 4, rounded up); used for prompt budgeting.
std::size_t estimate_tokens(std::string_view text);

// Replaces every occurrence of `placeholder` in `tmpl`; at least one
// occurrence is required.
std::string interpolate(std::string_view tmpl, std::string_view placeholder,
                        std::string_view value);

} // namespace facet
