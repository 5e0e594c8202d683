#include <doctest.h>

#include "facet/parsing.hpp"
#include "facet/errors.hpp"

using namespace facet;

TEST_CASE("strip_decorations peels quotes, emphasis, and trailing punctuation") {
    CHECK(strip_decorations("\"Cooking\"") == "Cooking");
    CHECK(strip_decorations("**Bold**") == "Bold");
    CHECK(strip_decorations("*Answer*") == "Answer");
    CHECK(strip_decorations("'single'") == "single");
    CHECK(strip_decorations("Cooking.") == "Cooking");
    CHECK(strip_decorations("\"*Nested*\",") == "Nested");
    CHECK(strip_decorations("  padded  ") == "padded");
    CHECK(strip_decorations("q&a") == "q&a"); // interior punctuation untouched
    CHECK(strip_decorations("") == "");
}

TEST_CASE("parse_bulleted_list accepts stars, dashes, and numbers") {
    auto items = parse_bulleted_list("Here you go:\n* Alpha\n- \"Beta\"\n2. Gamma.\nprose line");
    CHECK(items == std::vector<std::string>{"Alpha", "Beta", "Gamma"});
    CHECK(parse_bulleted_list("* solo") == std::vector<std::string>{"solo"});
    CHECK(parse_bulleted_list("  * indented") == std::vector<std::string>{"indented"});
    CHECK_THROWS_AS(parse_bulleted_list("no bullets here"), ParseError);
    CHECK_THROWS_AS(parse_bulleted_list(""), ParseError);
    CHECK_THROWS_AS(parse_bulleted_list("* \n* \"\""), ParseError); // empties dropped
}

TEST_CASE("extract_answer_span reads the first non-empty star span") {
    CHECK(extract_answer_span("The answer is *Cooking* indeed") == "Cooking");
    CHECK(extract_answer_span("**Bold Answer**") == "Bold Answer");
    CHECK(extract_answer_span("** **Real**") == "Real");
    CHECK_THROWS_AS(extract_answer_span("no span"), ParseError);
    CHECK_THROWS_AS(extract_answer_span("unclosed *span"), ParseError);
}

TEST_CASE("extract_json_object finds the first balanced region") {
    CHECK(extract_json_object("prefix {\"a\": {\"b\": 1}} suffix") == "{\"a\": {\"b\": 1}}");
    CHECK(extract_json_object(R"({"s": "braces } inside"})") == R"({"s": "braces } inside"})");
    CHECK(extract_json_object(R"({"e": "esc \" quote"})") == R"({"e": "esc \" quote"})");
    CHECK_THROWS_AS(extract_json_object("no object"), ParseError);
    CHECK_THROWS_AS(extract_json_object("{\"open\": 1"), ParseError);
}

TEST_CASE("parse_hierarchy_levels reads level keys case-insensitively") {
    auto levels = parse_hierarchy_levels(
        R"(Sure! {"Level 1": ["A"], "level 2": ["B", "C"], "level3": ["D"]})");
    CHECK(levels.coarse == std::vector<std::string>{"A"});
    CHECK(levels.mid == std::vector<std::string>{"B", "C"});
    CHECK(levels.fine == std::vector<std::string>{"D"});
    CHECK_THROWS_AS(parse_hierarchy_levels(R"({"level 1": ["A"], "level 2": ["B"]})"),
                    ParseError);
    CHECK_THROWS_AS(parse_hierarchy_levels(R"({"level 1": "A", "level 2": ["B"],
                                              "level 3": ["C"]})"),
                    ParseError);
}

TEST_CASE("parse_triple needs exactly three fields") {
    auto t = parse_triple("Animal, Dog, Golden Retriever");
    CHECK(t[0] == "Animal");
    CHECK(t[1] == "Dog");
    CHECK(t[2] == "Golden Retriever");
    auto newline = parse_triple("A\nB\nC");
    CHECK(newline[2] == "C");
    auto semi = parse_triple("A; B; C");
    CHECK(semi[1] == "B");
    CHECK_THROWS_AS(parse_triple("A, B"), ParseError);
    CHECK_THROWS_AS(parse_triple("A, B, C, D"), ParseError);
    CHECK_THROWS_AS(parse_triple(""), ParseError);
}

TEST_CASE("split_ampersand strips decorations and drops empties") {
    CHECK(split_ampersand("\"A\" & B & & *C*") == std::vector<std::string>{"A", "B", "C"});
    CHECK(split_ampersand("solo") == std::vector<std::string>{"solo"});
    CHECK(split_ampersand("&&") == std::vector<std::string>{});
}

TEST_CASE("word helpers") {
    CHECK(word_count("one two  three") == 3);
    CHECK(word_count("") == 0);
    CHECK(truncate_words("a b c d", 2) == "a b");
    CHECK(truncate_words("a b", 5) == "a b");
    CHECK(truncate_words("  spaced   out  ", 2) == "spaced out");
}

TEST_CASE("token estimate rounds up") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("interpolate replaces every occurrence and requires one") {
    CHECK(interpolate("a {x} b {x}", "{x}", "1") == "a 1 b 1");
    CHECK_THROWS_AS(interpolate("nothing", "{x}", "1"), ValidationError);
}
