#include "facet/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "facet/errors.hpp"
#include "facet/types.hpp"

namespace facet {
namespace {

bool is_trailing_punct(char ch) {
    return ch == '.' || ch == ',' || ch == ';' || ch == ':' || ch == '!';
}

bool strip_surrounding_pair(std::string& text) {
    if (text.size() < 2) return false;
    char first = text.front();
    char last = text.back();
    bool paired = (first == '"' && last == '"') || (first == '\'' && last == '\'') ||
                  (first == '*' && last == '*') || (first == '_' && last == '_') ||
                  (first == '`' && last == '`');
    if (!paired) return false;
    text = text.substr(1, text.size() - 2);
    return true;
}

// "12." or "7)" prefixes; returns the rest or nullopt.
std::optional<std::string_view> strip_numbered_marker(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size()) return std::nullopt;
    if (line[i] != '.' && line[i] != ')') return std::nullopt;
    return line.substr(i + 1);
}

} // namespace

std::string strip_decorations(std::string_view text) {
    std::string out = trim(text);
    for (;;) {
        bool changed = false;
        while (!out.empty() && is_trailing_punct(out.back())) {
            out.pop_back();
            changed = true;
        }
        std::string trimmed = trim(out);
        if (trimmed.size() != out.size()) {
            out = std::move(trimmed);
            changed = true;
        }
        if (strip_surrounding_pair(out)) changed = true;
        if (!changed) return out;
    }
}

std::vector<std::string> parse_bulleted_list(std::string_view text) {
    std::vector<std::string> items;
    std::istringstream lines{std::string(text)};
    std::string raw;
    while (std::getline(lines, raw)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::string_view rest;
        if (line.front() == '*' || line.front() == '-') {
            rest = std::string_view(line).substr(1);
        } else if (auto numbered = strip_numbered_marker(line)) {
            rest = *numbered;
        } else {
            continue;
        }
        std::string item = strip_decorations(rest);
        if (!item.empty()) items.push_back(std::move(item));
    }
    if (items.empty()) throw ParseError("no bulleted items found");
    return items;
}

std::string extract_answer_span(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t open = text.find('*', i);
        if (open == std::string_view::npos) break;
        std::size_t close = text.find('*', open + 1);
        if (close == std::string_view::npos) break;
        std::string inner = trim(text.substr(open + 1, close - open - 1));
        if (!inner.empty()) return strip_decorations(inner);
        i = open + 1;
    }
    throw ParseError("no *answer* span found");
}

std::string extract_json_object(std::string_view text) {
    std::size_t start = text.find('{');
    if (start == std::string_view::npos) throw ParseError("no JSON object found");
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char ch = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (ch == '\\')
                escaped = true;
            else if (ch == '"')
                in_string = false;
            continue;
        }
        if (ch == '"') {
            in_string = true;
        } else if (ch == '{') {
            ++depth;
        } else if (ch == '}') {
            if (--depth == 0) return std::string(text.substr(start, i - start + 1));
        }
    }
    throw ParseError("unbalanced JSON object");
}

HierarchyLevels parse_hierarchy_levels(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(extract_json_object(text));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid hierarchy JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("hierarchy response is not an object");
    const nlohmann::json* levels[3] = {nullptr, nullptr, nullptr};
    for (const auto& [key, value] : doc.items()) {
        std::string k = normalize_name(key);
        for (int n = 1; n <= 3; ++n)
            if (k == "level " + std::to_string(n) || k == "level" + std::to_string(n))
                levels[n - 1] = &value;
    }
    HierarchyLevels out;
    std::vector<std::string>* slots[3] = {&out.coarse, &out.mid, &out.fine};
    for (int n = 0; n < 3; ++n) {
        if (!levels[n] || !levels[n]->is_array())
            throw ParseError("hierarchy missing list for level " + std::to_string(n + 1));
        for (const auto& item : *levels[n]) {
            if (!item.is_string()) throw ParseError("hierarchy level entries must be strings");
            std::string name = strip_decorations(item.get<std::string>());
            if (!name.empty()) slots[n]->push_back(std::move(name));
        }
        if (slots[n]->empty())
            throw ParseError("hierarchy level " + std::to_string(n + 1) + " is empty");
    }
    return out;
}

std::array<std::string, 3> parse_triple(std::string_view text) {
    std::vector<std::string> fields;
    std::string current;
    auto flush = [&] {
        std::string item = strip_decorations(current);
        if (!item.empty()) fields.push_back(std::move(item));
        current.clear();
    };
    for (char ch : text) {
        if (ch == ',' || ch == ';' || ch == '\n')
            flush();
        else
            current.push_back(ch);
    }
    flush();
    if (fields.size() != 3)
        throw ParseError("expected three fields, got " + std::to_string(fields.size()));
    return {fields[0], fields[1], fields[2]};
}

std::vector<std::string> split_ampersand(std::string_view text) {
    std::vector<std::string> fields;
    std::string current;
    auto flush = [&] {
        std::string item = strip_decorations(current);
        if (!item.empty()) fields.push_back(std::move(item));
        current.clear();
    };
    for (char ch : text) {
        if (ch == '&')
            flush();
        else
            current.push_back(ch);
    }
    flush();
    return fields;
}

std::size_t word_count(std::string_view text) {
    std::istringstream words{std::string(text)};
    std::string word;
    std::size_t count = 0;
    while (words >> word) ++count;
    return count;
}

std::string truncate_words(std::string_view text, std::size_t max_words) {
    std::istringstream words{std::string(text)};
    std::string word, out;
    std::size_t count = 0;
    while (count < max_words && words >> word) {
        if (!out.empty()) out.push_back(' ');
        out += word;
        ++count;
    }
    return out;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string interpolate(std::string_view tmpl, std::string_view placeholder,
                        std::string_view value) {
    if (placeholder.empty()) throw ValidationError("empty placeholder");
    std::string out;
    std::size_t pos = 0;
    std::size_t hits = 0;
    for (;;) {
        std::size_t found = tmpl.find(placeholder, pos);
        if (found == std::string_view::npos) break;
        out.append(tmpl.substr(pos, found - pos));
        out.append(value);
        pos = found + placeholder.size();
        ++hits;
    }
    if (hits == 0)
        throw ValidationError("placeholder " + std::string(placeholder) + " not found in template");
    out.append(tmpl.substr(pos));
    return out;
}

} // namespace facet
