#include "facet/mock_backend.hpp"

#include <algorithm>
#include <cmath>

#include "facet/digest.hpp"
#include "facet/io.hpp"

namespace facet {
namespace {

bool contains(const std::string& haystack, const std::string& needle) {
    return needle.empty() || haystack.find(needle) != std::string::npos;
}

bool contains_all(const std::string& haystack, const std::vector<std::string>& needles) {
    for (const auto& needle : needles)
        if (!contains(haystack, needle)) return false;
    return true;
}

std::string snippet(const std::string& text) {
    constexpr std::size_t kMax = 160;
    if (text.size() <= kMax) return text;
    return text.substr(0, kMax) + "...";
}

std::vector<double> normalized(std::vector<double> vec) {
    double norm_sq = 0.0;
    for (double x : vec) norm_sq += x * x;
    if (norm_sq <= 0.0) throw ValidationError("mock embedding vector has zero norm");
    double norm = std::sqrt(norm_sq);
    for (double& x : vec) x /= norm;
    return vec;
}

} // namespace

MockBackend& MockBackend::add_chat_rule(MockRule rule) {
    std::lock_guard lock(mutex_);
    chat_rules_.push_back(std::move(rule));
    return *this;
}

MockBackend& MockBackend::add_vision_rule(MockRule rule) {
    std::lock_guard lock(mutex_);
    vision_rules_.push_back(std::move(rule));
    return *this;
}

MockBackend& MockBackend::on_prompt(std::string substring, std::string response) {
    return add_chat_rule({{std::move(substring)}, "", std::nullopt, std::move(response)});
}

MockBackend& MockBackend::on_source(std::string substring, std::string response) {
    return add_vision_rule({{}, std::move(substring), std::nullopt, std::move(response)});
}

void MockBackend::fail_next(int count, FailureKind kind) {
    failures_left_.store(count);
    failure_kind_ = kind;
}

void MockBackend::maybe_fail() {
    int left = failures_left_.load();
    while (left > 0) {
        if (failures_left_.compare_exchange_weak(left, left - 1))
            throw BackendError(failure_kind_, "scripted failure");
    }
}

std::string MockBackend::chat_complete(const ChatRequest& request) {
    calls_.fetch_add(1);
    maybe_fail();
    std::lock_guard lock(mutex_);
    for (const auto& rule : chat_rules_) {
        if (!contains_all(request.user_prompt, rule.prompt_contains)) continue;
        if (rule.seed && request.seed != rule.seed) continue;
        return rule.response;
    }
    throw BackendError(FailureKind::unscripted,
                       "no scripted chat response for: " + snippet(request.user_prompt));
}

std::string MockBackend::caption(const VisionRequest& request) {
    calls_.fetch_add(1);
    maybe_fail();
    std::lock_guard lock(mutex_);
    for (const auto& rule : vision_rules_) {
        if (!contains_all(request.prompt, rule.prompt_contains)) continue;
        if (!contains(request.source, rule.source_contains)) continue;
        return rule.response;
    }
    throw BackendError(FailureKind::unscripted, "no scripted caption for source '" +
                                                    request.source +
                                                    "', prompt: " + snippet(request.prompt));
}

HashEmbedder::HashEmbedder(std::size_t dims) : dims_(dims) {
    if (dims_ == 0) throw ValidationError("embedding dimension must be positive");
}

HashEmbedder& HashEmbedder::set_vector(std::string_view text, std::vector<double> vec) {
    overrides_[normalize_name(text)] = normalized(std::move(vec));
    return *this;
}

HashEmbedder& HashEmbedder::add_group(const std::vector<std::string>& members) {
    if (members.empty()) throw ValidationError("synonym group must be non-empty");
    for (const auto& member : members)
        canonical_[normalize_name(member)] = normalize_name(members.front());
    return *this;
}

std::vector<double> HashEmbedder::vector_for(const std::string& text) const {
    std::string key = normalize_name(text);
    if (auto it = canonical_.find(key); it != canonical_.end()) key = it->second;
    if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;

    SplitMix64 rng(seed_from_text(key));
    std::vector<double> vec(dims_);
    for (auto& x : vec) x = rng.next_unit() * 2.0 - 1.0;
    return normalized(std::move(vec));
}

std::vector<std::vector<double>> HashEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed requires at least one text");
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(vector_for(text));
    return out;
}

MockTagger& MockTagger::score(std::string source_contains, std::string tag, double value) {
    rules_.push_back({std::move(source_contains), std::move(tag), value});
    return *this;
}

TagRecord MockTagger::tag(const std::string& source, const std::vector<std::string>& vocabulary,
                          std::size_t k) {
    TagRecord record;
    record.image_id = source;
    record.tags.reserve(vocabulary.size());
    for (const auto& entry : vocabulary) {
        double value = -1.0;
        for (const auto& rule : rules_) {
            if (names_equal(rule.tag, entry) && contains(source, rule.source_contains)) {
                value = rule.value;
                break;
            }
        }
        if (value < 0.0) {
            SplitMix64 rng(seed_from_text(source + "|" + normalize_name(entry)));
            value = rng.next_unit();
        }
        record.tags.push_back({entry, value});
    }
    std::sort(record.tags.begin(), record.tags.end(), [](const ScoredTag& a, const ScoredTag& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.tag < b.tag;
    });
    record.tags.resize(k);
    return record;
}

BackendSet MockSuite::as_backend_set(int workers) const {
    BackendSet set;
    set.chat = model;
    set.vision = model;
    set.embedder = embedder;
    set.tagger = tagger;
    set.workers = workers;
    return set;
}

MockSuite load_mock_suite(const std::filesystem::path& script_path) {
    auto doc = load_json_doc(script_path);
    MockSuite suite;
    suite.model = std::make_shared<MockBackend>();
    suite.tagger = std::make_shared<MockTagger>();

    auto parse_rule = [](const nlohmann::json& row) {
        MockRule rule;
        if (row.contains("prompt_contains")) {
            const auto& field = row["prompt_contains"];
            if (field.is_string())
                rule.prompt_contains.push_back(field.get<std::string>());
            else
                rule.prompt_contains = field.get<std::vector<std::string>>();
        }
        rule.source_contains = row.value("source_contains", "");
        if (row.contains("seed")) rule.seed = row["seed"].get<std::uint64_t>();
        rule.response = row.at("response").get<std::string>();
        return rule;
    };
    for (const auto& row : doc.value("chat", nlohmann::json::array()))
        suite.model->add_chat_rule(parse_rule(row));
    for (const auto& row : doc.value("vision", nlohmann::json::array()))
        suite.model->add_vision_rule(parse_rule(row));

    auto embedder_cfg = doc.value("embedder", nlohmann::json::object());
    suite.embedder = std::make_shared<HashEmbedder>(embedder_cfg.value("dims", std::size_t{64}));
    for (const auto& group : embedder_cfg.value("groups", nlohmann::json::array()))
        suite.embedder->add_group(group.get<std::vector<std::string>>());
    // Named binding: items() must not outlive the json it iterates.
    auto vectors = embedder_cfg.value("vectors", nlohmann::json::object());
    for (const auto& [text, vec] : vectors.items())
        suite.embedder->set_vector(text, vec.get<std::vector<double>>());

    for (const auto& row : doc.value("tagger", nlohmann::json::array()))
        suite.tagger->score(row.value("source_contains", ""), row.at("tag").get<std::string>(),
                            row.at("score").get<double>());
    return suite;
}

} // namespace facet
