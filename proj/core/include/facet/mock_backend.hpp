#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "facet/backend.hpp"

namespace facet {

// Substring-triggered canned response. Every entry of `prompt_contains` must
// appear in the prompt; empty fields match anything. Rules are checked in
// insertion order and the first match wins, so scripts list specific rules
// before broad fallbacks.
struct MockRule {
    std::vector<std::string> prompt_contains;
    std::string source_contains;
    std::optional<std::uint64_t> seed;
    std::string response;
};

// Scripted chat + vision backend. A request matching no rule raises an
// unscripted error, so fixture gaps fail loudly instead of silently.
class MockBackend : public ChatBackend, public VisionBackend {
public:
    MockBackend& add_chat_rule(MockRule rule);
    MockBackend& add_vision_rule(MockRule rule);
    MockBackend& on_prompt(std::string substring, std::string response);
    MockBackend& on_source(std::string substring, std::string response);

    // The next `count` calls throw a backend error of `kind` before any rule
    // matching; used to exercise retry policies.
    void fail_next(int count, FailureKind kind);

    std::string chat_complete(const ChatRequest& request) override;
    std::string caption(const VisionRequest& request) override;

    // Raw calls served (cache hits never reach this backend).
    int call_count() const { return calls_.load(); }

private:
    void maybe_fail();
    std::vector<MockRule> chat_rules_;
    std::vector<MockRule> vision_rules_;
    std::atomic<int> calls_{0};
    std::atomic<int> failures_left_{0};
    FailureKind failure_kind_ = FailureKind::transient;
    mutable std::mutex mutex_;
};

// Deterministic pseudo-embeddings: the normalized text is hashed to seed a
// fixed-dimension unit vector, so equal texts always agree and unrelated
// texts land near-orthogonal. Exact vectors and synonym groups can be pinned
// on top for tests that need controlled cosines.
class HashEmbedder : public EmbeddingBackend {
public:
    explicit HashEmbedder(std::size_t dims = 64);

    // Exact vector for a text (normalized to unit length here).
    HashEmbedder& set_vector(std::string_view text, std::vector<double> vec);
    // All members embed as the first member.
    HashEmbedder& add_group(const std::vector<std::string>& members);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

private:
    std::vector<double> vector_for(const std::string& text) const;
    std::size_t dims_;
    std::map<std::string, std::vector<double>> overrides_; // keyed by normalize_name
    std::map<std::string, std::string> canonical_;         // group member -> representative
};

// Scripted open-vocabulary tagger; unscripted (source, tag) pairs fall back
// to a deterministic hash score in [0, 1).
class MockTagger : public TaggerBackend {
public:
    MockTagger& score(std::string source_contains, std::string tag, double value);
    TagRecord tag(const std::string& source, const std::vector<std::string>& vocabulary,
                  std::size_t k) override;

private:
    struct ScoreRule {
        std::string source_contains;
        std::string tag;
        double value;
    };
    std::vector<ScoreRule> rules_;
};

// One script file configuring all four mock capabilities.
struct MockSuite {
    std::shared_ptr<MockBackend> model; // chat + vision
    std::shared_ptr<HashEmbedder> embedder;
    std::shared_ptr<MockTagger> tagger;

    BackendSet as_backend_set(int workers = 4) const;
};

MockSuite load_mock_suite(const std::filesystem::path& script_path);

} // namespace facet
