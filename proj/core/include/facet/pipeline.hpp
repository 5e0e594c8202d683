#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "facet/backend.hpp"
#include "facet/cache.hpp"
#include "facet/grid.hpp"
#include "facet/grouper.hpp"
#include "facet/mock_backend.hpp"
#include "facet/proposer.hpp"
#include "facet/types.hpp"

namespace facet {

struct EndpointSettings {
    std::string base_url; // empty: capability served from cache only
    std::string path;
    std::string model_id;
    std::string credential_env;
};

struct BackendSettings {
    std::string mock_script; // when set, scripted mocks replace HTTP backends
    EndpointSettings chat;
    EndpointSettings embedding;
    EndpointSettings vision;
    EndpointSettings tagger;
};

struct ProposerSettings {
    std::string kind = "caption"; // caption | tag | image_grid
    std::string composer = "stub"; // stub | raster (raster needs the imaging component)
    std::string tag_vocabulary;    // newline-separated tag list; tag kind only
    std::size_t tag_k = 10;        // tags scored per image before proposing
    ProposerOptions options;
};

struct GrouperSettings {
    std::string kind = "caption"; // caption | vqa | tag
    GroupMode mode = GroupMode::multi;
    GrouperOptions options;
};

struct PipelineConfig {
    std::filesystem::path base_dir; // directory paths below resolve against
    std::string collection;         // image manifest (JSONL)
    std::string output_dir = "runs";
    std::string cache_dir = "cache";
    std::string run_id;             // default: "run-" + config digest prefix
    std::uint64_t seed = 0;
    double sample_fraction = 1.0;   // uniform proposer-input subsample
    std::string matcher = "embedding"; // criteria matching: embedding | llm-judge
    double tpr_match = 0.7;
    double fallback_floor = 0.5;    // lineage + answer-snap floor
    double failure_threshold = 0.05;
    double max_missing_fraction = 0.0; // tolerated missing popularity fraction
    bool include_sentinel = false;     // count the sentinel in analytics
    int workers = 4;
    BackendPolicy policy;
    ProposerSettings proposer;
    GrouperSettings grouper;
    BackendSettings backends;
    // Set by the caller when the raster composer is linked in; "raster" is
    // refused otherwise. Not part of the config document.
    std::shared_ptr<GridComposer> composer_override;
};

// Strict parse (unknown keys rejected); floors, thresholds, seed, and model
// ids are copied onto the stage option blocks.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Canonical document with every effective field except run_id; its digest
// identifies the run semantics.
nlohmann::json config_to_json(const PipelineConfig& config);
std::string config_digest(const PipelineConfig& config);
std::string default_run_id(const PipelineConfig& config);

struct AnalyzeArgs {
    Granularity granularity = Granularity::mid;
    std::string labels;    // correlation against an external two-column file
    std::string attribute; // or between two grouped criteria (ids)
    std::string target;
};

struct GroupOutcome {
    std::size_t attempted = 0;
    std::size_t failed = 0; // per-criterion failures; isolated, not fatal
};

// One run owns <output>/<run_id> exclusively (lockfile) and appends to its
// manifest after every stage. Every artifact is recorded by content digest;
// identical config + warm cache reproduce identical digests.
class Pipeline {
public:
    // cache_only swaps every backend for a replay client: cache misses raise
    // CacheMissError instead of touching the network.
    explicit Pipeline(PipelineConfig config, bool cache_only = false);
    ~Pipeline();
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    const std::string& run_id() const { return run_id_; }
    const std::filesystem::path& run_dir() const { return run_dir_; }
    const nlohmann::json& manifest() const { return manifest_; }

    void run_caption();
    void run_propose();
    GroupOutcome run_group(const std::vector<std::string>& selected = {});
    MetricReport run_evaluate(const std::filesystem::path& gt_path);
    void run_analyze(const std::string& kind, const AnalyzeArgs& args);
    void run_report();

    // Re-runs one stage from a recorded manifest entry (replay path).
    GroupOutcome run_recorded_stage(const std::string& stage_name, const nlohmann::json& args);

private:
    std::filesystem::path resolve(const std::string& path) const;
    std::filesystem::path stage_dir(std::string_view stage) const;
    std::filesystem::path require_artifact(std::string_view stage, std::string_view name) const;
    void acquire_lock();
    void load_or_init_manifest();
    void record_stage(const std::string& name, nlohmann::json args,
                      std::map<std::string, std::string> inputs,
                      const std::vector<std::filesystem::path>& outputs,
                      const std::vector<std::string>& warnings);
    void build_backends();
    ProposerOptions proposer_options() const;
    GrouperOptions grouper_options() const;
    Collection load_input_collection() const;
    std::map<std::string, std::vector<Substructure>> load_substructures() const;

    PipelineConfig config_;
    bool cache_only_;
    std::string run_id_;
    std::filesystem::path run_dir_;
    nlohmann::json manifest_;
    std::shared_ptr<ResponseCache> cache_;
    MockSuite mock_; // keeps scripted backends alive when configured
    BackendSet backends_;
    int lock_fd_ = -1;
};

struct ReplayOutcome {
    bool ok = true;
    std::string replay_run_id;
    std::vector<std::string> mismatches; // "<stage>: <artifact> ..." lines
};

// Re-executes every recorded stage of run_id against the response cache with
// networking disabled, writing to "<run_id>.replay", then compares artifact
// digests stage by stage. A config whose digest differs from the recorded one
// is refused.
ReplayOutcome replay_run(const PipelineConfig& config, const std::string& run_id);

// Markdown summary of a completed run directory: criteria, metric scores,
// cluster size histograms, bias/correlation/popularity tables. Pure document
// emitter; contains no timestamps so reruns are byte-identical.
std::string render_run_report(const std::filesystem::path& run_dir);

} // namespace facet
