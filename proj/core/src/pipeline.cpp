#include "facet/pipeline.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <set>

#include <fcntl.h>
#include <unistd.h>

#include "facet/digest.hpp"
#include "facet/http_backend.hpp"
#include "facet/io.hpp"
#include "facet/metrics.hpp"
#include "facet/analytics.hpp"
#include "facet/parallel.hpp"

namespace facet {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void check_keys(const json& object, std::initializer_list<std::string_view> allowed,
                const std::string& context) {
    for (const auto& [key, value] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

void check_unit(double value, const std::string& name) {
    if (value < 0.0 || value > 1.0) throw ConfigError(name + " must lie in [0, 1]");
}

EndpointSettings parse_endpoint(const json& object, const std::string& context) {
    check_keys(object, {"base_url", "path", "model_id", "credential_env"}, context);
    EndpointSettings settings;
    settings.base_url = object.value("base_url", "");
    settings.path = object.value("path", "");
    settings.model_id = object.value("model_id", "");
    settings.credential_env = object.value("credential_env", "");
    return settings;
}

json endpoint_to_json(const EndpointSettings& settings) {
    return json{{"base_url", settings.base_url},
                {"path", settings.path},
                {"model_id", settings.model_id},
                {"credential_env", settings.credential_env}};
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

template <typename T>
std::vector<T> subsample(std::vector<T> items, double fraction, std::uint64_t seed) {
    if (fraction >= 1.0) return items;
    deterministic_shuffle(items, seed);
    auto keep = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(items.size())));
    keep = std::clamp<std::size_t>(keep, 1, items.size());
    items.resize(keep);
    return items;
}

std::vector<std::string> read_tag_vocabulary(const std::filesystem::path& path) {
    auto text = read_file(path);
    std::vector<std::string> vocabulary;
    std::set<std::string> seen;
    std::string line;
    auto flush = [&] {
        auto tag = trim(line);
        line.clear();
        if (tag.empty()) return;
        if (seen.insert(normalize_name(tag)).second) vocabulary.push_back(tag);
    };
    for (char ch : text) {
        if (ch == '\n')
            flush();
        else
            line.push_back(ch);
    }
    flush();
    if (vocabulary.empty()) throw ConfigError("tag vocabulary " + path.string() + " is empty");
    return vocabulary;
}

std::string relative_to(const std::filesystem::path& path, const std::filesystem::path& root) {
    return std::filesystem::relative(path, root).generic_string();
}

} // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    auto doc = load_json_doc(path);
    if (!doc.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
    PipelineConfig config;
    config.base_dir = path.parent_path();
    try {
        check_keys(doc,
                   {"collection", "output_dir", "cache_dir", "run_id", "seed",
                    "sample_fraction", "matcher", "thresholds", "analytics", "workers",
                    "policy", "proposer", "grouper", "backends"},
                   "config");
        config.collection = doc.value("collection", "");
        config.output_dir = doc.value("output_dir", config.output_dir);
        config.cache_dir = doc.value("cache_dir", config.cache_dir);
        config.run_id = doc.value("run_id", "");
        config.seed = doc.value("seed", config.seed);
        config.sample_fraction = doc.value("sample_fraction", config.sample_fraction);
        config.matcher = doc.value("matcher", config.matcher);
        config.workers = doc.value("workers", config.workers);

        if (doc.contains("thresholds")) {
            const auto& t = doc["thresholds"];
            check_keys(t, {"tpr_match", "fallback_floor", "failure"}, "thresholds");
            config.tpr_match = t.value("tpr_match", config.tpr_match);
            config.fallback_floor = t.value("fallback_floor", config.fallback_floor);
            config.failure_threshold = t.value("failure", config.failure_threshold);
        }
        if (doc.contains("analytics")) {
            const auto& a = doc["analytics"];
            check_keys(a, {"max_missing_fraction", "include_sentinel"}, "analytics");
            config.max_missing_fraction =
                a.value("max_missing_fraction", config.max_missing_fraction);
            config.include_sentinel = a.value("include_sentinel", config.include_sentinel);
        }
        if (doc.contains("policy")) {
            const auto& p = doc["policy"];
            check_keys(p, {"max_in_flight", "max_retries", "base_backoff_ms", "timeout_ms"},
                       "policy");
            config.policy.max_in_flight = p.value("max_in_flight", config.policy.max_in_flight);
            config.policy.max_retries = p.value("max_retries", config.policy.max_retries);
            config.policy.base_backoff = std::chrono::milliseconds(
                p.value("base_backoff_ms", config.policy.base_backoff.count()));
            config.policy.timeout =
                std::chrono::milliseconds(p.value("timeout_ms", config.policy.timeout.count()));
        }
        if (doc.contains("proposer")) {
            const auto& p = doc["proposer"];
            check_keys(p,
                       {"kind", "composer", "tag_vocabulary", "tag_k", "subset_size",
                        "criteria_per_subset", "grid_side", "criteria_per_grid", "token_budget",
                        "max_tokens"},
                       "proposer");
            config.proposer.kind = p.value("kind", config.proposer.kind);
            config.proposer.composer = p.value("composer", config.proposer.composer);
            config.proposer.tag_vocabulary =
                p.value("tag_vocabulary", config.proposer.tag_vocabulary);
            config.proposer.tag_k = p.value("tag_k", config.proposer.tag_k);
            auto& options = config.proposer.options;
            options.subset_size = p.value("subset_size", options.subset_size);
            options.criteria_per_subset =
                p.value("criteria_per_subset", options.criteria_per_subset);
            options.grid_side = p.value("grid_side", options.grid_side);
            options.criteria_per_grid = p.value("criteria_per_grid", options.criteria_per_grid);
            options.token_budget = p.value("token_budget", options.token_budget);
            options.max_tokens = p.value("max_tokens", options.max_tokens);
        }
        if (doc.contains("grouper")) {
            const auto& g = doc["grouper"];
            check_keys(g,
                       {"kind", "mode", "name_word_cap", "hierarchy_retries", "mid_tag_queries",
                        "coarse_per_mid", "fine_per_mid", "max_tokens"},
                       "grouper");
            config.grouper.kind = g.value("kind", config.grouper.kind);
            if (g.contains("mode"))
                config.grouper.mode = group_mode_from_name(g["mode"].get<std::string>());
            auto& options = config.grouper.options;
            options.name_word_cap = g.value("name_word_cap", options.name_word_cap);
            options.hierarchy_retries = g.value("hierarchy_retries", options.hierarchy_retries);
            options.mid_tag_queries = g.value("mid_tag_queries", options.mid_tag_queries);
            options.coarse_per_mid = g.value("coarse_per_mid", options.coarse_per_mid);
            options.fine_per_mid = g.value("fine_per_mid", options.fine_per_mid);
            options.max_tokens = g.value("max_tokens", options.max_tokens);
        }
        if (doc.contains("backends")) {
            const auto& b = doc["backends"];
            check_keys(b, {"mock_script", "chat", "embedding", "vision", "tagger"}, "backends");
            config.backends.mock_script = b.value("mock_script", "");
            if (b.contains("chat")) config.backends.chat = parse_endpoint(b["chat"], "backends.chat");
            if (b.contains("embedding"))
                config.backends.embedding = parse_endpoint(b["embedding"], "backends.embedding");
            if (b.contains("vision"))
                config.backends.vision = parse_endpoint(b["vision"], "backends.vision");
            if (b.contains("tagger"))
                config.backends.tagger = parse_endpoint(b["tagger"], "backends.tagger");
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    if (config.collection.empty())
        throw ConfigError(path.string() + ": 'collection' is required");
    if (config.sample_fraction <= 0.0 || config.sample_fraction > 1.0)
        throw ConfigError("sample_fraction must lie in (0, 1]");
    if (config.workers < 1) throw ConfigError("workers must be positive");
    if (config.policy.max_in_flight < 1) throw ConfigError("max_in_flight must be positive");
    check_unit(config.tpr_match, "thresholds.tpr_match");
    check_unit(config.fallback_floor, "thresholds.fallback_floor");
    check_unit(config.failure_threshold, "thresholds.failure");
    check_unit(config.max_missing_fraction, "analytics.max_missing_fraction");
    if (config.matcher != "embedding" && config.matcher != "llm-judge")
        throw ConfigError("unknown matcher: " + config.matcher);
    if (config.proposer.kind != "caption" && config.proposer.kind != "tag" &&
        config.proposer.kind != "image_grid")
        throw ConfigError("unknown proposer kind: " + config.proposer.kind);
    if (config.proposer.composer != "stub" && config.proposer.composer != "raster")
        throw ConfigError("unknown composer: " + config.proposer.composer);
    if (config.grouper.kind != "caption" && config.grouper.kind != "vqa" &&
        config.grouper.kind != "tag")
        throw ConfigError("unknown grouper kind: " + config.grouper.kind);
    return config;
}

json config_to_json(const PipelineConfig& config) {
    return json{
        {"collection", config.collection},
        {"output_dir", config.output_dir},
        {"cache_dir", config.cache_dir},
        {"seed", config.seed},
        {"sample_fraction", config.sample_fraction},
        {"matcher", config.matcher},
        {"thresholds",
         {{"tpr_match", config.tpr_match},
          {"fallback_floor", config.fallback_floor},
          {"failure", config.failure_threshold}}},
        {"analytics",
         {{"max_missing_fraction", config.max_missing_fraction},
          {"include_sentinel", config.include_sentinel}}},
        {"workers", config.workers},
        {"policy",
         {{"max_in_flight", config.policy.max_in_flight},
          {"max_retries", config.policy.max_retries},
          {"base_backoff_ms", config.policy.base_backoff.count()},
          {"timeout_ms", config.policy.timeout.count()}}},
        {"proposer",
         {{"kind", config.proposer.kind},
          {"composer", config.proposer.composer},
          {"tag_vocabulary", config.proposer.tag_vocabulary},
          {"tag_k", config.proposer.tag_k},
          {"subset_size", config.proposer.options.subset_size},
          {"criteria_per_subset", config.proposer.options.criteria_per_subset},
          {"grid_side", config.proposer.options.grid_side},
          {"criteria_per_grid", config.proposer.options.criteria_per_grid},
          {"token_budget", config.proposer.options.token_budget},
          {"max_tokens", config.proposer.options.max_tokens}}},
        {"grouper",
         {{"kind", config.grouper.kind},
          {"mode", group_mode_name(config.grouper.mode)},
          {"name_word_cap", config.grouper.options.name_word_cap},
          {"hierarchy_retries", config.grouper.options.hierarchy_retries},
          {"mid_tag_queries", config.grouper.options.mid_tag_queries},
          {"coarse_per_mid", config.grouper.options.coarse_per_mid},
          {"fine_per_mid", config.grouper.options.fine_per_mid},
          {"max_tokens", config.grouper.options.max_tokens}}},
        {"backends",
         {{"mock_script", config.backends.mock_script},
          {"chat", endpoint_to_json(config.backends.chat)},
          {"embedding", endpoint_to_json(config.backends.embedding)},
          {"vision", endpoint_to_json(config.backends.vision)},
          {"tagger", endpoint_to_json(config.backends.tagger)}}}};
}

std::string config_digest(const PipelineConfig& config) {
    return sha256_hex(config_to_json(config).dump());
}

std::string default_run_id(const PipelineConfig& config) {
    return "run-" + config_digest(config).substr(0, 8);
}

Pipeline::Pipeline(PipelineConfig config, bool cache_only)
    : config_(std::move(config)), cache_only_(cache_only) {
    if (config_.collection.empty())
        throw ConfigError("pipeline config is missing the collection manifest path");
    run_id_ = config_.run_id.empty() ? default_run_id(config_) : config_.run_id;
    run_dir_ = resolve(config_.output_dir) / run_id_;
    std::filesystem::create_directories(run_dir_);
    acquire_lock();
    try {
        build_backends();
        load_or_init_manifest();
    } catch (...) {
        if (lock_fd_ >= 0) {
            ::close(lock_fd_);
            std::filesystem::remove(run_dir_ / ".lock");
            lock_fd_ = -1;
        }
        throw;
    }
}

Pipeline::~Pipeline() {
    if (lock_fd_ >= 0) {
        ::close(lock_fd_);
        std::error_code ec;
        std::filesystem::remove(run_dir_ / ".lock", ec);
    }
}

std::filesystem::path Pipeline::resolve(const std::string& path) const {
    return resolve_path(config_.base_dir, path);
}

std::filesystem::path Pipeline::stage_dir(std::string_view stage) const {
    auto dir = run_dir_ / stage;
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path Pipeline::require_artifact(std::string_view stage,
                                                 std::string_view name) const {
    auto path = run_dir_ / stage / name;
    if (!std::filesystem::exists(path))
        throw StageError("missing artifact " + relative_to(path, run_dir_) + "; run the '" +
                         std::string(stage) + "' stage first");
    return path;
}

void Pipeline::acquire_lock() {
    auto lock_path = run_dir_ / ".lock";
    lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (lock_fd_ < 0) {
        if (errno == EEXIST)
            throw StageError("run directory " + run_dir_.string() +
                             " is locked by another process (remove .lock if stale)");
        throw ConfigError("cannot create lockfile " + lock_path.string() + ": " +
                          std::strerror(errno));
    }
    auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto written = ::write(lock_fd_, pid.data(), pid.size());
}

void Pipeline::load_or_init_manifest() {
    auto path = run_dir_ / "manifest.json";
    auto digest = config_digest(config_);
    if (std::filesystem::exists(path)) {
        manifest_ = load_json_doc(path);
        if (manifest_.value("config_digest", "") != digest)
            throw ConfigError("run directory " + run_dir_.string() +
                              " was produced by a different configuration");
        return;
    }
    auto identity = [&](const EndpointSettings& settings) {
        std::string endpoint = settings.base_url;
        if (cache_only_)
            endpoint = "replay";
        else if (!config_.backends.mock_script.empty())
            endpoint = "mock";
        else if (endpoint.empty())
            endpoint = "cache-only";
        return json{{"endpoint", endpoint}, {"model_id", settings.model_id}};
    };
    manifest_ = json::object();
    manifest_["run_id"] = run_id_;
    manifest_["config_digest"] = digest;
    manifest_["seed"] = config_.seed;
    manifest_["backends"] = json{{"chat", identity(config_.backends.chat)},
                                 {"embedding", identity(config_.backends.embedding)},
                                 {"vision", identity(config_.backends.vision)},
                                 {"tagger", identity(config_.backends.tagger)}};
    manifest_["created_at_ms"] = now_ms();
    manifest_["stage_order"] = json::array();
    manifest_["stages"] = json::object();
    save_json_doc(path, manifest_);
}

void Pipeline::record_stage(const std::string& name, json args,
                            std::map<std::string, std::string> inputs,
                            const std::vector<std::filesystem::path>& outputs,
                            const std::vector<std::string>& warnings) {
    json stage;
    stage["args"] = std::move(args);
    stage["inputs"] = std::move(inputs);
    json outs = json::object();
    for (const auto& path : outputs) outs[relative_to(path, run_dir_)] = sha256_file(path);
    stage["outputs"] = std::move(outs);
    stage["warnings"] = warnings;
    stage["completed_at_ms"] = now_ms();
    manifest_["stages"][name] = std::move(stage);
    auto& order = manifest_["stage_order"];
    if (std::find(order.begin(), order.end(), json(name)) == order.end()) order.push_back(name);
    save_json_doc(run_dir_ / "manifest.json", manifest_);
}

void Pipeline::build_backends() {
    cache_ = std::make_shared<ResponseCache>(resolve(config_.cache_dir));
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<EmbeddingBackend> embedder;
    std::shared_ptr<VisionBackend> vision;
    std::shared_ptr<TaggerBackend> tagger;
    if (!cache_only_) {
        if (!config_.backends.mock_script.empty()) {
            mock_ = load_mock_suite(resolve(config_.backends.mock_script));
            chat = mock_.model;
            vision = mock_.model;
            embedder = mock_.embedder;
            tagger = mock_.tagger;
        } else {
            auto endpoint = [&](const EndpointSettings& settings) {
                HttpEndpoint e;
                e.base_url = settings.base_url;
                e.path = settings.path;
                e.model_id = settings.model_id;
                e.credential_env = settings.credential_env;
                e.timeout = config_.policy.timeout;
                return e;
            };
            if (!config_.backends.chat.base_url.empty())
                chat = std::make_shared<HttpChatBackend>(endpoint(config_.backends.chat));
            if (!config_.backends.embedding.base_url.empty())
                embedder =
                    std::make_shared<HttpEmbeddingBackend>(endpoint(config_.backends.embedding));
            if (!config_.backends.vision.base_url.empty())
                vision = std::make_shared<HttpVisionBackend>(endpoint(config_.backends.vision));
            if (!config_.backends.tagger.base_url.empty())
                tagger = std::make_shared<HttpTaggerBackend>(endpoint(config_.backends.tagger));
        }
    }
    backends_.chat = std::make_shared<CachingChatBackend>(chat, cache_, config_.policy);
    backends_.embedder = std::make_shared<CachingEmbeddingBackend>(
        embedder, cache_, config_.policy, config_.backends.embedding.model_id);
    backends_.vision = std::make_shared<CachingVisionBackend>(vision, cache_, config_.policy);
    backends_.tagger = std::make_shared<CachingTaggerBackend>(
        tagger, cache_, config_.policy, config_.backends.tagger.model_id);
    backends_.workers = config_.workers;
}

ProposerOptions Pipeline::proposer_options() const {
    auto options = config_.proposer.options;
    options.shuffle_seed = config_.seed;
    options.lineage_floor = config_.fallback_floor;
    options.failure_threshold = config_.failure_threshold;
    options.chat_model = config_.backends.chat.model_id;
    options.vision_model = config_.backends.vision.model_id;
    return options;
}

GrouperOptions Pipeline::grouper_options() const {
    auto options = config_.grouper.options;
    options.snap_floor = config_.fallback_floor;
    options.failure_threshold = config_.failure_threshold;
    options.chat_model = config_.backends.chat.model_id;
    options.vision_model = config_.backends.vision.model_id;
    return options;
}

Collection Pipeline::load_input_collection() const {
    return load_collection(resolve(config_.collection));
}

void Pipeline::run_caption() {
    auto collection = load_input_collection();
    auto outcome = generate_generic_captions(collection, backends_, proposer_options());
    auto dir = stage_dir("caption");
    save_captions(dir / "captions.jsonl", outcome.captions);
    json failures = json::array();
    for (const auto& failure : outcome.failures)
        failures.push_back({{"item_id", failure.item_id}, {"message", failure.message}});
    save_json_doc(dir / "failures.json", failures);
    std::vector<std::string> warnings;
    if (!outcome.failures.empty())
        warnings.push_back(std::to_string(outcome.failures.size()) + " of " +
                           std::to_string(collection.size()) + " images failed to caption");
    record_stage("caption", json::object(),
                 {{"collection", sha256_file(resolve(config_.collection))}},
                 {dir / "captions.jsonl", dir / "failures.json"}, warnings);
}

void Pipeline::run_propose() {
    auto options = proposer_options();
    auto dir = stage_dir("propose");
    std::map<std::string, std::string> inputs{
        {"collection", sha256_file(resolve(config_.collection))}};
    std::vector<std::filesystem::path> outputs;
    ProposerRun run;
    const auto& kind = config_.proposer.kind;

    auto sampled_collection = [&] {
        auto records = load_input_collection().records();
        return validate_collection(subsample(records, config_.sample_fraction, config_.seed));
    };

    if (kind == "caption") {
        auto captions_path = require_artifact("caption", "captions.jsonl");
        inputs["captions"] = sha256_file(captions_path);
        auto captions =
            subsample(load_captions(captions_path), config_.sample_fraction, config_.seed);
        run = propose_from_captions(captions, backends_, options);
    } else if (kind == "tag") {
        if (config_.proposer.tag_vocabulary.empty())
            throw ConfigError("the tag proposer needs proposer.tag_vocabulary");
        auto vocab_path = resolve(config_.proposer.tag_vocabulary);
        inputs["vocabulary"] = sha256_file(vocab_path);
        auto vocabulary = read_tag_vocabulary(vocab_path);
        auto collection = sampled_collection();
        auto k = std::min(config_.proposer.tag_k, vocabulary.size());
        if (k == 0) throw ConfigError("proposer.tag_k must be positive");

        struct Slot {
            std::optional<TagRecord> record;
            std::optional<std::string> warning;
        };
        auto slots = parallel_map(
            collection.records(), backends_.workers,
            [&](const ImageRecord& record, std::size_t) {
                Slot slot;
                try {
                    auto tags = backends_.tagger->tag(record.source, vocabulary, k);
                    tags.image_id = record.image_id;
                    slot.record = std::move(tags);
                } catch (const BackendError& e) {
                    slot.warning = "tagging for " + record.image_id + " failed: " + e.what();
                }
                return slot;
            });
        std::vector<TagRecord> records;
        std::vector<std::string> tag_warnings;
        for (auto& slot : slots) {
            if (slot.record) records.push_back(std::move(*slot.record));
            if (slot.warning) tag_warnings.push_back(std::move(*slot.warning));
        }
        if (static_cast<double>(tag_warnings.size()) >
            config_.failure_threshold * static_cast<double>(collection.size()))
            throw StageError("tagging failed for " + std::to_string(tag_warnings.size()) +
                             " of " + std::to_string(collection.size()) + " images");
        save_tags(dir / "tags.jsonl", records);
        outputs.push_back(dir / "tags.jsonl");
        run = propose_from_tags(records, backends_, options);
        run.warnings.insert(run.warnings.begin(), tag_warnings.begin(), tag_warnings.end());
    } else if (kind == "image_grid") {
        auto collection = sampled_collection();
        StubGridComposer stub;
        GridComposer* composer = &stub;
        if (config_.proposer.composer == "raster") {
            if (!config_.composer_override)
                throw ConfigError("the raster composer is not linked into this build");
            composer = config_.composer_override.get();
        }
        run = propose_from_image_grids(collection, *composer, dir / "grids", backends_, options);
        std::vector<std::filesystem::path> grids;
        for (const auto& entry : std::filesystem::directory_iterator(dir / "grids"))
            if (entry.is_regular_file()) grids.push_back(entry.path());
        std::sort(grids.begin(), grids.end());
        outputs.insert(outputs.end(), grids.begin(), grids.end());
    } else {
        throw ConfigError("unknown proposer kind: " + kind);
    }

    save_criteria(dir / "raw_criteria.json", run.raw_criteria);
    save_json_doc(dir / "proposal.json", json{{"kind", run.kind},
                                              {"shuffle_seed", run.shuffle_seed},
                                              {"subset_size", run.subset_size},
                                              {"subsets", run.subsets},
                                              {"warnings", run.warnings}});

    auto refinement = refine_criteria_pool(run.raw_criteria, backends_, options);
    save_criteria(dir / "refined_criteria.json", refinement.refined);
    save_json_doc(dir / "refinement.json", json{{"discarded", refinement.discarded},
                                                {"unrefined", refinement.unrefined},
                                                {"warnings", refinement.warnings}});
    outputs.insert(outputs.end(), {dir / "raw_criteria.json", dir / "proposal.json",
                                   dir / "refined_criteria.json", dir / "refinement.json"});

    auto warnings = run.warnings;
    warnings.insert(warnings.end(), refinement.warnings.begin(), refinement.warnings.end());
    record_stage("propose",
                 json{{"kind", kind}, {"sample_fraction", config_.sample_fraction}}, inputs,
                 outputs, warnings);
}

GroupOutcome Pipeline::run_group(const std::vector<std::string>& selected) {
    const auto& kind = config_.grouper.kind;
    if (kind != "caption" && kind != "vqa" && kind != "tag")
        throw ConfigError("unknown grouper kind: " + kind);

    auto collection = load_input_collection();
    auto refined_path = require_artifact("propose", "refined_criteria.json");
    auto refined = load_criteria(refined_path);
    std::map<std::string, std::string> inputs{
        {"collection", sha256_file(resolve(config_.collection))},
        {"refined_criteria", sha256_file(refined_path)}};

    std::vector<Criterion> chosen;
    if (selected.empty()) {
        chosen = refined;
    } else {
        for (const auto& wanted : selected) {
            auto it = std::find_if(refined.begin(), refined.end(), [&](const Criterion& c) {
                return c.criterion_id == wanted || names_equal(c.name, wanted);
            });
            if (it == refined.end()) throw ConfigError("unknown criterion: " + wanted);
            chosen.push_back(*it);
        }
    }

    auto options = grouper_options();
    auto dir = stage_dir("group");
    json summary = json::array();
    std::vector<std::filesystem::path> outputs;
    std::vector<std::string> warnings;
    GroupOutcome outcome{chosen.size(), 0};

    for (const auto& criterion : chosen) {
        auto crit_dir = dir / criterion.criterion_id;
        std::filesystem::create_directories(crit_dir);
        json row{{"criterion_id", criterion.criterion_id}, {"name", criterion.name}};
        try {
            GroupResult result;
            if (kind == "caption") {
                result = group_by_captions(collection, criterion, backends_, options,
                                           config_.grouper.mode);
            } else if (kind == "vqa") {
                auto question = vqa_question_for_criterion(criterion, backends_, options);
                save_json_doc(crit_dir / "question.json",
                              json{{"criterion_id", question.criterion_id},
                                   {"question", question.question}});
                outputs.push_back(crit_dir / "question.json");
                result = group_by_vqa(collection, criterion, backends_, options);
            } else {
                auto hierarchy = build_tag_hierarchy(criterion, backends_, options);
                save_json_doc(crit_dir / "tag_hierarchy.json",
                              json{{"criterion_id", hierarchy.criterion_id},
                                   {"mid", hierarchy.mid},
                                   {"super_of", hierarchy.super_of},
                                   {"sub_of", hierarchy.sub_of},
                                   {"warnings", hierarchy.warnings}});
                outputs.push_back(crit_dir / "tag_hierarchy.json");
                result = group_by_tags(collection, criterion, hierarchy, backends_, options);
            }

            for (const auto& sub : result.substructures) {
                auto path = crit_dir / (std::string("substructure_") +
                                        granularity_name(sub.granularity) + ".json");
                save_substructure(path, sub);
                outputs.push_back(path);
            }
            if (result.hierarchy) {
                save_hierarchy(crit_dir / "hierarchy.json", *result.hierarchy);
                outputs.push_back(crit_dir / "hierarchy.json");
            }
            if (!result.captions.empty()) {
                save_captions(crit_dir / "captions.jsonl", result.captions);
                outputs.push_back(crit_dir / "captions.jsonl");
            }
            if (!result.initial.by_image.empty()) {
                save_json_doc(crit_dir / "initial_names.json",
                              json{{"criterion_id", result.initial.criterion_id},
                                   {"by_image", result.initial.by_image}});
                outputs.push_back(crit_dir / "initial_names.json");
            }
            row["status"] = "ok";
            row["substructures"] = result.substructures.size();
            row["warnings"] = result.warnings;
        } catch (const CacheMissError&) {
            throw; // a missing cache entry invalidates the whole replay
        } catch (const Error& e) {
            ++outcome.failed;
            row["status"] = "failed";
            row["message"] = e.what();
            warnings.push_back(criterion.criterion_id + " failed: " + e.what());
        }
        summary.push_back(std::move(row));
    }

    save_json_doc(dir / "summary.json", summary);
    outputs.push_back(dir / "summary.json");
    record_stage("group",
                 json{{"selected", selected},
                      {"kind", kind},
                      {"mode", group_mode_name(config_.grouper.mode)}},
                 inputs, outputs, warnings);
    return outcome;
}

std::map<std::string, std::vector<Substructure>> Pipeline::load_substructures() const {
    auto summary_path = run_dir_ / "group" / "summary.json";
    if (!std::filesystem::exists(summary_path))
        throw StageError("missing artifact group/summary.json; run the 'group' stage first");
    auto summary = load_json_doc(summary_path);
    std::map<std::string, std::vector<Substructure>> substructures;
    for (const auto& row : summary) {
        if (row.value("status", "") != "ok") continue;
        auto criterion_id = row.at("criterion_id").get<std::string>();
        std::vector<Substructure> list;
        for (auto granularity : kAllGranularities) {
            auto path = run_dir_ / "group" / criterion_id /
                        (std::string("substructure_") + granularity_name(granularity) + ".json");
            if (std::filesystem::exists(path)) list.push_back(load_substructure(path));
        }
        if (!list.empty()) substructures.emplace(std::move(criterion_id), std::move(list));
    }
    return substructures;
}

MetricReport Pipeline::run_evaluate(const std::filesystem::path& gt_path) {
    if (gt_path.empty()) throw ConfigError("evaluate needs a ground-truth file");
    auto resolved_gt = gt_path.is_absolute() ? gt_path : resolve(gt_path.string());
    auto refined_path = require_artifact("propose", "refined_criteria.json");
    auto criteria = load_criteria(refined_path);
    auto substructures = load_substructures();
    auto gt = load_ground_truth(resolved_gt);

    EvalContext ctx;
    ctx.embedder = backends_.embedder;
    if (config_.matcher == "llm-judge")
        ctx.matcher =
            std::make_shared<LlmJudgeMatcher>(backends_.chat, config_.backends.chat.model_id);
    ctx.tpr_threshold = config_.tpr_match;
    auto report = evaluate_run(ctx, criteria, substructures, gt);

    auto dir = stage_dir("evaluate");
    save_json_doc(dir / "report.json", report);

    std::map<std::string, std::string> inputs{
        {"refined_criteria", sha256_file(refined_path)},
        {"ground_truth", sha256_file(resolved_gt)}};
    for (const auto& [criterion_id, list] : substructures)
        for (const auto& sub : list) {
            auto rel = "group/" + criterion_id + "/substructure_" +
                       granularity_name(sub.granularity) + ".json";
            inputs[rel] = sha256_file(run_dir_ / rel);
        }
    record_stage("evaluate", json{{"gt", gt_path.generic_string()}}, inputs,
                 {dir / "report.json"}, {});
    return report;
}

void Pipeline::run_analyze(const std::string& kind, const AnalyzeArgs& args) {
    auto dir = stage_dir("analyze");
    std::map<std::string, std::string> inputs;
    auto substructure_inputs = [&](const std::map<std::string, std::vector<Substructure>>& map) {
        for (const auto& [criterion_id, list] : map)
            for (const auto& sub : list) {
                auto rel = "group/" + criterion_id + "/substructure_" +
                           granularity_name(sub.granularity) + ".json";
                inputs[rel] = sha256_file(run_dir_ / rel);
            }
    };
    json doc;
    std::filesystem::path out;

    if (kind == "bias") {
        auto map = load_substructures();
        substructure_inputs(map);
        std::vector<Substructure> all;
        for (const auto& [criterion_id, list] : map)
            all.insert(all.end(), list.begin(), list.end());
        auto findings = bias_report(all, args.granularity, config_.include_sentinel);
        json rows = json::array();
        for (const auto& finding : findings)
            rows.push_back(json{{"criterion_id", finding.criterion_id},
                                {"granularity", granularity_name(finding.granularity)},
                                {"intensity", finding.intensity},
                                {"degenerate", finding.degenerate},
                                {"dominant", finding.dominant},
                                {"dominant_tied", finding.dominant_tied},
                                {"counts", finding.distribution.counts}});
        doc = json{{"granularity", granularity_name(args.granularity)},
                   {"include_sentinel", config_.include_sentinel},
                   {"findings", rows}};
        out = dir / "bias.json";
    } else if (kind == "correlation") {
        JointDistribution joint;
        json source;
        if (!args.labels.empty()) {
            auto labels_path = resolve(args.labels);
            inputs["labels"] = sha256_file(labels_path);
            joint = load_joint_labels(labels_path);
            source = json{{"labels", args.labels}};
        } else {
            if (args.attribute.empty() || args.target.empty())
                throw ConfigError(
                    "correlation needs either a labels file or attribute and target criteria");
            auto map = load_substructures();
            substructure_inputs(map);
            auto find = [&](const std::string& criterion_id) -> const Substructure& {
                auto it = map.find(criterion_id);
                if (it == map.end())
                    throw ConfigError("criterion " + criterion_id + " has no substructures");
                for (const auto& sub : it->second)
                    if (sub.granularity == args.granularity) return sub;
                throw ConfigError("criterion " + criterion_id + " has no " +
                                  granularity_name(args.granularity) + " substructure");
            };
            joint = JointDistribution::from_substructures(find(args.attribute),
                                                          find(args.target),
                                                          config_.include_sentinel);
            source = json{{"attribute", args.attribute},
                          {"target", args.target},
                          {"granularity", granularity_name(args.granularity)}};
        }
        doc = json{{"source", source}, {"score", spurious_correlation(joint)}};
        out = dir / "correlation.json";
    } else if (kind == "popularity") {
        auto collection = load_input_collection();
        inputs["collection"] = sha256_file(resolve(config_.collection));
        auto map = load_substructures();
        substructure_inputs(map);
        json rows = json::array();
        for (const auto& [criterion_id, list] : map) {
            for (const auto& sub : list) {
                if (sub.granularity != args.granularity) continue;
                try {
                    auto finding =
                        popularity_analysis(sub, collection, config_.max_missing_fraction);
                    json clusters = json::array();
                    for (const auto& cluster : finding.clusters)
                        clusters.push_back(json{{"cluster", cluster.cluster},
                                                {"size", cluster.size},
                                                {"mean", cluster.mean},
                                                {"weighted", cluster.weighted}});
                    rows.push_back(json{{"criterion_id", finding.criterion_id},
                                        {"clusters", clusters},
                                        {"viral", finding.viral},
                                        {"viral_tied", finding.viral_tied},
                                        {"major", finding.major},
                                        {"major_tied", finding.major_tied},
                                        {"missing_fraction", finding.missing_fraction}});
                } catch (const ValidationError& e) {
                    rows.push_back(json{{"criterion_id", criterion_id}, {"error", e.what()}});
                }
            }
        }
        doc = json{{"granularity", granularity_name(args.granularity)}, {"findings", rows}};
        out = dir / "popularity.json";
    } else {
        throw ConfigError("unknown analysis kind: " + kind);
    }

    save_json_doc(out, doc);
    record_stage("analyze:" + kind,
                 json{{"kind", kind},
                      {"granularity", granularity_name(args.granularity)},
                      {"labels", args.labels},
                      {"attribute", args.attribute},
                      {"target", args.target}},
                 inputs, {out}, {});
}

void Pipeline::run_report() {
    auto text = render_run_report(run_dir_);
    auto dir = stage_dir("report");
    write_file_atomic(dir / "report.md", text);
    record_stage("report", json::object(), {}, {dir / "report.md"}, {});
}

GroupOutcome Pipeline::run_recorded_stage(const std::string& stage_name, const json& args) {
    if (stage_name == "caption") {
        run_caption();
        return {};
    }
    if (stage_name == "propose") {
        run_propose();
        return {};
    }
    if (stage_name == "group")
        return run_group(args.value("selected", std::vector<std::string>{}));
    if (stage_name == "evaluate") {
        run_evaluate(args.value("gt", std::string()));
        return {};
    }
    if (stage_name == "report") {
        run_report();
        return {};
    }
    if (stage_name.rfind("analyze:", 0) == 0) {
        AnalyzeArgs analyze;
        analyze.granularity = granularity_from_name(args.value("granularity", "mid"));
        analyze.labels = args.value("labels", "");
        analyze.attribute = args.value("attribute", "");
        analyze.target = args.value("target", "");
        run_analyze(args.value("kind", stage_name.substr(8)), analyze);
        return {};
    }
    throw ConfigError("unknown stage in manifest: " + stage_name);
}

ReplayOutcome replay_run(const PipelineConfig& config, const std::string& run_id) {
    if (run_id.empty()) throw ConfigError("replay needs a run id");
    auto output_dir = resolve_path(config.base_dir, config.output_dir);
    auto original_path = output_dir / run_id / "manifest.json";
    if (!std::filesystem::exists(original_path))
        throw ConfigError("no manifest for run '" + run_id + "' under " + output_dir.string());
    auto original = load_json_doc(original_path);
    if (original.value("config_digest", "") != config_digest(config))
        throw ConfigError("config digest mismatch: run '" + run_id +
                          "' was produced by a different configuration");

    PipelineConfig replay_config = config;
    replay_config.run_id = run_id + ".replay";
    std::filesystem::remove_all(output_dir / replay_config.run_id);

    ReplayOutcome outcome;
    outcome.replay_run_id = replay_config.run_id;
    Pipeline pipeline(std::move(replay_config), /*cache_only=*/true);
    for (const auto& name_json : original.at("stage_order")) {
        auto name = name_json.get<std::string>();
        const auto& stage = original.at("stages").at(name);
        pipeline.run_recorded_stage(name, stage.value("args", json::object()));
    }

    const auto& replayed = pipeline.manifest();
    for (const auto& name_json : original.at("stage_order")) {
        auto name = name_json.get<std::string>();
        const auto& want = original.at("stages").at(name).at("outputs");
        const auto& got = replayed.at("stages").at(name).at("outputs");
        for (const auto& [artifact, digest] : want.items()) {
            if (!got.contains(artifact))
                outcome.mismatches.push_back(name + ": " + artifact + " missing from replay");
            else if (got.at(artifact) != digest)
                outcome.mismatches.push_back(name + ": " + artifact + " digest differs");
        }
        for (const auto& [artifact, digest] : got.items())
            if (!want.contains(artifact))
                outcome.mismatches.push_back(name + ": " + artifact + " not in original run");
    }
    outcome.ok = outcome.mismatches.empty();
    return outcome;
}

} // namespace facet
