#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <facet/errors.hpp>
#include <facet/grid.hpp>
#include <facet/io.hpp>
#include <facet/pipeline.hpp>

int main(int argc, char** argv) {
    CLI::App app{"criteria discovery and semantic multiple clustering pipeline"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "pipeline config file (JSON)")->required();
    std::string run_id;
    app.add_option("--run-id", run_id, "override the run id");
    std::string output_dir;
    app.add_option("--output-dir", output_dir, "override the artifact output directory");
    std::string cache_dir;
    app.add_option("--cache-dir", cache_dir, "override the response cache directory");
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override the shuffle seed");
    int workers = 0;
    auto* workers_opt = app.add_option("--workers", workers, "override per-item fan-out");
    int max_in_flight = 0;
    auto* in_flight_opt =
        app.add_option("--max-in-flight", max_in_flight, "override raw-call concurrency");
    double sample_fraction = 1.0;
    auto* sample_opt = app.add_option("--sample-fraction", sample_fraction,
                                      "uniform proposer-input subsample in (0, 1]");
    std::string proposer_kind;
    app.add_option("--proposer", proposer_kind, "proposer kind")
        ->check(CLI::IsMember({"caption", "tag", "image_grid"}));
    std::string grouper_kind;
    app.add_option("--grouper", grouper_kind, "grouper kind")
        ->check(CLI::IsMember({"caption", "vqa", "tag"}));
    std::string mode;
    app.add_option("--mode", mode, "caption grouper mode")
        ->check(CLI::IsMember({"multi", "flat", "initial"}));
    std::string matcher;
    app.add_option("--matcher", matcher, "criteria matcher for evaluation")
        ->check(CLI::IsMember({"embedding", "llm-judge"}));

    auto* caption_cmd = app.add_subcommand("caption", "generic captions for every image");
    auto* propose_cmd = app.add_subcommand("propose", "discover and refine grouping criteria");
    auto* group_cmd = app.add_subcommand("group", "cluster images under each criterion");
    std::vector<std::string> criteria;
    group_cmd->add_option("--criteria", criteria, "criterion ids or names (default: all)")
        ->delimiter(',');
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a run against ground truth");
    std::string gt_path;
    evaluate_cmd->add_option("--gt", gt_path, "ground-truth labels file (JSON)")->required();
    auto* analyze_cmd =
        app.add_subcommand("analyze", "bias, correlation, or popularity analytics");
    std::string kind;
    analyze_cmd->add_option("--kind", kind, "analysis kind")
        ->required()
        ->check(CLI::IsMember({"bias", "correlation", "popularity"}));
    std::string granularity = "mid";
    analyze_cmd->add_option("--granularity", granularity, "substructure granularity")
        ->check(CLI::IsMember({"coarse", "mid", "fine"}));
    std::string labels;
    analyze_cmd->add_option("--labels", labels, "two-column attribute/target label file");
    std::string attribute;
    analyze_cmd->add_option("--attribute", attribute, "attribute criterion id");
    std::string target;
    analyze_cmd->add_option("--target", target, "target criterion id");
    auto* replay_cmd =
        app.add_subcommand("replay", "re-run from the cache and compare artifact digests");
    std::string replay_id;
    replay_cmd->add_option("--run", replay_id, "run id to replay (default: configured run)");
    auto* report_cmd = app.add_subcommand("report", "render the run summary document");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    try {
        auto config = facet::load_pipeline_config(config_path);
        if (!run_id.empty()) config.run_id = run_id;
        if (!output_dir.empty()) config.output_dir = output_dir;
        if (!cache_dir.empty()) config.cache_dir = cache_dir;
        if (seed_opt->count() > 0) config.seed = seed;
        if (workers_opt->count() > 0) config.workers = workers;
        if (in_flight_opt->count() > 0) config.policy.max_in_flight = max_in_flight;
        if (sample_opt->count() > 0) config.sample_fraction = sample_fraction;
        if (!proposer_kind.empty()) config.proposer.kind = proposer_kind;
        if (!grouper_kind.empty()) config.grouper.kind = grouper_kind;
        if (!mode.empty()) config.grouper.mode = facet::group_mode_from_name(mode);
        if (!matcher.empty()) config.matcher = matcher;
#ifdef FACET_HAVE_IMAGING
        if (config.proposer.composer == "raster")
            config.composer_override = facet::make_raster_composer();
#endif

        if (*replay_cmd) {
            if (replay_id.empty())
                replay_id = config.run_id.empty() ? facet::default_run_id(config)
                                                  : config.run_id;
            auto outcome = facet::replay_run(config, replay_id);
            for (const auto& mismatch : outcome.mismatches)
                std::fprintf(stderr, "mismatch %s\n", mismatch.c_str());
            if (!outcome.ok) {
                std::fprintf(stderr, "replay of %s diverged (%zu mismatches)\n",
                             replay_id.c_str(), outcome.mismatches.size());
                return 1;
            }
            std::printf("replay of %s reproduced every artifact digest (as %s)\n",
                        replay_id.c_str(), outcome.replay_run_id.c_str());
            return 0;
        }

        facet::Pipeline pipeline(std::move(config));
        if (*caption_cmd) {
            pipeline.run_caption();
            std::printf("captions written under %s\n", pipeline.run_dir().c_str());
        } else if (*propose_cmd) {
            pipeline.run_propose();
            auto refined = facet::load_criteria(pipeline.run_dir() / "propose" /
                                                "refined_criteria.json");
            std::printf("%zu refined criteria:\n", refined.size());
            for (const auto& criterion : refined)
                std::printf("  %s  %s\n", criterion.criterion_id.c_str(),
                            criterion.name.c_str());
        } else if (*group_cmd) {
            auto outcome = pipeline.run_group(criteria);
            std::printf("grouped %zu criteria, %zu failed\n", outcome.attempted,
                        outcome.failed);
            if (outcome.failed > 0) return 1;
        } else if (*evaluate_cmd) {
            // Command-line paths are shell-relative; only config fields
            // resolve against the config directory.
            auto report = pipeline.run_evaluate(std::filesystem::absolute(gt_path));
            std::printf("TPR %.4f  diversity %.4f  (matcher: %s)\n", report.tpr,
                        report.diversity, report.matcher_mode.c_str());
            for (const auto& [criterion_id, score] : report.per_criterion) {
                auto matched = report.matched_gt.find(criterion_id);
                std::printf("  %s -> %s  [%s]  CAcc %.4f  SAcc %.4f  HM %.4f\n",
                            criterion_id.c_str(),
                            matched == report.matched_gt.end() ? "?"
                                                               : matched->second.c_str(),
                            facet::granularity_name(score.chosen_granularity), score.cacc,
                            score.sacc, score.hm);
            }
            for (const auto& name : report.uncovered_gt)
                std::printf("  uncovered ground truth: %s\n", name.c_str());
            for (const auto& criterion_id : report.skipped)
                std::printf("  skipped (no labels): %s\n", criterion_id.c_str());
            if (!report.notes.empty()) std::printf("  notes: %s\n", report.notes.c_str());
        } else if (*analyze_cmd) {
            facet::AnalyzeArgs args;
            args.granularity = facet::granularity_from_name(granularity);
            args.labels =
                labels.empty() ? labels : std::filesystem::absolute(labels).string();
            args.attribute = attribute;
            args.target = target;
            pipeline.run_analyze(kind, args);
            std::printf("wrote %s\n",
                        (pipeline.run_dir() / "analyze" / (kind + ".json")).c_str());
        } else if (*report_cmd) {
            pipeline.run_report();
            std::printf("wrote %s\n", (pipeline.run_dir() / "report" / "report.md").c_str());
        }
        return 0;
    } catch (const facet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const facet::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
