#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "facet/io.hpp"
#include "facet/pipeline.hpp"

namespace facet {

using nlohmann::json;

namespace {

std::string fmt(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", value);
    return buffer;
}

std::string bar(std::int64_t count, std::int64_t max_count) {
    if (count <= 0 || max_count <= 0) return "";
    auto width = static_cast<std::size_t>((40 * count + max_count - 1) / max_count);
    return std::string(std::max<std::size_t>(width, 1), '#');
}

json load_optional(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return nullptr;
    return load_json_doc(path);
}

} // namespace

std::string render_run_report(const std::filesystem::path& run_dir) {
    std::string out = "# Run Summary\n";

    auto refined_path = run_dir / "propose" / "refined_criteria.json";
    if (std::filesystem::exists(refined_path)) {
        auto criteria = load_criteria(refined_path);
        out += "\n## Criteria\n\n";
        out += "| id | name | provenance | merged from |\n";
        out += "| --- | --- | --- | --- |\n";
        for (const auto& criterion : criteria) {
            std::string merged;
            for (const auto& id : criterion.merged_from) {
                if (!merged.empty()) merged += ", ";
                merged += id;
            }
            out += "| " + criterion.criterion_id + " | " + criterion.name + " | " +
                   provenance_name(criterion.provenance) + " | " + merged + " |\n";
        }
        auto refinement = load_optional(run_dir / "propose" / "refinement.json");
        if (!refinement.is_null()) {
            auto discarded = refinement.value("discarded", std::vector<std::string>{});
            out += "\nDiscarded raw criteria: " + std::to_string(discarded.size());
            if (refinement.value("unrefined", false))
                out += " (pool passed through unrefined)";
            out += "\n";
        }
    } else {
        out += "\nNo criteria yet; run the propose stage.\n";
    }

    auto summary = load_optional(run_dir / "group" / "summary.json");
    if (!summary.is_null()) {
        out += "\n## Groupings\n\n";
        out += "| criterion | status | substructures | warnings |\n";
        out += "| --- | --- | --- | --- |\n";
        for (const auto& row : summary) {
            auto status = row.value("status", "?");
            std::string detail = status == "failed" ? row.value("message", "") : "";
            auto warning_count =
                row.contains("warnings") ? row["warnings"].size() : std::size_t{0};
            out += "| " + row.value("criterion_id", "?") + " " + row.value("name", "") +
                   " | " + status + " | " +
                   std::to_string(row.value("substructures", std::size_t{0})) + " | " +
                   (detail.empty() ? std::to_string(warning_count) : detail) + " |\n";
        }

        out += "\n## Cluster Sizes\n";
        for (const auto& row : summary) {
            if (row.value("status", "") != "ok") continue;
            auto criterion_id = row.value("criterion_id", "");
            for (auto granularity : kAllGranularities) {
                auto path = run_dir / "group" / criterion_id /
                            (std::string("substructure_") + granularity_name(granularity) +
                             ".json");
                if (!std::filesystem::exists(path)) continue;
                auto sub = load_substructure(path);
                auto dist = Distribution::from_substructure(sub, /*include_sentinel=*/true);
                std::int64_t max_count = 0;
                for (const auto& [name, count] : dist.counts)
                    max_count = std::max(max_count, count);
                out += "\n### " + criterion_id + " (" + granularity_name(granularity) + ")\n\n";
                out += "```\n";
                for (const auto& [name, count] : dist.counts)
                    out += name + ": " + std::to_string(count) + " " + bar(count, max_count) +
                           "\n";
                out += "```\n";
            }
        }
    }

    auto report = load_optional(run_dir / "evaluate" / "report.json");
    if (!report.is_null()) {
        out += "\n## Evaluation\n\n";
        out += "TPR: " + fmt(report.value("tpr", 0.0)) +
               "; diversity: " + fmt(report.value("diversity", 0.0)) +
               "; matcher: " + report.value("matcher_mode", "?") + "\n";
        out += "\n| criterion | ground truth | granularity | CAcc | SAcc | HM |\n";
        out += "| --- | --- | --- | --- | --- | --- |\n";
        if (report.contains("per_criterion")) {
            for (const auto& [criterion_id, score] : report["per_criterion"].items()) {
                std::string gt_name;
                if (report.contains("matched_gt") && report["matched_gt"].contains(criterion_id))
                    gt_name = report["matched_gt"][criterion_id].get<std::string>();
                out += "| " + criterion_id + " | " + gt_name + " | " +
                       score.value("chosen_granularity", "?") + " | " +
                       fmt(score.value("cacc", 0.0)) + " | " + fmt(score.value("sacc", 0.0)) +
                       " | " + fmt(score.value("hm", 0.0)) + " |\n";
            }
        }
        auto uncovered = report.value("uncovered_gt", std::vector<std::string>{});
        if (!uncovered.empty()) {
            out += "\nUncovered ground-truth criteria:";
            for (const auto& name : uncovered) out += " " + name + ";";
            out += "\n";
        }
        auto skipped = report.value("skipped", std::vector<std::string>{});
        if (!skipped.empty()) {
            out += "\nMatched but not evaluable (no labels):";
            for (const auto& name : skipped) out += " " + name + ";";
            out += "\n";
        }
        auto notes = report.value("notes", std::string());
        if (!notes.empty()) out += "\nNotes: " + notes + "\n";
    }

    auto bias = load_optional(run_dir / "analyze" / "bias.json");
    if (!bias.is_null()) {
        out += "\n## Bias (" + bias.value("granularity", "?") + ")\n\n";
        out += "| criterion | intensity | dominant cluster | note |\n";
        out += "| --- | --- | --- | --- |\n";
        for (const auto& finding : bias.value("findings", json::array())) {
            std::string note;
            if (finding.value("degenerate", false)) note = "single cluster";
            if (finding.value("dominant_tied", false))
                note += note.empty() ? "tied dominant" : "; tied dominant";
            out += "| " + finding.value("criterion_id", "?") + " | " +
                   fmt(finding.value("intensity", 0.0)) + " | " +
                   finding.value("dominant", "") + " | " + note + " |\n";
        }
    }

    auto correlation = load_optional(run_dir / "analyze" / "correlation.json");
    if (!correlation.is_null()) {
        out += "\n## Correlation\n\n";
        out += "Score: " + fmt(correlation.value("score", 0.0)) + "\n";
        if (correlation.contains("source")) out += "Source: " + correlation["source"].dump() + "\n";
    }

    auto popularity = load_optional(run_dir / "analyze" / "popularity.json");
    if (!popularity.is_null()) {
        out += "\n## Popularity (" + popularity.value("granularity", "?") + ")\n\n";
        out += "| criterion | viral cluster | major cluster | missing |\n";
        out += "| --- | --- | --- | --- |\n";
        for (const auto& finding : popularity.value("findings", json::array())) {
            if (finding.contains("error")) {
                out += "| " + finding.value("criterion_id", "?") + " | - | - | " +
                       finding.value("error", "") + " |\n";
                continue;
            }
            out += "| " + finding.value("criterion_id", "?") + " | " +
                   finding.value("viral", "") +
                   (finding.value("viral_tied", false) ? " (tied)" : "") + " | " +
                   finding.value("major", "") +
                   (finding.value("major_tied", false) ? " (tied)" : "") + " | " +
                   fmt(finding.value("missing_fraction", 0.0)) + " |\n";
        }
    }

    return out;
}

} // namespace facet
