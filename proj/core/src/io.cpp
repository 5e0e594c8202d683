#include "facet/io.hpp"

#include <fstream>
#include <sstream>

namespace facet {
namespace {

using nlohmann::json;

// json.exception -> ParseError with file context.
template <typename Fn>
auto with_context(const std::filesystem::path& path, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace

void to_json(json& j, const ImageRecord& rec) {
    j = json{{"image_id", rec.image_id}, {"source", rec.source}};
    if (rec.popularity) j["popularity"] = *rec.popularity;
    if (!rec.metadata.empty()) j["metadata"] = rec.metadata;
}

void from_json(const json& j, ImageRecord& rec) {
    j.at("image_id").get_to(rec.image_id);
    j.at("source").get_to(rec.source);
    rec.popularity.reset();
    if (j.contains("popularity") && !j["popularity"].is_null())
        rec.popularity = j["popularity"].get<double>();
    rec.metadata.clear();
    if (j.contains("metadata")) j["metadata"].get_to(rec.metadata);
}

void to_json(json& j, const Criterion& c) {
    j = json{{"criterion_id", c.criterion_id},
             {"name", c.name},
             {"provenance", provenance_name(c.provenance)},
             {"status", c.status == CriterionStatus::refined ? "refined" : "raw"}};
    if (!c.merged_from.empty()) j["merged_from"] = c.merged_from;
}

void from_json(const json& j, Criterion& c) {
    j.at("criterion_id").get_to(c.criterion_id);
    j.at("name").get_to(c.name);
    c.provenance = provenance_from_name(j.at("provenance").get<std::string>());
    auto status = j.at("status").get<std::string>();
    if (status == "raw")
        c.status = CriterionStatus::raw;
    else if (status == "refined")
        c.status = CriterionStatus::refined;
    else
        throw ParseError("unknown criterion status: " + status);
    c.merged_from.clear();
    if (j.contains("merged_from")) j["merged_from"].get_to(c.merged_from);
}

void to_json(json& j, const CaptionRecord& rec) {
    j = json{{"image_id", rec.image_id},
             {"text", rec.text},
             {"kind", rec.kind == CaptionKind::generic ? "generic" : "criterion_specific"}};
    if (rec.kind == CaptionKind::criterion_specific) j["criterion_id"] = rec.criterion_id;
}

void from_json(const json& j, CaptionRecord& rec) {
    j.at("image_id").get_to(rec.image_id);
    j.at("text").get_to(rec.text);
    auto kind = j.at("kind").get<std::string>();
    if (kind == "generic")
        rec.kind = CaptionKind::generic;
    else if (kind == "criterion_specific")
        rec.kind = CaptionKind::criterion_specific;
    else
        throw ParseError("unknown caption kind: " + kind);
    rec.criterion_id.clear();
    if (j.contains("criterion_id")) j["criterion_id"].get_to(rec.criterion_id);
}

void to_json(json& j, const ScoredTag& tag) {
    j = json{{"tag", tag.tag}, {"score", tag.score}};
}

void from_json(const json& j, ScoredTag& tag) {
    j.at("tag").get_to(tag.tag);
    j.at("score").get_to(tag.score);
}

void to_json(json& j, const TagRecord& rec) {
    j = json{{"image_id", rec.image_id}, {"tags", rec.tags}};
}

void from_json(const json& j, TagRecord& rec) {
    j.at("image_id").get_to(rec.image_id);
    j.at("tags").get_to(rec.tags);
}

void to_json(json& j, const CandidateHierarchy& h) {
    j = json{{"criterion_id", h.criterion_id},
             {"coarse", h.coarse},
             {"mid", h.mid},
             {"fine", h.fine}};
}

void from_json(const json& j, CandidateHierarchy& h) {
    j.at("criterion_id").get_to(h.criterion_id);
    j.at("coarse").get_to(h.coarse);
    j.at("mid").get_to(h.mid);
    j.at("fine").get_to(h.fine);
}

void to_json(json& j, const Substructure& sub) {
    j = json{{"criterion_id", sub.criterion_id},
             {"granularity", granularity_name(sub.granularity)},
             {"assignments", sub.assignments},
             {"cluster_names", sub.cluster_names}};
}

void from_json(const json& j, Substructure& sub) {
    j.at("criterion_id").get_to(sub.criterion_id);
    sub.granularity = granularity_from_name(j.at("granularity").get<std::string>());
    j.at("assignments").get_to(sub.assignments);
    j.at("cluster_names").get_to(sub.cluster_names);
}

void to_json(json& j, const Distribution& dist) {
    j = json{{"criterion_id", dist.criterion_id},
             {"granularity", granularity_name(dist.granularity)},
             {"counts", dist.counts},
             {"probabilities", dist.probabilities}};
}

void from_json(const json& j, Distribution& dist) {
    j.at("criterion_id").get_to(dist.criterion_id);
    dist.granularity = granularity_from_name(j.at("granularity").get<std::string>());
    j.at("counts").get_to(dist.counts);
    j.at("probabilities").get_to(dist.probabilities);
}

void to_json(json& j, const PerCriterionScore& score) {
    j = json{{"cacc", score.cacc},
             {"sacc", score.sacc},
             {"hm", score.hm},
             {"chosen_granularity", granularity_name(score.chosen_granularity)}};
}

void from_json(const json& j, PerCriterionScore& score) {
    j.at("cacc").get_to(score.cacc);
    j.at("sacc").get_to(score.sacc);
    j.at("hm").get_to(score.hm);
    score.chosen_granularity = granularity_from_name(j.at("chosen_granularity").get<std::string>());
}

void to_json(json& j, const MetricReport& report) {
    j = json{{"tpr", report.tpr},
             {"diversity", report.diversity},
             {"per_criterion", report.per_criterion},
             {"matched_gt", report.matched_gt},
             {"uncovered_gt", report.uncovered_gt},
             {"skipped", report.skipped},
             {"matcher_mode", report.matcher_mode},
             {"notes", report.notes}};
}

void from_json(const json& j, MetricReport& report) {
    j.at("tpr").get_to(report.tpr);
    j.at("diversity").get_to(report.diversity);
    j.at("per_criterion").get_to(report.per_criterion);
    j.at("matched_gt").get_to(report.matched_gt);
    j.at("uncovered_gt").get_to(report.uncovered_gt);
    j.at("skipped").get_to(report.skipped);
    j.at("matcher_mode").get_to(report.matcher_mode);
    j.at("notes").get_to(report.notes);
}

void to_json(json& j, const GroundTruth& gt) {
    j = json{{"criteria", gt.criteria}, {"labels", gt.labels}};
}

void from_json(const json& j, GroundTruth& gt) {
    j.at("criteria").get_to(gt.criteria);
    j.at("labels").get_to(gt.labels);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ConfigError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json load_json_doc(const std::filesystem::path& path) {
    auto text = read_file(path);
    return with_context(path, [&] { return json::parse(text); });
}

void save_json_doc(const std::filesystem::path& path, const json& doc) {
    write_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    auto text = read_file(path);
    std::vector<json> rows;
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

Collection load_collection(const std::filesystem::path& manifest_path) {
    auto rows = read_jsonl(manifest_path);
    std::vector<ImageRecord> records;
    records.reserve(rows.size());
    for (const auto& row : rows)
        records.push_back(with_context(manifest_path, [&] { return row.get<ImageRecord>(); }));
    return validate_collection(std::move(records));
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    auto doc = load_json_doc(path);
    return with_context(path, [&]() -> GroundTruth {
        GroundTruth gt;
        if (doc.contains("criteria")) {
            doc.at("criteria").get_to(gt.criteria);
            if (doc.contains("labels")) doc.at("labels").get_to(gt.labels);
        } else {
            doc.get_to(gt.labels);
            for (const auto& [name, _] : gt.labels) gt.criteria.push_back(name);
        }
        if (gt.criteria.empty()) throw ParseError(path.string() + ": no criteria");
        return gt;
    });
}

std::vector<CaptionRecord> load_captions(const std::filesystem::path& path) {
    std::vector<CaptionRecord> records;
    for (const auto& row : read_jsonl(path))
        records.push_back(with_context(path, [&] { return row.get<CaptionRecord>(); }));
    return records;
}

void save_captions(const std::filesystem::path& path, const std::vector<CaptionRecord>& records) {
    std::vector<json> rows(records.begin(), records.end());
    write_jsonl(path, rows);
}

std::vector<TagRecord> load_tags(const std::filesystem::path& path) {
    std::vector<TagRecord> records;
    for (const auto& row : read_jsonl(path))
        records.push_back(with_context(path, [&] { return row.get<TagRecord>(); }));
    return records;
}

void save_tags(const std::filesystem::path& path, const std::vector<TagRecord>& records) {
    std::vector<json> rows(records.begin(), records.end());
    write_jsonl(path, rows);
}

std::vector<Criterion> load_criteria(const std::filesystem::path& path) {
    auto doc = load_json_doc(path);
    return with_context(path,
                        [&] { return doc.at("criteria").get<std::vector<Criterion>>(); });
}

void save_criteria(const std::filesystem::path& path, const std::vector<Criterion>& criteria) {
    save_json_doc(path, json{{"criteria", criteria}});
}

Substructure load_substructure(const std::filesystem::path& path) {
    auto doc = load_json_doc(path);
    return with_context(path, [&] { return doc.get<Substructure>(); });
}

void save_substructure(const std::filesystem::path& path, const Substructure& sub) {
    save_json_doc(path, json(sub));
}

CandidateHierarchy load_hierarchy(const std::filesystem::path& path) {
    auto doc = load_json_doc(path);
    return with_context(path, [&] { return doc.get<CandidateHierarchy>(); });
}

void save_hierarchy(const std::filesystem::path& path, const CandidateHierarchy& hierarchy) {
    save_json_doc(path, json(hierarchy));
}

} // namespace facet
