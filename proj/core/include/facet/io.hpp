#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "facet/types.hpp"

namespace facet {

// ADL hooks so nlohmann::json converts core types implicitly. Serializing then
// deserializing reproduces a structurally equal value.
void to_json(nlohmann::json& j, const ImageRecord& rec);
void from_json(const nlohmann::json& j, ImageRecord& rec);
void to_json(nlohmann::json& j, const Criterion& c);
void from_json(const nlohmann::json& j, Criterion& c);
void to_json(nlohmann::json& j, const CaptionRecord& rec);
void from_json(const nlohmann::json& j, CaptionRecord& rec);
void to_json(nlohmann::json& j, const ScoredTag& tag);
void from_json(const nlohmann::json& j, ScoredTag& tag);
void to_json(nlohmann::json& j, const TagRecord& rec);
void from_json(const nlohmann::json& j, TagRecord& rec);
void to_json(nlohmann::json& j, const CandidateHierarchy& h);
void from_json(const nlohmann::json& j, CandidateHierarchy& h);
void to_json(nlohmann::json& j, const Substructure& sub);
void from_json(const nlohmann::json& j, Substructure& sub);
void to_json(nlohmann::json& j, const Distribution& dist);
void from_json(const nlohmann::json& j, Distribution& dist);
void to_json(nlohmann::json& j, const PerCriterionScore& score);
void from_json(const nlohmann::json& j, PerCriterionScore& score);
void to_json(nlohmann::json& j, const MetricReport& report);
void from_json(const nlohmann::json& j, MetricReport& report);
void to_json(nlohmann::json& j, const GroundTruth& gt);
void from_json(const nlohmann::json& j, GroundTruth& gt);

// --- files ---------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Single JSON document, indented, trailing newline.
nlohmann::json load_json_doc(const std::filesystem::path& path);
void save_json_doc(const std::filesystem::path& path, const nlohmann::json& doc);

// One JSON object per line; blank lines ignored on read.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

// --- artifacts -------------------------------------------------------------

Collection load_collection(const std::filesystem::path& manifest_path);

// Accepts either {"criteria": [...], "labels": {...}} or a bare
// criterion -> image_id -> label mapping (criteria inferred from the keys).
GroundTruth load_ground_truth(const std::filesystem::path& path);

std::vector<CaptionRecord> load_captions(const std::filesystem::path& path);
void save_captions(const std::filesystem::path& path, const std::vector<CaptionRecord>& records);

std::vector<TagRecord> load_tags(const std::filesystem::path& path);
void save_tags(const std::filesystem::path& path, const std::vector<TagRecord>& records);

std::vector<Criterion> load_criteria(const std::filesystem::path& path);
void save_criteria(const std::filesystem::path& path, const std::vector<Criterion>& criteria);

Substructure load_substructure(const std::filesystem::path& path);
void save_substructure(const std::filesystem::path& path, const Substructure& sub);

CandidateHierarchy load_hierarchy(const std::filesystem::path& path);
void save_hierarchy(const std::filesystem::path& path, const CandidateHierarchy& hierarchy);

} // namespace facet
