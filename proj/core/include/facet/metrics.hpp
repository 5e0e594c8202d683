#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "facet/backend.hpp"
#include "facet/types.hpp"

namespace facet {

struct CriterionMatch {
    std::string predicted;
    std::string gt;
    double similarity = 0.0; // clamped to [0,1]
    bool matched = false;
};

// Pluggable semantic comparison of criterion names for TPR matching.
class NameMatcher {
public:
    virtual ~NameMatcher() = default;
    // similarity[i][j] between predicted[i] and gt[j], clamped to [0,1].
    virtual std::vector<std::vector<double>> similarity(
        const std::vector<std::string>& predicted, const std::vector<std::string>& gt) = 0;
    virtual std::string mode() const = 0;
};

class EmbeddingMatcher : public NameMatcher {
public:
    explicit EmbeddingMatcher(std::shared_ptr<EmbeddingBackend> embedder);
    std::vector<std::vector<double>> similarity(const std::vector<std::string>& predicted,
                                                const std::vector<std::string>& gt) override;
    std::string mode() const override { return "embedding"; }

private:
    std::shared_ptr<EmbeddingBackend> embedder_;
};

// Asks a chat model whether two names denote the same criterion; yes -> 1.
class LlmJudgeMatcher : public NameMatcher {
public:
    LlmJudgeMatcher(std::shared_ptr<ChatBackend> judge, std::string model_id);
    std::vector<std::vector<double>> similarity(const std::vector<std::string>& predicted,
                                                const std::vector<std::string>& gt) override;
    std::string mode() const override { return "llm-judge"; }

private:
    std::shared_ptr<ChatBackend> judge_;
    std::string model_id_;
};

struct TprResult {
    double tpr = 0.0;
    std::vector<CriterionMatch> matches; // accepted pairs only
    std::vector<std::string> uncovered_gt;
};

// Greedy one-to-one matching: candidate pairs sorted by similarity
// descending, accepted iff similarity >= threshold and both sides are still
// free. TPR = matched GT count / |gt|.
TprResult criteria_tpr(NameMatcher& matcher, const std::vector<std::string>& predicted,
                       const std::vector<std::string>& gt, double threshold = 0.7);

// Mean over unordered pairs of (1 - clamped cosine). Needs >= 2 names.
double criteria_diversity(EmbeddingBackend& embedder, const std::vector<std::string>& predicted);

struct ConfusionTable {
    std::vector<std::string> pred_clusters; // rows, non-sentinel
    std::vector<std::string> gt_labels;     // columns
    std::vector<std::vector<long long>> counts;
    long long evaluated = 0; // images in both pred and gt, sentinel included
};

// Co-occurrence over the images present in both the substructure and the
// label map. Sentinel-assigned images count toward `evaluated` but occupy no
// cell, making them always-wrong for accuracy.
ConfusionTable build_confusion(const Substructure& pred,
                               const std::map<std::string, std::string>& gt_labels);

// Best one-to-one cluster alignment (zero-padded square, Hungarian method);
// matched-entry sum / evaluated images.
double clustering_accuracy(const Substructure& pred,
                           const std::map<std::string, std::string>& gt_labels);

// Mean per-image clamped cosine between assigned name and GT label; sentinel
// images score 0.
double semantic_accuracy(EmbeddingBackend& embedder, const Substructure& pred,
                         const std::map<std::string, std::string>& gt_labels);

// 2ab/(a+b); 0 when both are 0. Arguments must lie in [0,1].
double harmonic_mean(double cacc, double sacc);

struct GranularityChoice {
    Granularity granularity = Granularity::mid;
    double cacc = 0.0;
    double sacc = 0.0;
};

// Highest CAcc among the provided substructures; ties prefer mid, then
// coarse, then fine.
GranularityChoice select_best_granularity(EmbeddingBackend& embedder,
                                          const std::vector<Substructure>& candidates,
                                          const std::map<std::string, std::string>& gt_labels);

struct EvalContext {
    std::shared_ptr<EmbeddingBackend> embedder;
    std::shared_ptr<NameMatcher> matcher; // defaults to EmbeddingMatcher(embedder)
    double tpr_threshold = 0.7;
};

// Full scorecard: TPR + diversity over criteria names, then per TPR-matched
// criterion the best-granularity CAcc/SAcc/HM. GT criteria without usable
// per-image labels are reported as skipped, not failed.
MetricReport evaluate_run(const EvalContext& ctx, const std::vector<Criterion>& criteria,
                          const std::map<std::string, std::vector<Substructure>>& substructures,
                          const GroundTruth& gt);

} // namespace facet
