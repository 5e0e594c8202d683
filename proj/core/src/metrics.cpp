#include "facet/metrics.hpp"

#include <algorithm>
#include <set>

#include "facet/assignment.hpp"
#include "facet/similarity.hpp"

namespace facet {
namespace {

// One embedding call for all unique texts; lookups stay exact-string.
std::map<std::string, std::vector<double>> embed_unique(EmbeddingBackend& embedder,
                                                        const std::set<std::string>& texts) {
    std::vector<std::string> ordered(texts.begin(), texts.end());
    auto vectors = embedder.embed(ordered);
    std::map<std::string, std::vector<double>> out;
    for (std::size_t i = 0; i < ordered.size(); ++i) out[ordered[i]] = std::move(vectors[i]);
    return out;
}

struct EvaluatedImage {
    std::string image_id;
    std::string pred_name; // empty when sentinel
    std::string gt_label;
};

std::vector<EvaluatedImage> overlap_images(const Substructure& pred,
                                           const std::map<std::string, std::string>& gt_labels) {
    std::vector<EvaluatedImage> out;
    for (const auto& [image_id, cluster] : pred.assignments) {
        auto it = gt_labels.find(image_id);
        if (it == gt_labels.end()) continue;
        out.push_back({image_id, is_unassigned(cluster) ? "" : cluster, it->second});
    }
    if (out.empty())
        throw ValidationError("no overlapping image_ids between prediction and ground truth");
    return out;
}

} // namespace

EmbeddingMatcher::EmbeddingMatcher(std::shared_ptr<EmbeddingBackend> embedder)
    : embedder_(std::move(embedder)) {}

std::vector<std::vector<double>> EmbeddingMatcher::similarity(
    const std::vector<std::string>& predicted, const std::vector<std::string>& gt) {
    std::vector<std::string> all(predicted.begin(), predicted.end());
    all.insert(all.end(), gt.begin(), gt.end());
    auto vectors = embedder_->embed(all);
    std::vector<std::vector<double>> sim(predicted.size(), std::vector<double>(gt.size(), 0.0));
    for (std::size_t i = 0; i < predicted.size(); ++i)
        for (std::size_t j = 0; j < gt.size(); ++j)
            sim[i][j] = clamp01(cosine(vectors[i], vectors[predicted.size() + j]));
    return sim;
}

LlmJudgeMatcher::LlmJudgeMatcher(std::shared_ptr<ChatBackend> judge, std::string model_id)
    : judge_(std::move(judge)), model_id_(std::move(model_id)) {}

std::vector<std::vector<double>> LlmJudgeMatcher::similarity(
    const std::vector<std::string>& predicted, const std::vector<std::string>& gt) {
    std::vector<std::vector<double>> sim(predicted.size(), std::vector<double>(gt.size(), 0.0));
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        for (std::size_t j = 0; j < gt.size(); ++j) {
            ChatRequest request;
            request.system_prompt = "You are a helpful assistant.";
            request.user_prompt =
                "I am comparing names of image-grouping criteria. Do the names \"" +
                predicted[i] + "\" and \"" + gt[j] +
                "\" refer to the same grouping criterion? Answer with only \"yes\" or \"no\".";
            request.max_tokens = 8;
            request.model_id = model_id_;
            auto reply = normalize_name(judge_->chat_complete(request));
            sim[i][j] = reply.rfind("yes", 0) == 0 ? 1.0 : 0.0;
        }
    }
    return sim;
}

TprResult criteria_tpr(NameMatcher& matcher, const std::vector<std::string>& predicted,
                       const std::vector<std::string>& gt, double threshold) {
    if (gt.empty()) throw ValidationError("TPR requires a non-empty ground-truth criteria set");
    TprResult result;
    if (predicted.empty()) {
        result.uncovered_gt = gt;
        return result;
    }
    auto sim = matcher.similarity(predicted, gt);

    struct Pair {
        double similarity;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(predicted.size() * gt.size());
    for (std::size_t i = 0; i < predicted.size(); ++i)
        for (std::size_t j = 0; j < gt.size(); ++j) pairs.push_back({sim[i][j], i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    std::vector<bool> pred_used(predicted.size(), false), gt_used(gt.size(), false);
    for (const auto& pair : pairs) {
        if (pair.similarity < threshold) break;
        if (pred_used[pair.i] || gt_used[pair.j]) continue;
        pred_used[pair.i] = true;
        gt_used[pair.j] = true;
        result.matches.push_back({predicted[pair.i], gt[pair.j], pair.similarity, true});
    }
    for (std::size_t j = 0; j < gt.size(); ++j)
        if (!gt_used[j]) result.uncovered_gt.push_back(gt[j]);
    result.tpr = static_cast<double>(result.matches.size()) / static_cast<double>(gt.size());
    return result;
}

double criteria_diversity(EmbeddingBackend& embedder, const std::vector<std::string>& predicted) {
    if (predicted.size() < 2)
        throw ValidationError("diversity requires at least two predicted criteria");
    auto vectors = embedder.embed(predicted);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            sum += 1.0 - clamp01(cosine(vectors[i], vectors[j]));
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

ConfusionTable build_confusion(const Substructure& pred,
                               const std::map<std::string, std::string>& gt_labels) {
    auto evaluated = overlap_images(pred, gt_labels);

    ConfusionTable table;
    table.evaluated = static_cast<long long>(evaluated.size());
    table.pred_clusters = pred.cluster_names;
    std::set<std::string> labels;
    for (const auto& image : evaluated) labels.insert(image.gt_label);
    table.gt_labels.assign(labels.begin(), labels.end());

    std::map<std::string, std::size_t> row_of, col_of;
    for (std::size_t r = 0; r < table.pred_clusters.size(); ++r)
        row_of[table.pred_clusters[r]] = r;
    for (std::size_t c = 0; c < table.gt_labels.size(); ++c) col_of[table.gt_labels[c]] = c;

    table.counts.assign(table.pred_clusters.size(),
                        std::vector<long long>(table.gt_labels.size(), 0));
    for (const auto& image : evaluated) {
        if (image.pred_name.empty()) continue; // sentinel occupies no cell
        auto row = row_of.find(image.pred_name);
        if (row == row_of.end())
            throw ValidationError("assignment references unlisted cluster '" + image.pred_name +
                                  "'");
        table.counts[row->second][col_of[image.gt_label]] += 1;
    }
    return table;
}

double clustering_accuracy(const Substructure& pred,
                           const std::map<std::string, std::string>& gt_labels) {
    auto table = build_confusion(pred, gt_labels);
    if (table.pred_clusters.empty()) return 0.0; // every image sentinel

    std::size_t n = std::max(table.pred_clusters.size(), table.gt_labels.size());
    std::vector<std::vector<long long>> padded(n, std::vector<long long>(n, 0));
    for (std::size_t r = 0; r < table.pred_clusters.size(); ++r)
        for (std::size_t c = 0; c < table.gt_labels.size(); ++c)
            padded[r][c] = table.counts[r][c];

    auto solution = max_weight_assignment(padded);
    return static_cast<double>(solution.total) / static_cast<double>(table.evaluated);
}

double semantic_accuracy(EmbeddingBackend& embedder, const Substructure& pred,
                         const std::map<std::string, std::string>& gt_labels) {
    auto evaluated = overlap_images(pred, gt_labels);
    std::set<std::string> texts;
    for (const auto& image : evaluated) {
        if (image.pred_name.empty()) continue;
        texts.insert(image.pred_name);
        texts.insert(image.gt_label);
    }
    std::map<std::string, std::vector<double>> vectors;
    if (!texts.empty()) vectors = embed_unique(embedder, texts);

    double sum = 0.0;
    for (const auto& image : evaluated) {
        if (image.pred_name.empty()) continue;
        sum += clamp01(cosine(vectors.at(image.pred_name), vectors.at(image.gt_label)));
    }
    return sum / static_cast<double>(evaluated.size());
}

double harmonic_mean(double cacc, double sacc) {
    if (cacc < 0.0 || cacc > 1.0 || sacc < 0.0 || sacc > 1.0)
        throw ValidationError("harmonic mean arguments must lie in [0,1]");
    double total = cacc + sacc;
    if (total == 0.0) return 0.0;
    return 2.0 * cacc * sacc / total;
}

GranularityChoice select_best_granularity(EmbeddingBackend& embedder,
                                          const std::vector<Substructure>& candidates,
                                          const std::map<std::string, std::string>& gt_labels) {
    if (candidates.empty()) throw ValidationError("no substructures to select among");
    std::set<Granularity> seen;
    for (const auto& sub : candidates)
        if (!seen.insert(sub.granularity).second)
            throw ValidationError("duplicate granularity among substructures");

    // Tie preference: mid, then coarse, then fine.
    auto preference = [](Granularity g) {
        switch (g) {
            case Granularity::mid: return 0;
            case Granularity::coarse: return 1;
            case Granularity::fine: return 2;
        }
        return 3;
    };
    std::vector<const Substructure*> ordered;
    for (const auto& sub : candidates) ordered.push_back(&sub);
    std::sort(ordered.begin(), ordered.end(), [&](const Substructure* a, const Substructure* b) {
        return preference(a->granularity) < preference(b->granularity);
    });

    const Substructure* best = nullptr;
    double best_cacc = -1.0;
    for (const auto* sub : ordered) {
        double cacc = clustering_accuracy(*sub, gt_labels);
        if (cacc > best_cacc) {
            best_cacc = cacc;
            best = sub;
        }
    }
    GranularityChoice choice;
    choice.granularity = best->granularity;
    choice.cacc = best_cacc;
    choice.sacc = semantic_accuracy(embedder, *best, gt_labels);
    return choice;
}

MetricReport evaluate_run(const EvalContext& ctx, const std::vector<Criterion>& criteria,
                          const std::map<std::string, std::vector<Substructure>>& substructures,
                          const GroundTruth& gt) {
    if (!ctx.embedder) throw ConfigError("evaluation requires an embedding backend");
    auto matcher = ctx.matcher;
    if (!matcher) matcher = std::make_shared<EmbeddingMatcher>(ctx.embedder);

    std::vector<std::string> names;
    names.reserve(criteria.size());
    for (const auto& criterion : criteria) names.push_back(criterion.name);

    MetricReport report;
    report.matcher_mode = matcher->mode();
    std::vector<std::string> notes;

    auto tpr = criteria_tpr(*matcher, names, gt.criteria, ctx.tpr_threshold);
    report.tpr = tpr.tpr;
    report.uncovered_gt = tpr.uncovered_gt;

    if (names.size() >= 2) {
        report.diversity = criteria_diversity(*ctx.embedder, names);
    } else {
        report.diversity = 0.0;
        notes.push_back("diversity undefined for fewer than two criteria");
    }

    for (const auto& match : tpr.matches) {
        const Criterion* criterion = nullptr;
        for (const auto& candidate : criteria) {
            if (names_equal(candidate.name, match.predicted)) {
                criterion = &candidate;
                break;
            }
        }
        if (!criterion) continue;
        report.matched_gt[criterion->criterion_id] = match.gt;

        const auto* labels = gt.labels_for(match.gt);
        if (!labels || labels->empty()) {
            report.skipped.push_back(criterion->criterion_id);
            notes.push_back("no per-image labels for ground-truth criterion '" + match.gt + "'");
            continue;
        }
        auto subs = substructures.find(criterion->criterion_id);
        if (subs == substructures.end() || subs->second.empty()) {
            report.skipped.push_back(criterion->criterion_id);
            notes.push_back("no substructures for criterion '" + criterion->name + "'");
            continue;
        }
        auto choice = select_best_granularity(*ctx.embedder, subs->second, *labels);
        PerCriterionScore score;
        score.cacc = choice.cacc;
        score.sacc = choice.sacc;
        score.hm = harmonic_mean(choice.cacc, choice.sacc);
        score.chosen_granularity = choice.granularity;
        report.per_criterion[criterion->criterion_id] = score;
    }

    for (std::size_t i = 0; i < notes.size(); ++i) {
        if (i) report.notes += "; ";
        report.notes += notes[i];
    }
    return report;
}

} // namespace facet
