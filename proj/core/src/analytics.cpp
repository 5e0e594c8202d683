#include "facet/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "facet/similarity.hpp"

namespace facet {
namespace {

double entropy(const std::vector<double>& probabilities) {
    double h = 0.0;
    for (double p : probabilities)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

} // namespace

BiasScore bias_intensity(const Distribution& dist) {
    if (dist.counts.empty()) throw ValidationError("bias intensity of an empty distribution");
    std::size_t k = dist.counts.size();
    if (k == 1) return {1.0, true};

    std::vector<double> probabilities;
    probabilities.reserve(k);
    for (const auto& [name, p] : dist.probabilities) probabilities.push_back(p);
    return {1.0 - entropy(probabilities) / std::log(static_cast<double>(k)), false};
}

DominantCluster dominant_cluster(const Distribution& dist) {
    if (dist.counts.empty()) throw ValidationError("dominant cluster of an empty distribution");
    // counts is name-ordered, so the first maximum is the lexicographic winner.
    const std::string* best = nullptr;
    std::int64_t best_count = -1;
    bool tied = false;
    for (const auto& [name, count] : dist.counts) {
        if (count > best_count) {
            best = &name;
            best_count = count;
            tied = false;
        } else if (count == best_count) {
            tied = true;
        }
    }
    return {*best, tied};
}

std::vector<BiasFinding> bias_report(const std::vector<Substructure>& substructures,
                                     Granularity granularity, bool include_sentinel) {
    std::vector<BiasFinding> findings;
    for (const auto& sub : substructures) {
        if (sub.granularity != granularity) continue;
        auto dist = Distribution::from_substructure(sub, include_sentinel);
        auto score = bias_intensity(dist);
        auto dominant = dominant_cluster(dist);
        BiasFinding finding;
        finding.criterion_id = sub.criterion_id;
        finding.granularity = granularity;
        finding.intensity = score.value;
        finding.degenerate = score.degenerate;
        finding.dominant = dominant.name;
        finding.dominant_tied = dominant.tied;
        finding.distribution = std::move(dist);
        findings.push_back(std::move(finding));
    }
    std::sort(findings.begin(), findings.end(), [](const BiasFinding& a, const BiasFinding& b) {
        if (a.intensity != b.intensity) return a.intensity > b.intensity;
        return a.criterion_id < b.criterion_id;
    });
    return findings;
}

std::int64_t JointDistribution::total() const {
    std::int64_t sum = 0;
    for (const auto& [a, row] : counts)
        for (const auto& [y, count] : row) sum += count;
    return sum;
}

JointDistribution JointDistribution::from_substructures(const Substructure& attribute,
                                                        const Substructure& target,
                                                        bool include_sentinel) {
    JointDistribution joint;
    for (const auto& [image_id, a_name] : attribute.assignments) {
        auto it = target.assignments.find(image_id);
        if (it == target.assignments.end()) continue;
        const auto& y_name = it->second;
        if (!include_sentinel && (is_unassigned(a_name) || is_unassigned(y_name))) continue;
        joint.counts[a_name][y_name] += 1;
    }
    if (joint.total() == 0)
        throw ValidationError("substructures share no jointly assigned images");
    return joint;
}

JointDistribution load_joint_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    JointDistribution joint;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cut = line.find('\t');
        if (cut == std::string::npos) cut = line.find(',');
        if (cut == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected two tab- or comma-separated columns");
        std::string a = trim(line.substr(0, cut));
        std::string y = trim(line.substr(cut + 1));
        if (a.empty() || y.empty())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty column");
        joint.counts[a][y] += 1;
    }
    if (joint.total() == 0) throw ParseError(path.string() + ": no label rows");
    return joint;
}

double spurious_correlation(const JointDistribution& joint) {
    double total = static_cast<double>(joint.total());
    if (total <= 0.0) throw ValidationError("joint distribution has no mass");

    std::map<std::string, double> pa, py;
    for (const auto& [a, row] : joint.counts)
        for (const auto& [y, count] : row) {
            if (count < 0) throw ValidationError("negative joint count");
            double p = static_cast<double>(count) / total;
            pa[a] += p;
            py[y] += p;
        }

    auto positive_outcomes = [](const std::map<std::string, double>& marginal) {
        std::size_t n = 0;
        for (const auto& [name, p] : marginal)
            if (p > 0.0) ++n;
        return n;
    };
    if (positive_outcomes(pa) < 2 || positive_outcomes(py) < 2)
        throw ValidationError("correlation undefined for a degenerate marginal");

    // Summed in value order so the result is bit-identical under transposing
    // the joint (map iteration order would otherwise leak into the total).
    std::vector<double> mi_terms;
    for (const auto& [a, row] : joint.counts) {
        for (const auto& [y, count] : row) {
            if (count == 0) continue;
            double p = static_cast<double>(count) / total;
            mi_terms.push_back(p * std::log(p / (pa[a] * py[y])));
        }
    }
    std::sort(mi_terms.begin(), mi_terms.end());
    double mi = 0.0;
    for (double term : mi_terms) mi += term;
    std::vector<double> pa_values, py_values;
    for (const auto& [name, p] : pa) pa_values.push_back(p);
    for (const auto& [name, p] : py) py_values.push_back(p);
    return clamp01(2.0 * mi / (entropy(pa_values) + entropy(py_values)));
}

PopularityFinding popularity_analysis(const Substructure& sub, const Collection& collection,
                                      double max_missing_fraction) {
    PopularityFinding finding;
    finding.criterion_id = sub.criterion_id;
    finding.granularity = sub.granularity;

    std::map<std::string, std::vector<double>> members; // cluster -> popularity values
    for (const auto& name : sub.cluster_names) members[name];
    std::int64_t considered = 0, missing = 0;
    for (const auto& [image_id, cluster] : sub.assignments) {
        if (is_unassigned(cluster)) continue;
        ++considered;
        const auto& record = collection.at(image_id);
        if (!record.popularity) {
            ++missing;
            continue;
        }
        members[cluster].push_back(*record.popularity);
    }
    if (considered == 0) throw ValidationError("no non-sentinel images to analyze");
    finding.missing_fraction =
        static_cast<double>(missing) / static_cast<double>(considered);
    if (finding.missing_fraction > max_missing_fraction)
        throw ValidationError("missing popularity on " + std::to_string(missing) + " of " +
                              std::to_string(considered) + " images exceeds the allowed fraction");

    std::int64_t scored = considered - missing;
    if (scored == 0) throw ValidationError("no images carry popularity values");

    for (const auto& [cluster, values] : members) {
        ClusterPopularity entry;
        entry.cluster = cluster;
        entry.size = static_cast<std::int64_t>(values.size());
        if (!values.empty()) {
            double sum = 0.0;
            for (double v : values) sum += v;
            entry.mean = sum / static_cast<double>(values.size());
        }
        entry.weighted = entry.mean * static_cast<double>(entry.size) /
                         static_cast<double>(scored);
        finding.clusters.push_back(std::move(entry));
    }

    auto pick = [&](auto key, std::string& winner, bool& tied) {
        double best = -1.0;
        for (const auto& entry : finding.clusters) {
            if (entry.size == 0) continue; // empty clusters cannot win
            double value = key(entry);
            if (value > best) {
                best = value;
                winner = entry.cluster;
                tied = false;
            } else if (value == best) {
                tied = true;
            }
        }
    };
    pick([](const ClusterPopularity& e) { return e.mean; }, finding.viral, finding.viral_tied);
    pick([](const ClusterPopularity& e) { return e.weighted; }, finding.major,
         finding.major_tied);
    return finding;
}

} // namespace facet
