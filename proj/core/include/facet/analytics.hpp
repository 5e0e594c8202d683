#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "facet/types.hpp"

namespace facet {

struct BiasScore {
    double value = 0.0;
    // Single-cluster distribution: the score is the K -> 1 limit, not a
    // measurement.
    bool degenerate = false;
};

// 1 - H(p)/log K over the distribution's clusters (0 log 0 := 0). 0 = uniform
// (no bias), 1 = all mass on one cluster. Base-free.
BiasScore bias_intensity(const Distribution& dist);

struct DominantCluster {
    std::string name;
    bool tied = false; // count tie broken lexicographically
};

DominantCluster dominant_cluster(const Distribution& dist);

struct BiasFinding {
    std::string criterion_id;
    Granularity granularity = Granularity::mid;
    double intensity = 0.0;
    bool degenerate = false;
    std::string dominant;
    bool dominant_tied = false;
    Distribution distribution;
};

// One finding per substructure at the requested granularity, sentinel
// excluded, sorted by intensity descending (criterion_id breaks ties).
std::vector<BiasFinding> bias_report(const std::vector<Substructure>& substructures,
                                     Granularity granularity, bool include_sentinel = false);

struct JointDistribution {
    // attribute outcome -> target outcome -> count
    std::map<std::string, std::map<std::string, std::int64_t>> counts;

    std::int64_t total() const;
    static JointDistribution from_substructures(const Substructure& attribute,
                                                const Substructure& target,
                                                bool include_sentinel = false);
};

// Two-column text file (tab- or comma-separated attribute,target per line)
// for external-label audits.
JointDistribution load_joint_labels(const std::filesystem::path& path);

// 2 I(A;Y) / (H(A) + H(Y)) from the empirical joint. 0 = independent,
// 1 = identical partitions. Degenerate marginals are an error.
double spurious_correlation(const JointDistribution& joint);

struct ClusterPopularity {
    std::string cluster;
    std::int64_t size = 0;   // members with a popularity value
    double mean = 0.0;       // average popularity of members
    double weighted = 0.0;   // mean * size / N; sums to the global mean
};

struct PopularityFinding {
    std::string criterion_id;
    Granularity granularity = Granularity::mid;
    std::vector<ClusterPopularity> clusters; // by cluster name
    std::string viral; // argmax mean
    bool viral_tied = false;
    std::string major; // argmax weighted
    bool major_tied = false;
    double missing_fraction = 0.0;
};

// Per-cluster popularity means and proportion-weighted scores over the
// non-sentinel members. Images lacking popularity are reported and must not
// exceed max_missing_fraction of the members.
PopularityFinding popularity_analysis(const Substructure& sub, const Collection& collection,
                                      double max_missing_fraction = 0.0);

} // namespace facet
