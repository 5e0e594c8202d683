#include <doctest.h>

#include <cmath>
#include <random>

#include "facet/analytics.hpp"
#include "facet/io.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace facet;
using facet::testing::direct_normalized_mi;
using facet::testing::entropy_bits;

namespace {

Distribution dist(std::map<std::string, std::int64_t> counts) {
    return Distribution::from_counts("crit", Granularity::mid, std::move(counts));
}

} // namespace

TEST_CASE("bias intensity spans uniform to one-hot") {
    for (int k = 2; k <= 10; ++k) {
        std::map<std::string, std::int64_t> counts;
        for (int i = 0; i < k; ++i) counts["c" + std::to_string(i)] = 7;
        auto score = bias_intensity(dist(std::move(counts)));
        CHECK(score.value == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_FALSE(score.degenerate);
    }

    auto onehot = bias_intensity(dist({{"a", 42}, {"b", 0}, {"c", 0}}));
    CHECK(onehot.value == doctest::Approx(1.0).epsilon(1e-12));

    // Skew case checked against an independent bits-based entropy: the log
    // base cancels in H(p)/log K.
    auto skew = bias_intensity(dist({{"a", 75}, {"b", 25}}));
    double expected = 1.0 - entropy_bits({0.75, 0.25}) / std::log2(2.0);
    CHECK(skew.value == doctest::Approx(expected).epsilon(1e-12));

    // Scale invariance: only proportions matter.
    auto small = bias_intensity(dist({{"a", 3}, {"b", 1}}));
    auto large = bias_intensity(dist({{"a", 3000}, {"b", 1000}}));
    CHECK(small.value == doctest::Approx(large.value).epsilon(1e-12));

    auto lone = bias_intensity(dist({{"only", 5}}));
    CHECK(lone.degenerate);
    CHECK(lone.value == 1.0);

    CHECK_THROWS_AS(bias_intensity(Distribution{}), ValidationError);
}

TEST_CASE("bias intensity is invariant under cluster renaming") {
    auto a = bias_intensity(dist({{"x", 10}, {"y", 5}, {"z", 1}}));
    auto b = bias_intensity(dist({{"alpha", 10}, {"beta", 5}, {"gamma", 1}}));
    CHECK(a.value == b.value);
}

TEST_CASE("dominant cluster breaks ties lexicographically and flags them") {
    auto clear = dominant_cluster(dist({{"a", 1}, {"b", 9}}));
    CHECK(clear.name == "b");
    CHECK_FALSE(clear.tied);
    auto tied = dominant_cluster(dist({{"beta", 4}, {"alpha", 4}, {"gamma", 1}}));
    CHECK(tied.name == "alpha");
    CHECK(tied.tied);
}

TEST_CASE("bias report filters granularity and sorts by intensity") {
    Substructure skewed = make_substructure(
        "crit-b", Granularity::mid, {{"i1", "A"}, {"i2", "A"}, {"i3", "A"}, {"i4", "B"}});
    Substructure uniform = make_substructure(
        "crit-a", Granularity::mid, {{"i1", "A"}, {"i2", "A"}, {"i3", "B"}, {"i4", "B"}});
    Substructure other = make_substructure("crit-c", Granularity::fine,
                                           {{"i1", "A"}, {"i2", "B"}});
    auto findings = bias_report({uniform, skewed, other}, Granularity::mid);
    REQUIRE(findings.size() == 2);
    CHECK(findings[0].criterion_id == "crit-b"); // higher intensity first
    CHECK(findings[1].criterion_id == "crit-a");
    CHECK(findings[1].intensity == doctest::Approx(0.0));
    CHECK(findings[0].dominant == "A");

    // Sentinel-heavy substructure: the sentinel only counts when asked for.
    Substructure with_sentinel = make_substructure(
        "crit-s", Granularity::mid,
        {{"i1", "A"}, {"i2", std::string(kUnassigned)}, {"i3", std::string(kUnassigned)}});
    auto excluded = bias_report({with_sentinel}, Granularity::mid, false);
    REQUIRE(excluded.size() == 1);
    CHECK(excluded[0].degenerate); // only cluster A remains
    auto included = bias_report({with_sentinel}, Granularity::mid, true);
    CHECK_FALSE(included[0].degenerate);
    CHECK(included[0].dominant == std::string(kUnassigned));
}

TEST_CASE("joint distribution from substructures respects overlap and sentinel") {
    Substructure attribute = make_substructure(
        "a", Granularity::mid,
        {{"i1", "A"}, {"i2", "A"}, {"i3", "B"}, {"i4", std::string(kUnassigned)}});
    Substructure target = make_substructure(
        "t", Granularity::mid, {{"i1", "X"}, {"i2", "Y"}, {"i3", "Y"}, {"i4", "X"}, {"i9", "Z"}});
    auto joint = JointDistribution::from_substructures(attribute, target);
    CHECK(joint.total() == 3); // i4 sentinel out, i9 not shared
    CHECK(joint.counts.at("A").at("X") == 1);
    CHECK(joint.counts.at("A").at("Y") == 1);
    CHECK(joint.counts.at("B").at("Y") == 1);

    auto with_sentinel = JointDistribution::from_substructures(attribute, target, true);
    CHECK(with_sentinel.total() == 4);

    Substructure disjoint = make_substructure("d", Granularity::mid, {{"zz", "Q"}});
    CHECK_THROWS_AS(JointDistribution::from_substructures(attribute, disjoint),
                    ValidationError);
}

TEST_CASE("joint labels load from two-column text") {
    facet::testing::TempDir tmp;
    auto path = tmp / "labels.tsv";
    write_file_atomic(path, "red\tcircle\nred,square\n\nblue\tcircle\n");
    auto joint = load_joint_labels(path);
    CHECK(joint.total() == 3);
    CHECK(joint.counts.at("red").at("circle") == 1);
    CHECK(joint.counts.at("red").at("square") == 1);
    CHECK(joint.counts.at("blue").at("circle") == 1);

    write_file_atomic(tmp / "bad.txt", "onlyonecolumn\n");
    CHECK_THROWS_AS(load_joint_labels(tmp / "bad.txt"), ParseError);
    write_file_atomic(tmp / "empty.txt", "\n\n");
    CHECK_THROWS_AS(load_joint_labels(tmp / "empty.txt"), ParseError);
    CHECK_THROWS_AS(load_joint_labels(tmp / "missing.txt"), ConfigError);
}

TEST_CASE("spurious correlation endpoints") {
    // Exact product joint: independent, so the score is 0.
    JointDistribution product;
    product.counts["a"]["x"] = 6;
    product.counts["a"]["y"] = 2;
    product.counts["b"]["x"] = 3;
    product.counts["b"]["y"] = 1;
    CHECK(spurious_correlation(product) == doctest::Approx(0.0).epsilon(1e-12));

    // Identical balanced binary partitions: the score is 1.
    JointDistribution identical;
    identical.counts["a"]["x"] = 5;
    identical.counts["b"]["y"] = 5;
    CHECK(spurious_correlation(identical) == doctest::Approx(1.0).epsilon(1e-12));

    // Degenerate marginals are refused.
    JointDistribution degenerate;
    degenerate.counts["a"]["x"] = 3;
    degenerate.counts["a"]["y"] = 4;
    CHECK_THROWS_AS(spurious_correlation(degenerate), ValidationError);
}

TEST_CASE("spurious correlation is symmetric and matches direct summation") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t rows = 2 + rng() % 4, cols = 2 + rng() % 4;
        std::vector<std::vector<long long>> table(rows, std::vector<long long>(cols));
        // Guarantee non-degenerate marginals by seeding the diagonal.
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                table[r][c] = static_cast<long long>(rng() % 20) + (r == c ? 1 : 0);

        JointDistribution joint, transposed;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                joint.counts["a" + std::to_string(r)]["y" + std::to_string(c)] = table[r][c];
                transposed.counts["y" + std::to_string(c)]["a" + std::to_string(r)] =
                    table[r][c];
            }
        double score = spurious_correlation(joint);
        CHECK(score == doctest::Approx(direct_normalized_mi(table)).epsilon(1e-9));
        CHECK(score == doctest::Approx(spurious_correlation(transposed)).epsilon(1e-12));
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
    }
}

TEST_CASE("popularity analysis separates viral from major clusters") {
    // One tiny cluster with huge popularity vs one big cluster with modest
    // popularity: the tiny one is viral (highest mean), the big one is major
    // (highest weighted share).
    std::vector<ImageRecord> records;
    std::map<std::string, std::string> assignments;
    records.push_back({"hot", "toy://hot", 100.0, {}});
    assignments["hot"] = "spike";
    for (int i = 0; i < 9; ++i) {
        std::string id = "base" + std::to_string(i);
        records.push_back({id, "toy://" + id, 20.0, {}});
        assignments[id] = "bulk";
    }
    Collection collection = validate_collection(records);
    Substructure sub = make_substructure("crit", Granularity::mid, assignments);
    auto finding = popularity_analysis(sub, collection);

    CHECK(finding.viral == "spike");
    CHECK(finding.major == "bulk");
    CHECK_FALSE(finding.viral_tied);
    CHECK_FALSE(finding.major_tied);
    REQUIRE(finding.clusters.size() == 2);
    const auto& bulk = finding.clusters[0].cluster == "bulk" ? finding.clusters[0]
                                                             : finding.clusters[1];
    const auto& spike = finding.clusters[0].cluster == "spike" ? finding.clusters[0]
                                                               : finding.clusters[1];
    CHECK(spike.mean == doctest::Approx(100.0));
    CHECK(spike.weighted == doctest::Approx(10.0)); // 100 * 1/10
    CHECK(bulk.mean == doctest::Approx(20.0));
    CHECK(bulk.weighted == doctest::Approx(18.0)); // 20 * 9/10
    // Weighted scores decompose the global mean exactly.
    CHECK(spike.weighted + bulk.weighted == doctest::Approx(28.0));
}

TEST_CASE("popularity weighted scores always sum to the global mean") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t images = 2 + rng() % 40;
        std::size_t clusters = 1 + rng() % 5;
        std::vector<ImageRecord> records;
        std::map<std::string, std::string> assignments;
        double total = 0.0;
        for (std::size_t i = 0; i < images; ++i) {
            std::string id = "i" + std::to_string(i);
            double pop = static_cast<double>(rng() % 1000) / 10.0;
            total += pop;
            records.push_back({id, "toy://" + id, pop, {}});
            assignments[id] = "c" + std::to_string(rng() % clusters);
        }
        Collection collection = validate_collection(records);
        Substructure sub = make_substructure("crit", Granularity::mid, assignments);
        auto finding = popularity_analysis(sub, collection);
        double sum = 0.0;
        for (const auto& entry : finding.clusters) sum += entry.weighted;
        CHECK(sum == doctest::Approx(total / static_cast<double>(images)).epsilon(1e-9));
    }
}

TEST_CASE("popularity analysis handles missing values and sentinel members") {
    std::vector<ImageRecord> records{
        {"i1", "toy://1", 10.0, {}},
        {"i2", "toy://2", std::nullopt, {}},
        {"i3", "toy://3", 30.0, {}},
        {"i4", "toy://4", std::nullopt, {}},
    };
    Collection collection = validate_collection(records);
    Substructure sub = make_substructure(
        "crit", Granularity::mid,
        {{"i1", "A"}, {"i2", "A"}, {"i3", "B"}, {"i4", std::string(kUnassigned)}});

    // i2 lacks popularity: 1 of 3 non-sentinel members missing.
    CHECK_THROWS_AS(popularity_analysis(sub, collection, 0.0), ValidationError);
    auto finding = popularity_analysis(sub, collection, 0.5);
    CHECK(finding.missing_fraction == doctest::Approx(1.0 / 3.0));
    // Scored members: i1 (A, 10) and i3 (B, 30).
    CHECK(finding.viral == "B");
    CHECK(finding.major == "B");

    Substructure empty = make_substructure(
        "crit", Granularity::mid, {{"i1", std::string(kUnassigned)}});
    CHECK_THROWS_AS(popularity_analysis(empty, collection), ValidationError);

    // Ties on both scores are flagged.
    Substructure even = make_substructure("crit", Granularity::mid,
                                          {{"i1", "A"}, {"i3", "B"}});
    std::vector<ImageRecord> equal{
        {"i1", "toy://1", 10.0, {}},
        {"i3", "toy://3", 10.0, {}},
    };
    auto tied = popularity_analysis(even, validate_collection(equal));
    CHECK(tied.viral_tied);
    CHECK(tied.major_tied);
    CHECK(tied.viral == "A"); // first maximum wins, clusters are name-ordered
}
