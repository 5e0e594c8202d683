#include <doctest.h>

#include <cmath>
#include <random>

#include "facet/assignment.hpp"
#include "facet/metrics.hpp"
#include "facet/mock_backend.hpp"
#include "oracles.hpp"

using namespace facet;
using facet::testing::exhaustive_cacc;
using facet::testing::permutation_assignment_total;

namespace {

// mt19937_64 output is pinned by the standard; raw modulo keeps the draw
// platform-independent (uniform_int_distribution is not).
std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

} // namespace

TEST_CASE("hungarian equals exhaustive permutation search on random matrices") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = draw(rng, 1, 6);
        std::vector<std::vector<long long>> weights(n, std::vector<long long>(n));
        for (auto& row : weights)
            for (auto& cell : row) cell = static_cast<long long>(rng() % 100);
        auto result = max_weight_assignment(weights);
        CHECK(result.total == permutation_assignment_total(weights));
        // The reported permutation must actually realize the total.
        long long realized = 0;
        std::vector<bool> used(n, false);
        for (std::size_t r = 0; r < n; ++r) {
            REQUIRE(result.column_of_row[r] < n);
            CHECK_FALSE(used[result.column_of_row[r]]);
            used[result.column_of_row[r]] = true;
            realized += weights[r][result.column_of_row[r]];
        }
        CHECK(realized == result.total);
    }
}

TEST_CASE("hungarian handles fixed cases") {
    CHECK(max_weight_assignment({{7}}).total == 7);
    CHECK(max_weight_assignment({{10, 1}, {1, 10}}).total == 20);
    CHECK(max_weight_assignment({{5, 5}, {5, 5}}).total == 10); // ties
    CHECK_THROWS_AS(max_weight_assignment({}), ValidationError);
    CHECK_THROWS_AS(max_weight_assignment({{1, 2}}), ValidationError); // not square
}

TEST_CASE("confusion table counts overlap and sentinel images") {
    Substructure pred = make_substructure(
        "crit", Granularity::mid,
        {{"i1", "A"}, {"i2", "A"}, {"i3", "B"}, {"i4", std::string(kUnassigned)},
         {"i5", "B"}});
    std::map<std::string, std::string> gt{
        {"i1", "x"}, {"i2", "y"}, {"i3", "y"}, {"i4", "x"}, {"i6", "z"}};
    // i5 is not labeled, i6 is not predicted; both drop out of the overlap.
    auto table = build_confusion(pred, gt);
    CHECK(table.evaluated == 4); // the sentinel image still counts
    CHECK(table.pred_clusters == std::vector<std::string>{"A", "B"});
    CHECK(table.gt_labels == std::vector<std::string>{"x", "y"});
    CHECK(table.counts[0][0] == 1); // A,x
    CHECK(table.counts[0][1] == 1); // A,y
    CHECK(table.counts[1][1] == 1); // B,y
    CHECK(table.counts[1][0] == 0);

    CHECK_THROWS_AS(build_confusion(pred, {{"zz", "x"}}), ValidationError);
}

TEST_CASE("clustering accuracy on hand-checked cases") {
    Substructure perfect = make_substructure(
        "crit", Granularity::mid, {{"i1", "A"}, {"i2", "A"}, {"i3", "B"}});
    std::map<std::string, std::string> gt{{"i1", "x"}, {"i2", "x"}, {"i3", "y"}};
    CHECK(clustering_accuracy(perfect, gt) == 1.0);

    Substructure all_sentinel = make_substructure(
        "crit", Granularity::mid,
        {{"i1", std::string(kUnassigned)}, {"i2", std::string(kUnassigned)}});
    CHECK(clustering_accuracy(all_sentinel, {{"i1", "x"}, {"i2", "y"}}) == 0.0);

    // More predicted clusters than labels: extras go unmatched.
    Substructure split = make_substructure(
        "crit", Granularity::mid, {{"i1", "A"}, {"i2", "B"}, {"i3", "C"}});
    CHECK(clustering_accuracy(split, {{"i1", "x"}, {"i2", "x"}, {"i3", "x"}}) ==
          doctest::Approx(1.0 / 3.0));
}

TEST_CASE("clustering accuracy equals the exhaustive mapping oracle") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t clusters = draw(rng, 1, 5);
        std::size_t labels = draw(rng, 1, 5);
        std::size_t images = draw(rng, 1, 30);
        std::map<std::string, std::string> assignments, gt;
        for (std::size_t i = 0; i < images; ++i) {
            std::string id = "i" + std::to_string(i);
            if (rng() % 10 == 0)
                assignments[id] = std::string(kUnassigned);
            else
                assignments[id] = "c" + std::to_string(rng() % clusters);
            gt[id] = "l" + std::to_string(rng() % labels);
        }
        Substructure sub = make_substructure("crit", Granularity::mid, assignments);
        double got = clustering_accuracy(sub, gt);
        CHECK(got == exhaustive_cacc(sub, gt));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("clustering accuracy is invariant under cluster renaming") {
    std::map<std::string, std::string> assignments, gt;
    std::mt19937_64 rng(5150);
    for (std::size_t i = 0; i < 40; ++i) {
        assignments["i" + std::to_string(i)] = "c" + std::to_string(rng() % 4);
        gt["i" + std::to_string(i)] = "l" + std::to_string(rng() % 3);
    }
    Substructure sub = make_substructure("crit", Granularity::mid, assignments);
    double base = clustering_accuracy(sub, gt);

    std::map<std::string, std::string> renamed;
    for (const auto& [id, name] : assignments)
        renamed[id] = name == "c0"   ? "zebra"
                      : name == "c1" ? "apple"
                      : name == "c2" ? "mango"
                                     : "kiwi";
    Substructure bijected = make_substructure("crit", Granularity::mid, renamed);
    CHECK(clustering_accuracy(bijected, gt) == base);
}

TEST_CASE("semantic accuracy averages clamped cosines, sentinel scoring zero") {
    HashEmbedder embedder(4);
    embedder.set_vector("a", {1, 0, 0, 0});
    embedder.set_vector("x", {1, 0, 0, 0});
    embedder.set_vector("b", {0, 1, 0, 0});
    embedder.set_vector("y", {0, -1, 0, 0}); // cosine -1, clamps to 0
    Substructure sub = make_substructure(
        "crit", Granularity::mid,
        {{"i1", "a"}, {"i2", "b"}, {"i3", std::string(kUnassigned)}});
    std::map<std::string, std::string> gt{{"i1", "x"}, {"i2", "y"}, {"i3", "x"}};
    CHECK(semantic_accuracy(embedder, sub, gt) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("harmonic mean") {
    CHECK(harmonic_mean(0.0, 0.0) == 0.0);
    CHECK(harmonic_mean(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(harmonic_mean(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(harmonic_mean(0.0, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(harmonic_mean(-0.1, 0.5), ValidationError);
    CHECK_THROWS_AS(harmonic_mean(0.5, 1.1), ValidationError);
}

TEST_CASE("best granularity prefers mid on ties and higher cacc otherwise") {
    HashEmbedder embedder(8);
    std::map<std::string, std::string> gt{{"i1", "x"}, {"i2", "y"}};
    auto sub = [&](Granularity g, std::string a, std::string b) {
        return make_substructure("crit", g, {{"i1", std::move(a)}, {"i2", std::move(b)}});
    };

    // All three perfect: the tie goes to mid.
    auto tie = select_best_granularity(
        embedder, {sub(Granularity::coarse, "A", "B"), sub(Granularity::mid, "C", "D"),
                   sub(Granularity::fine, "E", "F")},
        gt);
    CHECK(tie.granularity == Granularity::mid);
    CHECK(tie.cacc == doctest::Approx(1.0));

    // Coarse and fine tie, mid absent from the tie: coarse wins over fine.
    auto no_mid = select_best_granularity(
        embedder, {sub(Granularity::fine, "E", "F"), sub(Granularity::coarse, "A", "B"),
                   sub(Granularity::mid, "C", "C")},
        gt);
    CHECK(no_mid.granularity == Granularity::coarse);

    // Fine strictly better: fine wins despite the preference order.
    auto fine_best = select_best_granularity(
        embedder, {sub(Granularity::coarse, "A", "A"), sub(Granularity::mid, "C", "C"),
                   sub(Granularity::fine, "E", "F")},
        gt);
    CHECK(fine_best.granularity == Granularity::fine);
    CHECK(fine_best.cacc == doctest::Approx(1.0));

    CHECK_THROWS_AS(select_best_granularity(embedder, {}, gt), ValidationError);
    CHECK_THROWS_AS(select_best_granularity(
                        embedder, {sub(Granularity::mid, "A", "B"),
                                   sub(Granularity::mid, "C", "D")},
                        gt),
                    ValidationError);
}

TEST_CASE("criteria tpr: supersets cover, threshold gates, matching is one-to-one") {
    HashEmbedder embedder(4);
    EmbeddingMatcher matcher(std::make_shared<HashEmbedder>(embedder));

    SUBCASE("superset of ground truth reaches 1.0") {
        auto shared = std::make_shared<HashEmbedder>(4);
        EmbeddingMatcher m(shared);
        auto result = criteria_tpr(m, {"Extra", "Activity", "Location"},
                                   {"Activity", "Location"}, 0.7);
        CHECK(result.tpr == doctest::Approx(1.0));
        CHECK(result.uncovered_gt.empty());
    }

    SUBCASE("one of two matched gives 0.5") {
        auto shared = std::make_shared<HashEmbedder>(4);
        shared->set_vector("activity", {1, 0, 0, 0});
        shared->set_vector("doing", {1, 0, 0, 0});
        shared->set_vector("location", {0, 1, 0, 0});
        shared->set_vector("mood", {0, 0, 1, 0});
        EmbeddingMatcher m(shared);
        auto result = criteria_tpr(m, {"Doing", "Mood"}, {"Activity", "Location"}, 0.7);
        CHECK(result.tpr == doctest::Approx(0.5));
        REQUIRE(result.uncovered_gt.size() == 1);
        CHECK(result.uncovered_gt[0] == "Location");
        REQUIRE(result.matches.size() == 1);
        CHECK(result.matches[0].predicted == "Doing");
        CHECK(result.matches[0].gt == "Activity");
    }

    SUBCASE("greedy descending acceptance is one-to-one") {
        auto shared = std::make_shared<HashEmbedder>(4);
        // p1 is close to both gt names; p2 is close to g1 only.
        shared->set_vector("p1", {1, 0, 0, 0});
        shared->set_vector("g1", {0.9, std::sqrt(1 - 0.81), 0, 0});
        shared->set_vector("g2", {0.8, 0, std::sqrt(1 - 0.64), 0});
        shared->set_vector("p2", {0.9 * 0.85, 0.85 * std::sqrt(1 - 0.81), 0,
                                  std::sqrt(1 - 0.7225)});
        EmbeddingMatcher m(shared);
        // Pairs by similarity: (p1,g1)=.9, (p2,g1)=.85, (p1,g2)=.8. Greedy takes
        // (p1,g1), then nothing else is free above the threshold.
        auto result = criteria_tpr(m, {"p1", "p2"}, {"g1", "g2"}, 0.7);
        CHECK(result.tpr == doctest::Approx(0.5));
        REQUIRE(result.matches.size() == 1);
        CHECK(result.matches[0].predicted == "p1");
        CHECK(result.matches[0].gt == "g1");
    }

    SUBCASE("boundary and degenerate inputs") {
        auto shared = std::make_shared<HashEmbedder>(4);
        EmbeddingMatcher m(shared);
        // Identical names give similarity exactly 1; threshold 1.0 still accepts.
        auto exact = criteria_tpr(m, {"Same"}, {"Same"}, 1.0);
        CHECK(exact.tpr == doctest::Approx(1.0));
        auto none = criteria_tpr(m, {}, {"Activity"}, 0.7);
        CHECK(none.tpr == 0.0);
        CHECK(none.uncovered_gt == std::vector<std::string>{"Activity"});
        CHECK_THROWS_AS(criteria_tpr(m, {"A"}, {}, 0.7), ValidationError);
    }
}

TEST_CASE("criteria diversity") {
    HashEmbedder embedder(4);
    embedder.add_group({"same", "identical"});
    CHECK(criteria_diversity(embedder, {"same", "identical"}) == doctest::Approx(0.0));
    embedder.set_vector("north", {1, 0, 0, 0});
    embedder.set_vector("east", {0, 1, 0, 0});
    CHECK(criteria_diversity(embedder, {"north", "east"}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(criteria_diversity(embedder, {"solo"}), ValidationError);
}

TEST_CASE("llm judge matcher maps yes/no to 1/0") {
    auto judge = std::make_shared<MockBackend>();
    judge->add_chat_rule({{"\"Activity\"", "\"Action\""}, "", std::nullopt, "Yes."});
    judge->add_chat_rule({{}, "", std::nullopt, "no"});
    LlmJudgeMatcher matcher(judge, "judge-mock");
    auto sim = matcher.similarity({"Activity"}, {"Action", "Color"});
    CHECK(sim[0][0] == 1.0);
    CHECK(sim[0][1] == 0.0);
    CHECK(matcher.mode() == "llm-judge");
}

TEST_CASE("evaluate_run assembles the full scorecard") {
    auto embedder = std::make_shared<HashEmbedder>(8);
    EvalContext ctx;
    ctx.embedder = embedder;

    std::vector<Criterion> criteria{
        {"crit-0001", "Activity", Provenance::caption_proposer, CriterionStatus::refined, {}},
        {"crit-0002", "Style", Provenance::caption_proposer, CriterionStatus::refined, {}},
    };
    GroundTruth gt;
    gt.criteria = {"Activity", "Style", "Location"};
    gt.labels["Activity"] = {{"i1", "cooking"}, {"i2", "reading"}};
    // Style: matched but carries no labels, so it must be skipped, not failed.

    std::map<std::string, std::vector<Substructure>> substructures;
    substructures["crit-0001"] = {
        make_substructure("crit-0001", Granularity::mid,
                          {{"i1", "cooking"}, {"i2", "reading"}}),
        make_substructure("crit-0001", Granularity::coarse, {{"i1", "act"}, {"i2", "act"}}),
    };

    MetricReport report = evaluate_run(ctx, criteria, substructures, gt);
    CHECK(report.tpr == doctest::Approx(2.0 / 3.0));
    CHECK(report.uncovered_gt == std::vector<std::string>{"Location"});
    CHECK(report.skipped == std::vector<std::string>{"crit-0002"});
    CHECK(report.matcher_mode == "embedding");
    REQUIRE(report.per_criterion.count("crit-0001") == 1);
    const auto& score = report.per_criterion.at("crit-0001");
    CHECK(score.cacc == doctest::Approx(1.0));
    CHECK(score.chosen_granularity == Granularity::mid);
    CHECK(score.sacc == doctest::Approx(1.0)); // names equal their labels
    CHECK(score.hm == doctest::Approx(1.0));
    CHECK(report.matched_gt.at("crit-0001") == "Activity");
}
