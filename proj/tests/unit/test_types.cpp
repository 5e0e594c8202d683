#include <doctest.h>

#include "facet/io.hpp"
#include "facet/types.hpp"
#include "temp_dir.hpp"

using namespace facet;

TEST_CASE("name normalization") {
    CHECK(trim("  hello  ") == "hello");
    CHECK(trim("\t\n x \r ") == "x");
    CHECK(trim("") == "");
    CHECK(normalize_name("  Mood  Of   Image ") == "mood of image");
    CHECK(normalize_name("ACTIVITY") == "activity");
    CHECK(names_equal("Location", "  location "));
    CHECK(names_equal("A  B", "a b"));
    CHECK_FALSE(names_equal("Location", "Locations"));
    CHECK(is_unassigned("Unassigned"));
    CHECK(is_unassigned("  unassigned "));
    CHECK_FALSE(is_unassigned("assigned"));
}

TEST_CASE("collection validation") {
    std::vector<ImageRecord> records = {
        {"img_b", "file://b.jpg", 3.0, {}},
        {"img_a", "file://a.jpg", std::nullopt, {{"split", "train"}}},
    };
    Collection collection = validate_collection(records);
    CHECK(collection.size() == 2);
    CHECK(collection.records()[0].image_id == "img_b"); // input order preserved
    CHECK(collection.contains("img_a"));
    CHECK_FALSE(collection.contains("img_c"));
    CHECK(collection.at("img_a").metadata.at("split") == "train");
    CHECK_THROWS_AS(collection.at("img_c"), ValidationError);

    CHECK_THROWS_AS(validate_collection({}), ValidationError);
    CHECK_THROWS_AS(validate_collection({{"", "s", std::nullopt, {}}}), ValidationError);
    CHECK_THROWS_AS(
        validate_collection({{"a", "s", std::nullopt, {}}, {"a", "t", std::nullopt, {}}}),
        ValidationError);
    CHECK_THROWS_AS(validate_collection({{"a", "s", -1.0, {}}}), ValidationError);
}

TEST_CASE("granularity and provenance names round-trip") {
    for (Granularity g : kAllGranularities)
        CHECK(granularity_from_name(granularity_name(g)) == g);
    CHECK_THROWS_AS(granularity_from_name("medium"), ParseError);
    for (Provenance p : {Provenance::caption_proposer, Provenance::tag_proposer,
                         Provenance::image_proposer, Provenance::user_supplied})
        CHECK(provenance_from_name(provenance_name(p)) == p);
    CHECK_THROWS_AS(provenance_from_name("unknown"), ParseError);
}

TEST_CASE("hierarchy level access and validation") {
    CandidateHierarchy h;
    h.criterion_id = "crit-0001";
    h.coarse = {"Indoor", "Outdoor"};
    h.mid = {"Kitchen", "Garden"};
    h.fine = {"Home Kitchen", "Vegetable Garden"};
    CHECK(h.level(Granularity::coarse) == h.coarse);
    CHECK(h.level(Granularity::fine) == h.fine);
    CHECK_NOTHROW(validate_hierarchy(h));

    CandidateHierarchy empty_level = h;
    empty_level.mid.clear();
    CHECK_THROWS_AS(validate_hierarchy(empty_level), ValidationError);

    CandidateHierarchy dup = h;
    dup.coarse = {"Indoor", " indoor "};
    CHECK_THROWS_AS(validate_hierarchy(dup), ValidationError);
}

TEST_CASE("make_substructure collects sorted distinct non-sentinel clusters") {
    Substructure sub = make_substructure(
        "crit-0001", Granularity::mid,
        {{"i1", "B"}, {"i2", "A"}, {"i3", "B"}, {"i4", std::string(kUnassigned)}});
    CHECK(sub.cluster_names == std::vector<std::string>{"A", "B"});
    CHECK(sub.cluster_count() == 2);
    CHECK_NOTHROW(validate_substructure(sub, 4));
    CHECK_THROWS_AS(validate_substructure(sub, 5), ValidationError);

    Substructure bad = sub;
    bad.assignments["i5"] = "C"; // not in cluster_names
    CHECK_THROWS_AS(validate_substructure(bad), ValidationError);
}

TEST_CASE("distribution from counts and from substructure") {
    Distribution dist = Distribution::from_counts("crit-0001", Granularity::mid,
                                                  {{"A", 3}, {"B", 1}});
    CHECK(dist.total() == 4);
    CHECK(dist.probabilities.at("A") == doctest::Approx(0.75));
    CHECK(dist.probabilities.at("B") == doctest::Approx(0.25));
    CHECK_THROWS_AS(
        Distribution::from_counts("c", Granularity::mid, {{"A", -1}}), ValidationError);
    CHECK_THROWS_AS(Distribution::from_counts("c", Granularity::mid, {{"A", 0}}),
                    ValidationError);

    Substructure sub = make_substructure(
        "crit-0002", Granularity::fine,
        {{"i1", "A"}, {"i2", "A"}, {"i3", std::string(kUnassigned)}});
    Distribution without = Distribution::from_substructure(sub);
    CHECK(without.counts.count(std::string(kUnassigned)) == 0);
    CHECK(without.total() == 2);
    Distribution with = Distribution::from_substructure(sub, true);
    CHECK(with.counts.at(std::string(kUnassigned)) == 1);
    CHECK(with.total() == 3);
}

TEST_CASE("ground truth label lookup is case-insensitive") {
    GroundTruth gt;
    gt.criteria = {"Activity"};
    gt.labels["Activity"] = {{"i1", "cooking"}};
    REQUIRE(gt.labels_for(" activity ") != nullptr);
    CHECK(gt.labels_for("activity")->at("i1") == "cooking");
    CHECK(gt.labels_for("location") == nullptr);
}

TEST_CASE("json round-trips reproduce values") {
    ImageRecord rec{"img_1", "toy://x", 4.5, {{"k", "v"}}};
    nlohmann::json j = rec;
    auto rec2 = j.get<ImageRecord>();
    CHECK(rec2.image_id == rec.image_id);
    CHECK(rec2.source == rec.source);
    CHECK(rec2.popularity == rec.popularity);
    CHECK(rec2.metadata == rec.metadata);

    Criterion c{"crit-0001", "Activity", Provenance::caption_proposer,
                CriterionStatus::refined, {"raw-0001", "raw-0002"}};
    nlohmann::json cj = c;
    auto c2 = cj.get<Criterion>();
    CHECK(c2.criterion_id == c.criterion_id);
    CHECK(c2.provenance == c.provenance);
    CHECK(c2.status == c.status);
    CHECK(c2.merged_from == c.merged_from);

    Substructure sub = make_substructure("crit-0001", Granularity::coarse,
                                         {{"i1", "A"}, {"i2", "B"}});
    nlohmann::json sj = sub;
    auto sub2 = sj.get<Substructure>();
    CHECK(sub2.criterion_id == sub.criterion_id);
    CHECK(sub2.granularity == sub.granularity);
    CHECK(sub2.assignments == sub.assignments);
    CHECK(sub2.cluster_names == sub.cluster_names);

    MetricReport report;
    report.tpr = 0.5;
    report.diversity = 0.25;
    report.per_criterion["crit-0001"] = {0.9, 0.8, 0.846, Granularity::mid};
    report.matched_gt["crit-0001"] = "Activity";
    report.uncovered_gt = {"Location"};
    report.skipped = {"crit-0002"};
    report.matcher_mode = "embedding";
    nlohmann::json rj = report;
    auto report2 = rj.get<MetricReport>();
    CHECK(report2.tpr == report.tpr);
    CHECK(report2.per_criterion.at("crit-0001").cacc == doctest::Approx(0.9));
    CHECK(report2.matched_gt == report.matched_gt);
    CHECK(report2.uncovered_gt == report.uncovered_gt);
}

TEST_CASE("file io helpers") {
    facet::testing::TempDir tmp;

    SUBCASE("atomic write creates parent directories") {
        auto path = tmp / "a/b/c.txt";
        write_file_atomic(path, "payload");
        CHECK(read_file(path) == "payload");
    }

    SUBCASE("jsonl ignores blank lines") {
        auto path = tmp / "rows.jsonl";
        write_file_atomic(path, "{\"a\":1}\n\n{\"a\":2}\n");
        auto rows = read_jsonl(path);
        REQUIRE(rows.size() == 2);
        CHECK(rows[1]["a"] == 2);
    }

    SUBCASE("collection loads from jsonl manifest") {
        auto path = tmp / "collection.jsonl";
        write_file_atomic(path,
                          "{\"image_id\":\"i1\",\"source\":\"toy://1\",\"popularity\":2.0}\n"
                          "{\"image_id\":\"i2\",\"source\":\"toy://2\"}\n");
        Collection collection = load_collection(path);
        CHECK(collection.size() == 2);
        CHECK(collection.at("i1").popularity == 2.0);
        CHECK_FALSE(collection.at("i2").popularity.has_value());
    }

    SUBCASE("ground truth accepts both layouts") {
        auto wrapped = tmp / "gt1.json";
        write_file_atomic(wrapped, R"({"criteria": ["Activity"],
            "labels": {"Activity": {"i1": "cooking"}}})");
        GroundTruth gt1 = load_ground_truth(wrapped);
        CHECK(gt1.criteria == std::vector<std::string>{"Activity"});
        CHECK(gt1.labels_for("Activity")->at("i1") == "cooking");

        auto bare = tmp / "gt2.json";
        write_file_atomic(bare, R"({"Location": {"i1": "kitchen"}})");
        GroundTruth gt2 = load_ground_truth(bare);
        CHECK(gt2.criteria == std::vector<std::string>{"Location"});
        CHECK(gt2.labels_for("location")->at("i1") == "kitchen");
    }

    SUBCASE("substructure round-trips through file") {
        Substructure sub = make_substructure("crit-0001", Granularity::mid,
                                             {{"i1", "A"}, {"i2", "B"}});
        auto path = tmp / "sub.json";
        save_substructure(path, sub);
        Substructure back = load_substructure(path);
        CHECK(back.assignments == sub.assignments);
        CHECK(back.cluster_names == sub.cluster_names);
    }
}
