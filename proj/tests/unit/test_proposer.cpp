#include <doctest.h>

#include <set>

#include "facet/grid.hpp"
#include "facet/io.hpp"
#include "facet/mock_backend.hpp"
#include "facet/parsing.hpp"
#include "facet/prompts.hpp"
#include "facet/proposer.hpp"
#include "temp_dir.hpp"

using namespace facet;

namespace {

BackendSet suite_backends(std::shared_ptr<MockBackend> model,
                          std::shared_ptr<HashEmbedder> embedder = nullptr) {
    BackendSet backends;
    backends.chat = model;
    backends.vision = model;
    backends.embedder = std::move(embedder);
    backends.workers = 2;
    return backends;
}

Collection toy_collection(int count) {
    std::vector<ImageRecord> records;
    for (int i = 1; i <= count; ++i) {
        std::string id = "img_" + std::to_string(i);
        records.push_back({id, "toy://" + id, std::nullopt, {}});
    }
    return validate_collection(records);
}

} // namespace

TEST_CASE("finalize_pool dedupes to the smallest spelling and orders by name") {
    auto pool = finalize_pool({"Location", "  location ", "Activity", "LOCATION", "", "  "},
                              Provenance::caption_proposer, CriterionStatus::raw, "raw");
    REQUIRE(pool.size() == 2);
    CHECK(pool[0].criterion_id == "raw-0001");
    CHECK(pool[0].name == "Activity");
    CHECK(pool[1].criterion_id == "raw-0002");
    CHECK(pool[1].name == "LOCATION"); // uppercase sorts before lowercase
    CHECK(pool[0].provenance == Provenance::caption_proposer);
    CHECK(pool[0].status == CriterionStatus::raw);
    CHECK(finalize_pool({}, Provenance::tag_proposer, CriterionStatus::raw, "raw").empty());
}

TEST_CASE("generic captioning tolerates failures only below the threshold") {
    auto model = std::make_shared<MockBackend>();
    model->add_vision_rule({{"Describe the following image"}, "img_1", std::nullopt, "a cat"});
    model->add_vision_rule({{"Describe the following image"}, "img_2", std::nullopt, "a dog"});
    // img_3 stays unscripted and fails.
    Collection collection = toy_collection(3);

    ProposerOptions options;
    options.failure_threshold = 0.5;
    auto outcome = generate_generic_captions(collection, suite_backends(model), options);
    REQUIRE(outcome.captions.size() == 2);
    CHECK(outcome.captions[0].image_id == "img_1"); // collection order
    CHECK(outcome.captions[0].text == "a cat");
    CHECK(outcome.captions[0].kind == CaptionKind::generic);
    REQUIRE(outcome.failures.size() == 1);
    CHECK(outcome.failures[0].item_id == "img_3");

    options.failure_threshold = 0.0;
    CHECK_THROWS_AS(generate_generic_captions(collection, suite_backends(model), options),
                    StageError);

    BackendSet no_vision;
    no_vision.chat = model;
    CHECK_THROWS_AS(generate_generic_captions(collection, no_vision, options), ConfigError);
}

TEST_CASE("caption proposer unions deduplicated criteria across subsets") {
    auto model = std::make_shared<MockBackend>();
    model->add_chat_rule({{"result of captioning"}, "", std::nullopt,
                          "* Activity\n* Location\n* activity"});
    std::vector<CaptionRecord> captions;
    for (int i = 1; i <= 5; ++i)
        captions.push_back({"img_" + std::to_string(i), "caption " + std::to_string(i),
                            CaptionKind::generic, ""});

    ProposerOptions options;
    options.subset_size = 2;
    options.shuffle_seed = 11;
    auto run = propose_from_captions(captions, suite_backends(model), options);

    CHECK(run.kind == "caption");
    CHECK(run.subset_size == 2);
    CHECK(run.shuffle_seed == 11);
    REQUIRE(run.subsets.size() == 3); // 2 + 2 + 1
    CHECK(run.subsets[0].size() == 2);
    CHECK(run.subsets[2].size() == 1);
    std::set<std::string> members;
    for (const auto& subset : run.subsets) members.insert(subset.begin(), subset.end());
    CHECK(members.size() == 5); // a partition of the inputs

    REQUIRE(run.raw_criteria.size() == 2);
    CHECK(run.raw_criteria[0].name == "Activity"); // smallest spelling won
    CHECK(run.raw_criteria[1].name == "Location");
    CHECK(run.warnings.empty());

    // Same seed, same subsets; different seed, different order for this size.
    auto again = propose_from_captions(captions, suite_backends(model), options);
    CHECK(again.subsets == run.subsets);
}

TEST_CASE("caption proposer recovers via one format re-prompt") {
    auto model = std::make_shared<MockBackend>();
    // The reminder-tagged retry parses; the first attempt never does.
    model->add_chat_rule({{"Reminder:"}, "", std::nullopt, "* Recovered"});
    model->add_chat_rule({{}, "", std::nullopt, "I cannot make a list, sorry."});
    std::vector<CaptionRecord> captions{{"img_1", "caption", CaptionKind::generic, ""}};
    ProposerOptions options;
    options.subset_size = 10;
    auto run = propose_from_captions(captions, suite_backends(model), options);
    REQUIRE(run.raw_criteria.size() == 1);
    CHECK(run.raw_criteria[0].name == "Recovered");
    CHECK(run.warnings.empty());
    CHECK(model->call_count() == 2);
}

TEST_CASE("caption proposer skips a subset that never parses") {
    auto model = std::make_shared<MockBackend>();
    model->add_chat_rule({{}, "", std::nullopt, "still prose, no bullets"});
    std::vector<CaptionRecord> captions{{"img_1", "caption one", CaptionKind::generic, ""},
                                        {"img_2", "caption two", CaptionKind::generic, ""}};
    ProposerOptions options;
    options.subset_size = 1;
    auto run = propose_from_captions(captions, suite_backends(model), options);
    CHECK(run.raw_criteria.empty());
    REQUIRE(run.warnings.size() == 2);
    CHECK(run.warnings[0].find("skipped") != std::string::npos);

    CHECK_THROWS_AS(propose_from_captions({}, suite_backends(model), options),
                    ValidationError);
}

TEST_CASE("tag proposer splits prompts by token budget") {
    auto model = std::make_shared<MockBackend>();
    model->add_chat_rule({{"tagging results"}, "", std::nullopt, "* Subject\n* Palette"});

    std::vector<TagRecord> records;
    for (int i = 1; i <= 3; ++i) {
        TagRecord record;
        record.image_id = "img_" + std::to_string(i);
        record.tags = {{"alpha", 0.9}, {"beta", 0.8}, {"gamma", 0.7}};
        records.push_back(std::move(record));
    }

    ProposerOptions options;
    auto one_prompt = propose_from_tags(records, suite_backends(model), options);
    CHECK(one_prompt.subsets.size() == 1); // default budget swallows everything
    CHECK(one_prompt.subset_size == 0);
    CHECK(one_prompt.kind == "tag");
    REQUIRE(one_prompt.raw_criteria.size() == 2);
    CHECK(one_prompt.raw_criteria[0].provenance == Provenance::tag_proposer);

    // A budget barely above the scaffold forces one image per prompt.
    options.token_budget = estimate_tokens(prompts::tag_proposal({}).user) + 8;
    auto split = propose_from_tags(records, suite_backends(model), options);
    CHECK(split.subsets.size() == 3);
    for (const auto& subset : split.subsets) CHECK(subset.size() == 1);
    CHECK(split.raw_criteria.size() == 2); // same union either way
}

TEST_CASE("grid proposer composes padded grids and reads criteria per grid") {
    facet::testing::TempDir tmp;
    auto model = std::make_shared<MockBackend>();
    model->add_vision_rule({{"clustering criteria"}, "grid-0001", std::nullopt, "* Shape"});
    model->add_vision_rule({{"clustering criteria"}, "grid-0002", std::nullopt, "* Color"});

    Collection collection = toy_collection(5);
    StubGridComposer composer;
    ProposerOptions options;
    options.grid_side = 2;
    options.criteria_per_grid = 1;
    auto run = propose_from_image_grids(collection, composer, tmp.path(),
                                        suite_backends(model), options);

    CHECK(run.kind == "image_grid");
    CHECK(run.subset_size == 4);
    REQUIRE(run.subsets.size() == 2); // 4 + 1
    CHECK(run.subsets[1].size() == 1);
    REQUIRE(run.raw_criteria.size() == 2);
    CHECK(run.raw_criteria[0].name == "Color");
    CHECK(run.raw_criteria[1].name == "Shape");
    CHECK(run.raw_criteria[0].provenance == Provenance::image_proposer);

    // The stub records the layout, padding the short grid with blanks.
    auto tail = load_json_doc(tmp / "grid-0002.grid.json");
    CHECK(tail["tiles"].size() == 1);
    CHECK(tail["blank_tiles"] == 3);
}

TEST_CASE("refinement merges, discards, and recovers lineage by embedding") {
    auto model = std::make_shared<MockBackend>();
    model->add_chat_rule({{"merging similar criteria"}, "", std::nullopt,
                          "* Activity\n* Mood"});
    auto embedder = std::make_shared<HashEmbedder>(4);
    embedder->set_vector("activity", {1, 0, 0, 0});
    embedder->set_vector("doing things", {1, 0, 0, 0});
    embedder->set_vector("mood", {0, 1, 0, 0});
    embedder->set_vector("color palette", {0, 0, 1, 0});

    std::vector<Criterion> raw{
        {"raw-0001", "Activity", Provenance::caption_proposer, CriterionStatus::raw, {}},
        {"raw-0002", "Color Palette", Provenance::tag_proposer, CriterionStatus::raw, {}},
        {"raw-0003", "Doing Things", Provenance::caption_proposer, CriterionStatus::raw, {}},
    };
    ProposerOptions options;
    auto result = refine_criteria_pool(raw, suite_backends(model, embedder), options);

    CHECK_FALSE(result.unrefined);
    REQUIRE(result.refined.size() == 2);
    CHECK(result.refined[0].criterion_id == "crit-0001");
    CHECK(result.refined[0].name == "Activity");
    CHECK(result.refined[0].status == CriterionStatus::refined);
    CHECK(result.refined[0].merged_from ==
          std::vector<std::string>{"raw-0001", "raw-0003"});
    CHECK(result.refined[0].provenance == Provenance::caption_proposer);
    CHECK(result.refined[1].name == "Mood");
    CHECK(result.refined[1].merged_from.empty());
    CHECK(result.discarded == std::vector<std::string>{"raw-0002"});
    // The contributor-less refined name is called out.
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("Mood") != std::string::npos);
}

TEST_CASE("refinement passes the pool through when the response never parses") {
    auto model = std::make_shared<MockBackend>();
    model->add_chat_rule({{}, "", std::nullopt, "no bullets at all"});
    auto embedder = std::make_shared<HashEmbedder>(4);
    std::vector<Criterion> raw{
        {"raw-0001", "Activity", Provenance::caption_proposer, CriterionStatus::raw, {}},
        {"raw-0002", "Location", Provenance::image_proposer, CriterionStatus::raw, {}},
    };
    ProposerOptions options;
    auto result = refine_criteria_pool(raw, suite_backends(model, embedder), options);

    CHECK(result.unrefined);
    REQUIRE(result.refined.size() == 2);
    CHECK(result.refined[0].name == "Activity");
    CHECK(result.refined[0].status == CriterionStatus::refined);
    CHECK(result.refined[0].merged_from == std::vector<std::string>{"raw-0001"});
    CHECK(result.refined[0].provenance == Provenance::caption_proposer);
    CHECK(result.refined[1].provenance == Provenance::image_proposer);
    CHECK(result.discarded.empty());
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("unparseable") != std::string::npos);

    CHECK_THROWS_AS(refine_criteria_pool({}, suite_backends(model, embedder), options),
                    ValidationError);
}
