#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reportminer/config.hpp"

#include "testutil.hpp"

using namespace reportminer;

TEST_CASE("config defaults hold the paper hyperparameters") {
    config::PipelineConfig cfg;
    CHECK(cfg.embedding.window == 3);
    CHECK(cfg.embedding.dim == 300);
    CHECK(cfg.embedding.negatives == 64);
    CHECK(cfg.embedding.batch == 128);
    CHECK(cfg.embedding.learning_rate == 1.0);
    CHECK(cfg.min_count == 1);
    CHECK(cfg.bucket_width == 50);
    CHECK(cfg.classifier.learning_rate == 0.1);
    CHECK(cfg.classifier.epochs == 50);
    CHECK(cfg.classifier.batch == 32);
    CHECK_FALSE(cfg.classifier.fine_tune);
}

TEST_CASE("serialize then parse is the identity") {
    config::PipelineConfig cfg;
    cfg.reports_path = "data/reports.jsonl";
    cfg.labeled_path = "data/labeled.tsv";
    cfg.out_dir = "results";
    cfg.seed = 123456789;
    cfg.arch = "cnn";
    cfg.min_count = 2;
    cfg.bucket_width = 25;
    cfg.embedding.dim = 50;
    cfg.embedding.learning_rate = 0.0625;
    cfg.embedding.noise_power = 0.75;
    cfg.classifier.epochs = 12;
    cfg.classifier.fine_tune = true;

    auto text = config::serialize(cfg);
    auto parsed = config::parse_config_text(text);
    CHECK(parsed == cfg);
    // and serialization is a fixed point
    CHECK(config::serialize(parsed) == text);
}

TEST_CASE("parser details") {
    SUBCASE("comments and blank lines skipped") {
        auto cfg = config::parse_config_text(
            "# a comment\n\n  seed = 42  \narch = avg\n");
        CHECK(cfg.seed == 42);
        CHECK(cfg.arch == "avg");
    }
    SUBCASE("unknown key rejected") {
        CHECK_THROWS_WITH_AS(config::parse_config_text("bogus = 1\n"),
                             doctest::Contains("bogus"), std::invalid_argument);
    }
    SUBCASE("malformed line rejected") {
        CHECK_THROWS_AS(config::parse_config_text("just some words\n"),
                        std::invalid_argument);
    }
    SUBCASE("bad value rejected") {
        CHECK_THROWS_AS(config::parse_config_text("embedding.dim = large\n"),
                        std::invalid_argument);
        CHECK_THROWS_AS(config::parse_config_text("classifier.fine_tune = maybe\n"),
                        std::invalid_argument);
    }
    SUBCASE("missing file rejected") {
        CHECK_THROWS_AS(config::load_config_file("no/such/config.txt"),
                        std::runtime_error);
    }
}
