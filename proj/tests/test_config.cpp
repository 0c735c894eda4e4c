#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "diffscribe/config.hpp"
#include "diffscribe/errors.hpp"

using namespace diffscribe;

TEST_CASE("empty object gives all defaults") {
  const RunConfig config = parse_config_json("{}");
  CHECK(config.tokenizer.nl_min_count == 3);
  CHECK(config.tokenizer.code_min_count == 2);
  CHECK_FALSE(config.tokenizer.lowercase_nl);
  CHECK(config.hyper.d_hidden == 256);
  CHECK(config.hyper.d_embed == 256);
  CHECK(config.hyper.dropout_p == 0.5);
  CHECK(config.hyper.learning_rate == 1e-3);
  CHECK(config.hyper.grad_clip == 5.0);
  CHECK(config.hyper.batch_size == 4);
  CHECK(config.patience == 10);
  CHECK(config.variant == DatasetVariant::Atomic);
  CHECK(config.split_ratios == std::array<double, 3>{0.8, 0.1, 0.1});
  CHECK(config.beam_width == 10);
  CHECK(config.max_len == 20);
  CHECK_FALSE(config.mask_unk);
}

TEST_CASE("unknown keys are rejected by name") {
  bool threw = false;
  try {
    parse_config_json(R"({"beem": 10})");
  } catch (const BadConfigError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("beem") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("explicit values are applied and echoed") {
  const RunConfig config = parse_config_json(
      R"({"beam_width": 10, "d_hidden": 64, "variant": "uniaction-add",
          "dropout_p": 0.1, "seed": 42, "commits_dir": "/tmp/c"})");
  CHECK(config.beam_width == 10);
  CHECK(config.hyper.d_hidden == 64);
  CHECK(config.variant == DatasetVariant::UniActionAdd);
  CHECK(config.hyper.dropout_p == 0.1);
  CHECK(config.hyper.seed == 42);
  CHECK(config.commits_dir == "/tmp/c");

  const auto echoed = nlohmann::json::parse(config_to_json(config));
  CHECK(echoed.at("beam_width") == 10);
  CHECK(echoed.at("d_hidden") == 64);
  CHECK(echoed.at("variant") == "uniaction-add");
}

TEST_CASE("ill-typed and out-of-range values are rejected") {
  CHECK_THROWS_AS(parse_config_json(R"({"d_hidden": "big"})"), BadConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"dropout_p": 1.0})"), BadConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"nl_min_count": 0})"), BadConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"variant": "bogus"})"), BadConfigError);
  CHECK_THROWS_AS(parse_config_json("[1,2]"), BadConfigError);
  CHECK_THROWS_AS(parse_config_json("not json"), BadConfigError);
}

TEST_CASE("missing config file is a BadConfig error") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), BadConfigError);
}
