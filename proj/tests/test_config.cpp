#include <doctest.h>

#include <nlohmann/json.hpp>

#include "grpolab/config.hpp"
#include "grpolab/errors.hpp"
#include "support.hpp"

using namespace grpolab;
using nlohmann::json;

TEST_CASE("defaults: a minimal config fills the documented values") {
  const ExperimentConfig config = config_from_json(json::object(), "test");
  CHECK(config.reward.alpha == 1.0);          // Appendix-D style default
  CHECK(config.run.group_size == 8);          // G default
  CHECK(config.reward.adv_epsilon == 1e-6);   // epsilon' default
  CHECK(config.reward.kind == RewardKind::Crf);
  CHECK(config.reward.total_steps == config.run.total_steps);  // inherited
}

TEST_CASE("config omitting alpha gets alpha = 1.0") {
  const json root = {{"reward", {{"kind", "cosine"}}}};
  const ExperimentConfig config = config_from_json(root, "test");
  CHECK(config.reward.alpha == 1.0);
  CHECK(config.reward.kind == RewardKind::Cosine);
}

TEST_CASE("unknown and mistyped fields are named in errors") {
  SUBCASE("unknown top-level key") {
    const json root = {{"rewards", json::object()}};
    CHECK_THROWS_WITH_AS(config_from_json(root, "test"), doctest::Contains("rewards"), Error);
  }
  SUBCASE("unknown nested key") {
    const json root = {{"env", {{"nmu_buckets", 4}}}};
    CHECK_THROWS_WITH_AS(config_from_json(root, "test"), doctest::Contains("env.nmu_buckets"),
                         Error);
  }
  SUBCASE("wrong type") {
    const json root = {{"run", {{"total_steps", "many"}}}};
    CHECK_THROWS_WITH_AS(config_from_json(root, "test"), doctest::Contains("run.total_steps"),
                         Error);
  }
  SUBCASE("validation failure names the field") {
    const json root = {{"env", {{"num_buckets", 0}}}};
    CHECK_THROWS_WITH_AS(config_from_json(root, "test"), doctest::Contains("env.num_buckets"),
                         Error);
  }
}

TEST_CASE("json files load with positions on parse errors") {
  testutil::TempDir dir("config_json");

  SUBCASE("good file") {
    const auto path = dir.path() / "good.json";
    testutil::write_file(path, R"({"run": {"total_steps": 17, "seeds": [3, 4]}})");
    const ExperimentConfig config = load_config(path);
    CHECK(config.run.total_steps == 17);
    CHECK(config.run.seeds == std::vector<std::uint64_t>{3, 4});
  }
  SUBCASE("empty file is a parse error") {
    const auto path = dir.path() / "empty.json";
    testutil::write_file(path, "");
    try {
      (void)load_config(path);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.category() == Error::Category::ConfigParse);
    }
  }
  SUBCASE("malformed json reports line and column") {
    const auto path = dir.path() / "bad.json";
    testutil::write_file(path, "{\n  \"run\": {\n    \"total_steps\": ,\n  }\n}");
    try {
      (void)load_config(path);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.category() == Error::Category::ConfigParse);
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  SUBCASE("unsupported extension") {
    const auto path = dir.path() / "config.yaml";
    testutil::write_file(path, "run: {}");
    CHECK_THROWS_AS(load_config(path), Error);
  }
}

TEST_CASE("toml files load through the same schema") {
  testutil::TempDir dir("config_toml");
  const auto path = dir.path() / "config.toml";
  testutil::write_file(path, R"(# experiment
output_dir = "out"

[env]
correlation_knob = 0.8
short_wrong_template = true

[reward]
kind = "weighted_sum"
alpha = 2.5

[reward.cosine]
l_max = 256

[run]
total_steps = 64
seeds = [10, 11, 12]
)");
  const ExperimentConfig config = load_config(path);
  CHECK(config.output_dir == "out");
  CHECK(config.env.correlation_knob == 0.8);
  CHECK(config.env.short_wrong_template == true);
  CHECK(config.reward.kind == RewardKind::WeightedSum);
  CHECK(config.reward.alpha == 2.5);
  CHECK(config.reward.cosine.l_max == 256);
  CHECK(config.run.total_steps == 64);
  CHECK(config.run.seeds == std::vector<std::uint64_t>{10, 11, 12});
  CHECK(config.reward.total_steps == 64);  // inherited

  SUBCASE("toml errors carry line numbers") {
    const auto bad = dir.path() / "bad.toml";
    testutil::write_file(bad, "[run]\ntotal_steps = = 3\n");
    try {
      (void)load_config(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.category() == Error::Category::ConfigParse);
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
  SUBCASE("duplicate keys are rejected") {
    const auto dup = dir.path() / "dup.toml";
    testutil::write_file(dup, "[run]\ntotal_steps = 3\ntotal_steps = 4\n");
    CHECK_THROWS_AS(load_config(dup), Error);
  }
}

TEST_CASE("round-trip: canonical dump reloads to the same hash") {
  testutil::TempDir dir("config_hash");
  ExperimentConfig config = testutil::tiny_config();
  config.env.correlation_knob = 0.4;
  config.output_dir = "results";

  const std::string hash_before = config_hash(config);
  const auto path = dir.path() / "canonical.json";
  testutil::write_file(path, canonical_dump(config));
  const ExperimentConfig reloaded = load_config(path);
  CHECK(config_hash(reloaded) == hash_before);
  CHECK(canonical_dump(reloaded) == canonical_dump(config));

  SUBCASE("hash is sensitive to content") {
    ExperimentConfig other = config;
    other.reward.alpha = 0.5;
    CHECK(config_hash(other) != hash_before);
  }
}

TEST_CASE("toml and json forms of the same config hash identically") {
  testutil::TempDir dir("config_cross");
  const auto toml_path = dir.path() / "a.toml";
  const auto json_path = dir.path() / "a.json";
  testutil::write_file(toml_path, "[run]\ntotal_steps = 44\nseeds = [9]\n");
  testutil::write_file(json_path, R"({"run": {"total_steps": 44, "seeds": [9]}})");
  CHECK(config_hash(load_config(toml_path)) == config_hash(load_config(json_path)));
}
