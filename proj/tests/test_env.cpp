#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "grpolab/env.hpp"
#include "grpolab/errors.hpp"

using namespace grpolab;

TEST_CASE("optimal length anchors") {
  EnvConfig config;
  config.base_length = 100.0;
  const SyntheticEnv env(config);
  CHECK(env.optimal_length(4.25) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(env.optimal_length(6.75) == doctest::Approx(115.0).epsilon(1e-12));
  CHECK(env.optimal_length(9.0) == doctest::Approx(128.5).epsilon(1e-12));
  CHECK_THROWS_AS(env.optimal_length(2.9), Error);
  CHECK_THROWS_AS(env.optimal_length(9.1), Error);
}

TEST_CASE("difficulty-length calibration: 6.75 vs 4.25 is exactly 15%") {
  EnvConfig config;
  config.base_length = 240.0;
  const SyntheticEnv env(config);
  const double ratio = env.optimal_length(6.75) / env.optimal_length(4.25);
  CHECK(std::abs(ratio - 1.15) < 1e-6);
  // Strictly increasing in difficulty.
  double prev = env.optimal_length(3.0);
  for (double d = 3.1; d <= 9.0; d += 0.1) {
    const double v = env.optimal_length(d);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("question sampling: determinism, support, mean") {
  const SyntheticEnv env(EnvConfig{});

  SUBCASE("same stream state gives the same question") {
    RngStream a(42), b(42);
    const Question qa = env.sample_question(a, 7);
    const Question qb = env.sample_question(b, 7);
    CHECK(qa.difficulty == qb.difficulty);
    CHECK(qa.bucket == qb.bucket);
    CHECK(qa.id == 7);
  }
  SUBCASE("support and bucket derivation") {
    RngStream stream(1);
    for (int i = 0; i < 10000; ++i) {
      const Question q = env.sample_question(stream, static_cast<std::uint64_t>(i));
      CHECK(q.difficulty >= 3.0);
      CHECK(q.difficulty <= 9.0);
      const int expected = std::min(
          env.num_buckets() - 1,
          static_cast<int>((q.difficulty - 3.0) / env.config().bucket_width()));
      CHECK(q.bucket == expected);
    }
  }
  SUBCASE("empirical mean difficulty is 6.0 within 0.1") {
    RngStream stream(2);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i)
      sum += env.sample_question(stream, static_cast<std::uint64_t>(i)).difficulty;
    CHECK(std::abs(sum / 10000.0 - 6.0) < 0.1);
  }
}

TEST_CASE("template tables respect the declared invariants") {
  EnvConfig config;
  config.accuracy_ramp = 0.5;
  config.correlation_knob = 0.6;
  config.short_wrong_template = true;
  const SyntheticEnv env(config);

  for (int b = 0; b < env.num_buckets(); ++b) {
    const auto templates = env.bucket_templates(b);
    CHECK(static_cast<int>(templates.size()) == env.num_templates());
    CHECK(templates[0].length_tokens == EnvConfig::kShortTemplateLength);
    CHECK(templates[0].p_correct == 0.0);

    const int plateau = env.plateau_index(b);
    for (std::size_t j = 1; j < templates.size(); ++j) {
      CHECK(templates[j].length_tokens > templates[j - 1].length_tokens);
      CHECK(templates[j].index == static_cast<int>(j));
      // Base accuracy ramps up to the plateau and is constant after.
      if (static_cast<int>(j) > 1 && static_cast<int>(j) <= plateau)
        CHECK(templates[j].base_p_correct >= templates[j - 1].base_p_correct);
      if (static_cast<int>(j) > plateau)
        CHECK(templates[j].base_p_correct ==
              templates[static_cast<std::size_t>(plateau)].base_p_correct);
      CHECK(templates[j].concise == (static_cast<int>(j) <= plateau));
    }
  }
}

TEST_CASE("env validation rejects bad configs") {
  EnvConfig config;
  SUBCASE("too few templates") {
    config.templates_per_bucket = 2;
    CHECK_THROWS_AS(SyntheticEnv{config}, Error);
  }
  SUBCASE("correlation knob out of range") {
    config.correlation_knob = 1.5;
    CHECK_THROWS_AS(SyntheticEnv{config}, Error);
  }
  SUBCASE("short template must stay the shortest") {
    config.short_wrong_template = true;
    config.base_length = 10.0;  // 0.25 * L* collides with the 5-token template
    CHECK_THROWS_AS(SyntheticEnv{config}, Error);
  }
}

TEST_CASE("conciseness rubric frozen examples") {
  SUBCASE("ideal solution scores 1.0") {
    const ConcisenessFeatures f{0, 0, 100, 100.0};
    CHECK(score_conciseness(f).value == 1.0);
  }
  SUBCASE("very verbose solution bottoms out at 0.1") {
    const ConcisenessFeatures f{5, 2, 210, 100.0};
    CHECK(score_conciseness(f).value == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("each 25% of excess length beyond the 5% grace costs one band") {
    CHECK(score_conciseness(ConcisenessFeatures{0, 0, 104, 100.0}).value == 1.0);
    CHECK(score_conciseness(ConcisenessFeatures{0, 0, 131, 100.0}).value ==
          doctest::Approx(0.9).epsilon(1e-12));
    CHECK(score_conciseness(ConcisenessFeatures{0, 0, 156, 100.0}).value ==
          doctest::Approx(0.8).epsilon(1e-12));
  }
}

TEST_CASE("rubric is nonincreasing in every feature and stays on the grid") {
  RngStream stream(17);
  for (int trial = 0; trial < 4000; ++trial) {
    ConcisenessFeatures f;
    f.repetition_units = static_cast<int>(stream.next_index(6));
    f.irrelevant_steps = static_cast<int>(stream.next_index(6));
    f.optimal_length = 50.0 + 200.0 * stream.next_unit();
    f.length_tokens = 1 + static_cast<int>(stream.next_index(600));

    const double base = score_conciseness(f).value;
    CHECK(base >= 0.1);
    CHECK(base <= 1.0);
    CHECK(std::abs(base * 10.0 - std::round(base * 10.0)) < 1e-9);

    ConcisenessFeatures g = f;
    g.repetition_units += 1;
    CHECK(score_conciseness(g).value <= base);
    g = f;
    g.irrelevant_steps += 1;
    CHECK(score_conciseness(g).value <= base);
    g = f;
    g.length_tokens += 40;
    CHECK(score_conciseness(g).value <= base);
  }
}

TEST_CASE("rollout groups: degenerate softmax and determinism") {
  const SyntheticEnv env(EnvConfig{});
  PolicyParams policy = env.uniform_policy();

  SUBCASE("a near-delta policy always picks its template") {
    for (int b = 0; b < policy.num_buckets(); ++b) policy.logits.at(b, 3) = 50.0;
    RngStream stream(77);
    const Question q = env.sample_question(stream, 0);
    const GroupRollout rollout = env.rollout_group(policy, q, 8, stream);
    for (const SampleRecord& s : rollout.samples) CHECK(s.template_index == 3);
  }
  SUBCASE("identical streams give identical rollouts") {
    RngStream a(5), b(5);
    const Question qa = env.sample_question(a, 3);
    const Question qb = env.sample_question(b, 3);
    const GroupRollout ra = env.rollout_group(policy, qa, 6, a);
    const GroupRollout rb = env.rollout_group(policy, qb, 6, b);
    REQUIRE(ra.samples.size() == rb.samples.size());
    for (std::size_t i = 0; i < ra.samples.size(); ++i) {
      CHECK(ra.samples[i].template_index == rb.samples[i].template_index);
      CHECK(ra.samples[i].correct == rb.samples[i].correct);
      CHECK(ra.samples[i].length_tokens == rb.samples[i].length_tokens);
      CHECK(ra.samples[i].score.value == rb.samples[i].score.value);
      CHECK(ra.samples[i].old_prob == rb.samples[i].old_prob);
    }
  }
  SUBCASE("rollouts record the sampling policy's probabilities") {
    RngStream stream(11);
    const Question q = env.sample_question(stream, 1);
    const GroupRollout rollout = env.rollout_group(policy, q, 4, stream);
    const std::vector<double> probs = softmax(policy.logits.row(q.bucket));
    for (const SampleRecord& s : rollout.samples)
      CHECK(s.old_prob == probs[static_cast<std::size_t>(s.template_index)]);
  }
  SUBCASE("group size below 2 is rejected") {
    RngStream stream(1);
    const Question q = env.sample_question(stream, 0);
    CHECK_THROWS_AS(env.rollout_group(policy, q, 1, stream), Error);
  }
  SUBCASE("length cap truncates realized lengths") {
    EnvConfig capped;
    capped.length_cap = 60;
    const SyntheticEnv cap_env(capped);
    PolicyParams p = cap_env.uniform_policy();
    RngStream stream(9);
    for (int i = 0; i < 50; ++i) {
      const Question q = cap_env.sample_question(stream, static_cast<std::uint64_t>(i));
      const GroupRollout rollout = cap_env.rollout_group(p, q, 4, stream);
      for (const SampleRecord& s : rollout.samples) {
        CHECK(s.length_tokens >= 1);
        CHECK(s.length_tokens <= 60);
      }
    }
  }
}

TEST_CASE("covariance control: sign follows the correlation knob") {
  const long n = 50000;
  const auto measure = [&](double rho) {
    EnvConfig config;
    config.correlation_knob = rho;
    const SyntheticEnv env(config);
    return env.covariance(env.uniform_policy(), n, RngStream(2024));
  };

  SUBCASE("rho = 0 is null within 3 standard errors") {
    const auto est = measure(0.0);
    CHECK(std::abs(est.value) <= 3.0 * est.std_error);
  }
  SUBCASE("rho = 0.8 is positive with 99% confidence and exceeds 0.02") {
    const auto est = measure(0.8);
    CHECK(est.value - 2.326 * est.std_error > 0.0);
    CHECK(est.value - 2.326 * est.std_error > 0.02);
  }
  SUBCASE("rho = -0.8 is negative with 99% confidence") {
    const auto est = measure(-0.8);
    CHECK(est.value + 2.326 * est.std_error < 0.0);
  }
  SUBCASE("rho = 0.5 keeps a positive sign at 99% confidence") {
    const auto est = measure(0.5);
    CHECK(est.value - 2.326 * est.std_error > 0.0);
  }
}
