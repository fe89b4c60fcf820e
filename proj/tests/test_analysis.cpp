#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "grpolab/analysis.hpp"
#include "grpolab/errors.hpp"

using namespace grpolab;

namespace {

// Environment with a single bucket and no length noise; with rho = 0 the
// per-template accuracy is flat, which keeps the enumeration below small.
EnvConfig enumeration_env() {
  EnvConfig config;
  config.num_buckets = 1;
  config.templates_per_bucket = 3;
  config.length_noise_sd = 0.0;
  config.correlation_knob = 0.0;
  return config;
}

RewardConfig outcome_config() {
  RewardConfig reward;
  reward.kind = RewardKind::Outcome;
  reward.total_steps = 100;
  return reward;
}

RewardConfig crf_config() {
  RewardConfig reward;
  reward.kind = RewardKind::Crf;
  reward.total_steps = 100;
  return reward;
}

// Exact Var[g] for single-group (G = 2) outcome-reward gradients under a
// uniform policy over K templates with flat accuracy p: enumerate every
// (template pair, outcome pair) combination.
double enumerate_group_variance(int num_templates, double p, double adv_epsilon) {
  const double pi = 1.0 / static_cast<double>(num_templates);
  std::vector<double> mean_g(static_cast<std::size_t>(num_templates), 0.0);
  double expected_sq = 0.0;

  for (int a1 = 0; a1 < num_templates; ++a1) {
    for (int a2 = 0; a2 < num_templates; ++a2) {
      for (int o1 = 0; o1 <= 1; ++o1) {
        for (int o2 = 0; o2 <= 1; ++o2) {
          const double prob = pi * pi * (o1 ? p : 1.0 - p) * (o2 ? p : 1.0 - p);
          std::array<double, 2> adv{0.0, 0.0};
          if (o1 != o2) {
            const double mu = 0.5;
            const double sigma = 0.5;  // population sd of {0, 1}
            adv[0] = (o1 - mu) / (sigma + adv_epsilon);
            adv[1] = (o2 - mu) / (sigma + adv_epsilon);
          }
          std::vector<double> g(static_cast<std::size_t>(num_templates), 0.0);
          for (int k = 0; k < num_templates; ++k) {
            const double d1 = (k == a1 ? 1.0 : 0.0) - pi;
            const double d2 = (k == a2 ? 1.0 : 0.0) - pi;
            g[static_cast<std::size_t>(k)] = 0.5 * (adv[0] * d1 + adv[1] * d2);
          }
          double sq = 0.0;
          for (int k = 0; k < num_templates; ++k) {
            sq += g[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
            mean_g[static_cast<std::size_t>(k)] += prob * g[static_cast<std::size_t>(k)];
          }
          expected_sq += prob * sq;
        }
      }
    }
  }
  double mean_sq = 0.0;
  for (double v : mean_g) mean_sq += v * v;
  return expected_sq - mean_sq;
}

TrainHistory synthetic_history(const std::vector<double>& rewards,
                               const std::vector<double>& lengths) {
  TrainHistory history;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    StepRecord s;
    s.step = static_cast<long>(i + 1);
    s.mean_shaped_reward = rewards[i];
    s.mean_length_tokens = lengths[i];
    history.steps.push_back(s);
  }
  return history;
}

}  // namespace

TEST_CASE("gradient variance vanishes in a deterministic environment") {
  EnvConfig config;
  config.accuracy_easy = 1.0;
  config.accuracy_hard = 1.0;
  config.length_noise_sd = 0.0;
  const SyntheticEnv env(config);
  PolicyParams policy = env.uniform_policy();
  for (int b = 0; b < policy.num_buckets(); ++b) policy.logits.at(b, 1) = 60.0;

  VarianceProbeOptions options;
  options.batches = 60;
  options.groups_per_batch = 2;
  options.group_size = 4;
  options.covariance_samples = 0;
  options.bootstrap_resamples = 100;

  const VarianceEntry entry =
      gradient_variance(policy, env, outcome_config(), options, RngStream(1));
  CHECK(entry.var_estimate == 0.0);
  CHECK(entry.ci95.low == 0.0);
  CHECK(entry.ci95.high == 0.0);
  CHECK(entry.sigma_g_sq() == 0.0);
}

TEST_CASE("gradient variance matches the enumeration oracle") {
  const SyntheticEnv env(enumeration_env());
  const PolicyParams policy = env.uniform_policy();
  const RewardConfig reward = outcome_config();

  VarianceProbeOptions options;
  options.batches = 2000;
  options.groups_per_batch = 1;
  options.group_size = 2;
  options.covariance_samples = 0;
  options.bootstrap_resamples = 500;

  const VarianceEntry entry = gradient_variance(policy, env, reward, options, RngStream(7));
  const double exact = enumerate_group_variance(3, 0.5, reward.adv_epsilon);
  CHECK(exact == doctest::Approx(1.0 / 6.0).epsilon(1e-5));
  // The 95% percentile CI spans ~3.92 bootstrap standard errors.
  const double bootstrap_se = (entry.ci95.high - entry.ci95.low) / 3.92;
  CHECK(std::abs(entry.var_estimate - exact) <= 3.0 * bootstrap_se);
}

TEST_CASE("doubling groups_per_batch halves the batch-gradient variance") {
  const SyntheticEnv env(enumeration_env());
  const PolicyParams policy = env.uniform_policy();
  const RewardConfig reward = outcome_config();

  VarianceProbeOptions options;
  options.batches = 600;
  options.group_size = 2;
  options.covariance_samples = 0;
  options.bootstrap_resamples = 100;

  options.groups_per_batch = 4;
  const double var4 = gradient_variance(policy, env, reward, options, RngStream(11)).var_estimate;
  options.groups_per_batch = 8;
  const double var8 = gradient_variance(policy, env, reward, options, RngStream(12)).var_estimate;
  const double ratio = var4 / var8;
  CHECK(ratio > 2.0 * 0.75);
  CHECK(ratio < 2.0 * 1.25);
}

TEST_CASE("variance probe option validation") {
  const SyntheticEnv env(enumeration_env());
  VarianceProbeOptions options;
  options.batches = 10;  // below the M >= 50 precondition
  CHECK_THROWS_AS(
      gradient_variance(env.uniform_policy(), env, outcome_config(), options, RngStream(1)),
      Error);
}

TEST_CASE("variance sweep: identical configs get identical estimates") {
  EnvConfig config;
  config.correlation_knob = 0.8;
  const SyntheticEnv env(config);
  const std::vector<PolicyParams> probes{env.uniform_policy()};
  const std::vector<RewardConfig> configs{outcome_config(), crf_config(), crf_config()};

  VarianceProbeOptions options;
  options.batches = 80;
  options.groups_per_batch = 2;
  options.group_size = 6;
  options.covariance_samples = 2000;
  options.bootstrap_resamples = 200;

  const VarianceSweep sweep =
      variance_reduction_sweep(env, probes, configs, options, RngStream(3));
  REQUIRE(sweep.cells.size() == 3);
  CHECK(sweep.cells[1].entry.var_estimate == sweep.cells[2].entry.var_estimate);
  CHECK(sweep.cells[1].entry.ci95.low == sweep.cells[2].entry.ci95.low);
  CHECK(sweep.cells[1].entry.ci95.high == sweep.cells[2].entry.ci95.high);
  REQUIRE(sweep.etas.size() == 2);
  CHECK(sweep.etas[0].eta_hat == sweep.etas[1].eta_hat);

  SUBCASE("the sweep itself is deterministic") {
    const VarianceSweep again =
        variance_reduction_sweep(env, probes, configs, options, RngStream(3));
    CHECK(again.cells[0].entry.var_estimate == sweep.cells[0].entry.var_estimate);
    CHECK(again.etas[0].eta_hat == sweep.etas[0].eta_hat);
    CHECK(again.cells[0].entry.measured_cov == sweep.cells[0].entry.measured_cov);
  }
  SUBCASE("outcome-only sweeps report no eta") {
    const std::vector<RewardConfig> only{outcome_config()};
    const VarianceSweep solo = variance_reduction_sweep(env, probes, only, options, RngStream(3));
    CHECK(solo.cells.size() == 1);
    CHECK(solo.etas.empty());
  }
}

TEST_CASE("convergence analysis with a frozen policy keeps the running mean flat") {
  EnvConfig env_config;
  env_config.correlation_knob = 0.8;
  const SyntheticEnv env(env_config);

  OptimizerState optimizer;
  optimizer.base_lr = 0.0;

  TrainOptions run;
  run.total_steps = 32;
  run.questions_per_step = 4;
  run.group_size = 4;
  run.seed = 5;

  ConvergenceOptions options;
  options.checkpoints = {8, 16, 32};
  options.oracle_samples = 3000;
  options.sigma_probe_batches = 50;

  ConvergenceRun result = convergence_analysis(env, crf_config(), optimizer, run, options);
  REQUIRE(result.checkpoints.size() == 3);
  const double first = result.checkpoints[0].running_mean_grad_sq;
  for (const ConvergenceCheckpoint& cp : result.checkpoints) {
    CHECK(cp.running_mean_grad_sq == doctest::Approx(first).epsilon(0.15));
  }

  apply_bound(result, result.best_objective);
  for (const ConvergenceCheckpoint& cp : result.checkpoints) CHECK(cp.bound_ok);
}

TEST_CASE("convergence analysis validates its run spec") {
  const SyntheticEnv env(enumeration_env());
  OptimizerState optimizer;
  TrainOptions run;
  run.total_steps = 16;
  run.seed = 1;
  ConvergenceOptions options;
  options.checkpoints = {4, 8};
  options.oracle_samples = 16;

  SUBCASE("schedule mismatch") {
    optimizer.schedule = LrSchedule::Constant;
    CHECK_THROWS_AS(convergence_analysis(env, crf_config(), optimizer, run, options), Error);
  }
  SUBCASE("checkpoint outside the horizon") {
    options.checkpoints = {4, 64};
    CHECK_THROWS_AS(convergence_analysis(env, crf_config(), optimizer, run, options), Error);
  }
  SUBCASE("non-increasing checkpoints") {
    options.checkpoints = {8, 8};
    CHECK_THROWS_AS(convergence_analysis(env, crf_config(), optimizer, run, options), Error);
  }
}

TEST_CASE("length collapse detector on Fig. 2(a)-shaped histories") {
  const int n = 400;
  std::vector<double> rewards, lengths;
  for (int t = 0; t < n; ++t) {
    rewards.push_back(1.0 + 0.002 * t);                      // reward still increasing
    lengths.push_back(std::max(2.0, 100.0 * std::exp(-0.02 * t)));  // length crashes to 2%
  }
  const TrainHistory history = synthetic_history(rewards, lengths);
  CollapseThresholds thresholds;
  thresholds.window = 50;

  const CollapseVerdict verdict = detect_length_collapse(history, thresholds);
  CHECK(verdict.kind == CollapseKind::LengthCollapse);
  REQUIRE(verdict.onset_step.has_value());
  CHECK(*verdict.onset_step > 100);
  CHECK(verdict.evidence.reward_slope >= 0.0);
  CHECK(verdict.evidence.length_slope < 0.0);
  CHECK(verdict.evidence.length_ratio_to_initial < 0.10);

  SUBCASE("the same history is not a training collapse") {
    const CollapseVerdict tc = detect_training_collapse(history, thresholds);
    CHECK(tc.kind == CollapseKind::None);
  }
}

TEST_CASE("training collapse detector on Fig. 2(b)-shaped histories") {
  const int n = 400;
  std::vector<double> rewards, lengths;
  for (int t = 0; t < n; ++t) {
    // Rise to a peak near t = 120, then crash.
    const double phase = t < 120 ? t / 120.0 : std::exp(-0.03 * (t - 120));
    rewards.push_back(2.0 * phase + 0.01);
    lengths.push_back(150.0 * phase + 5.0);
  }
  const TrainHistory history = synthetic_history(rewards, lengths);
  CollapseThresholds thresholds;
  thresholds.window = 50;

  const CollapseVerdict verdict = detect_training_collapse(history, thresholds);
  CHECK(verdict.kind == CollapseKind::TrainingCollapse);
  REQUIRE(verdict.onset_step.has_value());
  CHECK(verdict.evidence.reward_slope < 0.0);
  CHECK(verdict.evidence.length_slope < 0.0);

  SUBCASE("reward-slope sign keeps the detectors disjoint at onset") {
    const CollapseVerdict lc = detect_length_collapse(history, thresholds);
    if (lc.kind != CollapseKind::None) CHECK(*lc.onset_step != *verdict.onset_step);
  }
}

TEST_CASE("collapse detectors stay quiet on benign histories") {
  CollapseThresholds thresholds;
  thresholds.window = 50;
  const int n = 300;

  SUBCASE("flat series") {
    const std::vector<double> rewards(n, 1.0), lengths(n, 100.0);
    const TrainHistory history = synthetic_history(rewards, lengths);
    CHECK(detect_length_collapse(history, thresholds).kind == CollapseKind::None);
    CHECK(detect_training_collapse(history, thresholds).kind == CollapseKind::None);
  }
  SUBCASE("healthy: reward and length both rising") {
    std::vector<double> rewards, lengths;
    for (int t = 0; t < n; ++t) {
      rewards.push_back(0.5 + 0.003 * t);
      lengths.push_back(100.0 + 0.5 * t);
    }
    const TrainHistory history = synthetic_history(rewards, lengths);
    CHECK(detect_length_collapse(history, thresholds).kind == CollapseKind::None);
    CHECK(detect_training_collapse(history, thresholds).kind == CollapseKind::None);
  }
  SUBCASE("mild length reduction is not a collapse") {
    std::vector<double> rewards, lengths;
    for (int t = 0; t < n; ++t) {
      rewards.push_back(0.5 + 0.003 * t);
      lengths.push_back(100.0 - 0.15 * std::min(t, 200));  // floors at 70% of initial
    }
    const TrainHistory history = synthetic_history(rewards, lengths);
    CHECK(detect_length_collapse(history, thresholds).kind == CollapseKind::None);
    CHECK(detect_training_collapse(history, thresholds).kind == CollapseKind::None);
  }
}

TEST_CASE("collapse detectors reject short histories") {
  CollapseThresholds thresholds;
  thresholds.window = 50;
  const std::vector<double> rewards(60, 1.0), lengths(60, 100.0);
  const TrainHistory history = synthetic_history(rewards, lengths);
  CHECK_THROWS_AS(detect_length_collapse(history, thresholds), Error);
  CHECK_THROWS_AS(detect_training_collapse(history, thresholds), Error);
}
