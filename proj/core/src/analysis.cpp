#include "grpolab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "grpolab/errors.hpp"

namespace grpolab {

namespace {

constexpr std::uint64_t kRolloutTag = 0x726f6c6cULL;   // stream lane: rollouts
constexpr std::uint64_t kCovTag = 0x636f76ULL;         // stream lane: covariance probe
constexpr std::uint64_t kBootTag = 0x626f6f74ULL;      // stream lane: bootstrap
constexpr std::uint64_t kEtaTag = 0x657461ULL;         // stream lane: eta bootstrap
constexpr std::uint64_t kOracleTag = 0x6f7261636cULL;  // stream lane: gradient oracle
constexpr std::uint64_t kSigmaTag = 0x7369676dULL;     // stream lane: sigma probes

// Content hash of a reward config, used to key per-config streams so that
// identical configs get identical estimates regardless of list position.
std::uint64_t reward_config_key(const RewardConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto eat = [&h](std::uint64_t w) {
    h ^= w;
    h *= 0x100000001b3ULL;
  };
  const auto eat_double = [&](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    eat(bits);
  };
  eat(static_cast<std::uint64_t>(c.kind));
  eat_double(c.alpha);
  eat(static_cast<std::uint64_t>(c.total_steps));
  eat(static_cast<std::uint64_t>(c.cosine.l_max));
  eat_double(c.cosine.r0_correct);
  eat_double(c.cosine.rl_correct);
  eat_double(c.cosine.r0_wrong);
  eat_double(c.cosine.rl_wrong);
  eat_double(c.cosine.r_exceed);
  eat_double(c.adv_epsilon);
  return h;
}

void validate_probe_options(const VarianceProbeOptions& o) {
  if (o.batches < 50) throw_invalid_input("gradient_variance: need at least 50 batches");
  if (o.groups_per_batch < 1) throw_invalid_input("gradient_variance: groups_per_batch must be >= 1");
  if (o.group_size < 2) throw_invalid_input("gradient_variance: group_size must be >= 2");
  if (o.step < 0) throw_invalid_input("gradient_variance: step must be nonnegative");
  if (o.bootstrap_resamples < 2)
    throw_invalid_input("gradient_variance: bootstrap_resamples must be >= 2");
}

std::vector<std::vector<double>> softmax_rows(const PolicyParams& policy) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(policy.num_buckets()));
  for (int b = 0; b < policy.num_buckets(); ++b)
    rows[static_cast<std::size_t>(b)] = softmax(policy.logits.row(b));
  return rows;
}

void shape_rollout(const GroupRollout& rollout, const RewardConfig& reward, int step,
                   std::vector<OutcomeReward>& outcomes, std::vector<ConcisenessScore>& scores,
                   std::vector<int>& lengths, std::vector<double>& shaped_values) {
  const std::size_t n = rollout.samples.size();
  outcomes.resize(n);
  scores.resize(n);
  lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    outcomes[i] = outcome_reward(rollout.samples[i].correct);
    scores[i] = rollout.samples[i].score;
    lengths[i] = rollout.samples[i].length_tokens;
  }
  const std::vector<ShapedReward> shaped = shape_group(outcomes, scores, lengths, reward, step);
  shaped_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) shaped_values[i] = shaped[i].value;
}

// Single-group gradient at the probe policy itself: the ratio is exactly 1,
// so the clip never engages and the score-function form applies.
void probe_group_gradient(Matrix& g, const GroupRollout& rollout,
                          const std::vector<std::vector<double>>& probs,
                          std::span<const double> advantages) {
  g.zero();
  const auto& row_probs = probs[static_cast<std::size_t>(rollout.bucket)];
  auto row = g.row(rollout.bucket);
  const double inv_g = 1.0 / static_cast<double>(rollout.samples.size());
  for (std::size_t i = 0; i < rollout.samples.size(); ++i) {
    const double coeff = advantages[i] * inv_g;
    if (coeff == 0.0) continue;
    const int a = rollout.samples[i].template_index;
    for (std::size_t k = 0; k < row_probs.size(); ++k) {
      const double indicator = static_cast<int>(k) == a ? 1.0 : 0.0;
      row[k] += coeff * (indicator - row_probs[k]);
    }
  }
}

// Batch gradient of one config over a fixed set of group rollouts.
Matrix batch_gradient(const std::vector<const GroupRollout*>& groups,
                      const std::vector<std::vector<double>>& probs, const RewardConfig& reward,
                      int step, int num_buckets, int num_templates) {
  Matrix sum(num_buckets, num_templates);
  Matrix g(num_buckets, num_templates);
  std::vector<OutcomeReward> outcomes;
  std::vector<ConcisenessScore> scores;
  std::vector<int> lengths;
  std::vector<double> shaped_values;
  std::vector<double> advantages;

  for (const GroupRollout* rollout : groups) {
    shape_rollout(*rollout, reward, step, outcomes, scores, lengths, shaped_values);
    group_advantages_into(advantages, shaped_values, reward.adv_epsilon);
    probe_group_gradient(g, *rollout, probs, advantages);
    sum.add_scaled(g, 1.0 / static_cast<double>(groups.size()));
  }
  return sum;
}

double batch_spread(const std::vector<Matrix>& grads, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  const std::size_t dim = grads[0].data.size();
  std::vector<double> mean_vec(dim, 0.0);
  for (std::size_t idx : indices)
    for (std::size_t i = 0; i < dim; ++i) mean_vec[i] += grads[idx].data[i];
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& v : mean_vec) v *= inv;
  double acc = 0.0;
  for (std::size_t idx : indices) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = grads[idx].data[i] - mean_vec[i];
      acc += d * d;
    }
  }
  return acc * inv;
}

double full_spread(const std::vector<Matrix>& grads) {
  std::vector<std::size_t> all(grads.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return batch_spread(grads, all);
}

VarianceEntry make_entry(const RewardConfig& reward, const std::vector<Matrix>& batch_grads,
                         const VarianceProbeOptions& options, RngStream boot_stream,
                         const SyntheticEnv::CovarianceEstimate& cov) {
  VarianceEntry entry;
  entry.label = std::string(to_string(reward.kind));
  entry.n_batches = static_cast<int>(batch_grads.size());
  entry.var_estimate = full_spread(batch_grads);
  entry.ci95 = percentile_bootstrap(
      batch_grads.size(), options.bootstrap_resamples, 0.95, boot_stream,
      [&](std::span<const std::size_t> idx) { return batch_spread(batch_grads, idx); });
  entry.measured_cov = cov.value;
  entry.cov_std_error = cov.std_error;
  return entry;
}

}  // namespace

VarianceEntry gradient_variance(const PolicyParams& policy, const SyntheticEnv& env,
                                const RewardConfig& reward, const VarianceProbeOptions& options,
                                RngStream stream) {
  reward.validate();
  validate_probe_options(options);

  const auto probs = softmax_rows(policy);
  RngStream rollout_lane = stream.substream(kRolloutTag);

  std::vector<Matrix> batch_grads;
  batch_grads.reserve(static_cast<std::size_t>(options.batches));
  GroupRollout rollout;
  Matrix batch(policy.num_buckets(), policy.num_templates());
  Matrix group_grad(policy.num_buckets(), policy.num_templates());

  std::vector<OutcomeReward> outcomes;
  std::vector<ConcisenessScore> scores;
  std::vector<int> lengths;
  std::vector<double> shaped_values;
  std::vector<double> advantages;

  for (int m = 0; m < options.batches; ++m) {
    RngStream batch_stream = rollout_lane.substream(static_cast<std::uint64_t>(m));
    batch.zero();
    for (int g = 0; g < options.groups_per_batch; ++g) {
      RngStream s = batch_stream.substream(static_cast<std::uint64_t>(g));
      const std::uint64_t id = static_cast<std::uint64_t>(m) * options.groups_per_batch + g;
      const Question question = env.sample_question(s, id);
      env.rollout_group_with_probs(rollout, probs[static_cast<std::size_t>(question.bucket)],
                                   question, options.group_size, s);
      shape_rollout(rollout, reward, options.step, outcomes, scores, lengths, shaped_values);
      group_advantages_into(advantages, shaped_values, reward.adv_epsilon);
      probe_group_gradient(group_grad, rollout, probs, advantages);
      batch.add_scaled(group_grad, 1.0 / static_cast<double>(options.groups_per_batch));
    }
    batch_grads.push_back(batch);
  }

  SyntheticEnv::CovarianceEstimate cov{std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(), 0};
  if (options.covariance_samples > 0)
    cov = env.covariance(policy, options.covariance_samples, stream.substream(kCovTag));

  return make_entry(reward, batch_grads, options,
                    stream.substream(kBootTag).substream(reward_config_key(reward)), cov);
}

VarianceSweep variance_reduction_sweep(const SyntheticEnv& env,
                                       std::span<const PolicyParams> probe_policies,
                                       std::span<const RewardConfig> reward_configs,
                                       const VarianceProbeOptions& options, RngStream stream) {
  if (probe_policies.empty()) throw_invalid_input("variance sweep: no probe policies");
  if (reward_configs.empty()) throw_invalid_input("variance sweep: no reward configs");
  for (const RewardConfig& c : reward_configs) c.validate();
  validate_probe_options(options);

  VarianceSweep sweep;
  const std::size_t n_groups =
      static_cast<std::size_t>(options.batches) * static_cast<std::size_t>(options.groups_per_batch);

  for (std::size_t p = 0; p < probe_policies.size(); ++p) {
    const PolicyParams& policy = probe_policies[p];
    RngStream probe_stream = stream.substream(p);
    const auto probs = softmax_rows(policy);

    // Rollouts are reward-independent; draw once and share across configs.
    std::vector<GroupRollout> rollouts(n_groups);
    RngStream rollout_lane = probe_stream.substream(kRolloutTag);
    for (int m = 0; m < options.batches; ++m) {
      RngStream batch_stream = rollout_lane.substream(static_cast<std::uint64_t>(m));
      for (int g = 0; g < options.groups_per_batch; ++g) {
        RngStream s = batch_stream.substream(static_cast<std::uint64_t>(g));
        const std::uint64_t id = static_cast<std::uint64_t>(m) * options.groups_per_batch + g;
        const Question question = env.sample_question(s, id);
        env.rollout_group_with_probs(
            rollouts[static_cast<std::size_t>(m) * options.groups_per_batch + g],
            probs[static_cast<std::size_t>(question.bucket)], question, options.group_size, s);
      }
    }

    SyntheticEnv::CovarianceEstimate cov{std::numeric_limits<double>::quiet_NaN(),
                                         std::numeric_limits<double>::quiet_NaN(), 0};
    if (options.covariance_samples > 0)
      cov = env.covariance(policy, options.covariance_samples, probe_stream.substream(kCovTag));

    std::vector<std::vector<Matrix>> per_config_batches(reward_configs.size());
    std::vector<const GroupRollout*> batch_view(static_cast<std::size_t>(options.groups_per_batch));

    for (std::size_t c = 0; c < reward_configs.size(); ++c) {
      const RewardConfig& reward = reward_configs[c];
      auto& batches = per_config_batches[c];
      batches.reserve(static_cast<std::size_t>(options.batches));
      for (int m = 0; m < options.batches; ++m) {
        for (int g = 0; g < options.groups_per_batch; ++g)
          batch_view[static_cast<std::size_t>(g)] =
              &rollouts[static_cast<std::size_t>(m) * options.groups_per_batch + g];
        batches.push_back(batch_gradient(batch_view, probs, reward, options.step,
                                         policy.num_buckets(), policy.num_templates()));
      }
      SweepCell cell;
      cell.probe_index = static_cast<int>(p);
      cell.entry = make_entry(reward, batches, options,
                              probe_stream.substream(kBootTag).substream(reward_config_key(reward)),
                              cov);
      sweep.cells.push_back(std::move(cell));
    }

    // Empirical variance-reduction fraction against the Outcome baseline.
    std::ptrdiff_t outcome_index = -1;
    for (std::size_t c = 0; c < reward_configs.size(); ++c) {
      if (reward_configs[c].kind == RewardKind::Outcome) {
        outcome_index = static_cast<std::ptrdiff_t>(c);
        break;
      }
    }
    if (outcome_index >= 0) {
      const auto& outcome_batches = per_config_batches[static_cast<std::size_t>(outcome_index)];
      for (std::size_t c = 0; c < reward_configs.size(); ++c) {
        if (static_cast<std::ptrdiff_t>(c) == outcome_index) continue;
        const auto& config_batches = per_config_batches[c];
        EtaEntry eta;
        eta.probe_index = static_cast<int>(p);
        eta.label = std::string(to_string(reward_configs[c].kind));
        const double var_outcome = full_spread(outcome_batches);
        eta.eta_hat = var_outcome > 0.0 ? 1.0 - full_spread(config_batches) / var_outcome : 0.0;
        // Paired resampling: both variances are computed on the shared
        // rollout batches, so resample the same batch indices for both.
        eta.ci95 = percentile_bootstrap(
            config_batches.size(), options.bootstrap_resamples, 0.95,
            probe_stream.substream(kEtaTag).substream(reward_config_key(reward_configs[c])),
            [&](std::span<const std::size_t> idx) {
              const double vo = batch_spread(outcome_batches, idx);
              if (vo <= 0.0) return 0.0;
              return 1.0 - batch_spread(config_batches, idx) / vo;
            });
        sweep.etas.push_back(std::move(eta));
      }
    }
  }
  return sweep;
}

ConvergenceRun convergence_analysis(const SyntheticEnv& env, const RewardConfig& reward,
                                    const OptimizerState& optimizer, const TrainOptions& run,
                                    const ConvergenceOptions& options) {
  reward.validate();
  if (optimizer.schedule != LrSchedule::InvSqrt)
    throw_config_validation("convergence_analysis: requires the inv_sqrt step-size schedule");
  if (options.checkpoints.empty())
    throw_config_validation("convergence_analysis: no checkpoints given");
  long prev = 0;
  for (long T : options.checkpoints) {
    if (T < 1 || T > run.total_steps)
      throw_config_validation("convergence_analysis: checkpoint outside [1, total_steps]");
    if (T <= prev) throw_config_validation("convergence_analysis: checkpoints must increase");
    prev = T;
  }
  if (options.oracle_samples < 2)
    throw_config_validation("convergence_analysis: oracle_samples must be >= 2");

  TrainOptions recorded = run;
  recorded.record_policies = true;
  const TrainHistory history = train(env, reward, optimizer, recorded);

  ConvergenceRun result;
  result.label = std::string(to_string(reward.kind));
  result.seed = run.seed;
  result.base_lr = optimizer.base_lr;
  result.grad_sq.resize(history.policies.size());

  for (std::size_t t = 1; t <= history.policies.size(); ++t) {
    RngStream oracle_stream =
        RngStream::from_key({run.seed, kOracleTag, static_cast<std::uint64_t>(t)});
    const GradientEstimate est =
        true_gradient_estimate(history.policies[t - 1], env, reward, static_cast<int>(t - 1),
                               options.oracle_samples, run.group_size, oracle_stream);
    result.grad_sq[t - 1] = est.debiased_squared_norm();
  }

  // Running means at checkpoints.
  std::vector<double> log_t, log_rm;
  double prefix = 0.0;
  std::size_t ci = 0;
  for (std::size_t t = 1; t <= result.grad_sq.size(); ++t) {
    prefix += result.grad_sq[t - 1];
    if (ci < options.checkpoints.size() &&
        static_cast<long>(t) == options.checkpoints[ci]) {
      ConvergenceCheckpoint cp;
      cp.T = static_cast<long>(t);
      cp.running_mean_grad_sq = prefix / static_cast<double>(t);
      result.checkpoints.push_back(cp);
      log_t.push_back(std::log(static_cast<double>(t)));
      log_rm.push_back(std::log(std::max(cp.running_mean_grad_sq, 1e-300)));
      ++ci;
    }
  }
  result.loglog_slope = least_squares(log_t, log_rm).slope;
  result.final_running_mean = result.checkpoints.back().running_mean_grad_sq;

  // Measured surrogates for the Proposition-2 bound.
  result.g_sq_max = *std::max_element(result.grad_sq.begin(), result.grad_sq.end());
  result.j_theta1 = history.steps.front().mean_shaped_reward;
  result.best_objective = result.j_theta1;
  for (const StepRecord& s : history.steps)
    result.best_objective = std::max(result.best_objective, s.mean_shaped_reward);

  VarianceProbeOptions sigma_options;
  sigma_options.batches = options.sigma_probe_batches;
  sigma_options.groups_per_batch = run.questions_per_step;
  sigma_options.group_size = run.group_size;
  sigma_options.covariance_samples = 0;
  std::vector<long> probe_steps{1};
  for (long T : options.checkpoints)
    if (T != 1) probe_steps.push_back(T);
  result.sigma_g_sq = 0.0;
  for (long t : probe_steps) {
    sigma_options.step = static_cast<int>(t - 1);
    RngStream sigma_stream =
        RngStream::from_key({run.seed, kSigmaTag, static_cast<std::uint64_t>(t)});
    const VarianceEntry probe = gradient_variance(
        history.policies[static_cast<std::size_t>(t - 1)], env, reward, sigma_options, sigma_stream);
    result.sigma_g_sq = std::max(result.sigma_g_sq, probe.var_estimate);
  }

  return result;
}

void apply_bound(ConvergenceRun& run, double j_star) {
  const double alpha = run.base_lr;
  for (ConvergenceCheckpoint& cp : run.checkpoints) {
    if (alpha <= 0.0) {
      cp.bound = std::numeric_limits<double>::infinity();
      cp.bound_ok = true;
      continue;
    }
    cp.bound = (2.0 * (j_star - run.j_theta1) + alpha * alpha * run.g_sq_max +
                alpha * alpha * run.sigma_g_sq) /
               (alpha * std::sqrt(static_cast<double>(cp.T)));
    cp.bound_ok = cp.running_mean_grad_sq <= cp.bound;
  }
}

std::string_view to_string(CollapseKind kind) {
  switch (kind) {
    case CollapseKind::None: return "none";
    case CollapseKind::LengthCollapse: return "length_collapse";
    case CollapseKind::TrainingCollapse: return "training_collapse";
  }
  return "none";
}

namespace {

struct WindowScan {
  std::vector<double> rewards;
  std::vector<double> lengths;
  double initial_mean_length = 0.0;
};

WindowScan prepare_scan(const TrainHistory& history, const CollapseThresholds& thresholds) {
  if (thresholds.window < 2) throw_config_validation("collapse window must be >= 2");
  const std::size_t n = history.steps.size();
  if (n < 2 * static_cast<std::size_t>(thresholds.window))
    throw_invalid_input("collapse detection: history shorter than 2 * window");
  WindowScan scan;
  scan.rewards.resize(n);
  scan.lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    scan.rewards[i] = history.steps[i].mean_shaped_reward;
    scan.lengths[i] = history.steps[i].mean_length_tokens;
  }
  scan.initial_mean_length = mean(
      std::span<const double>(scan.lengths.data(), static_cast<std::size_t>(thresholds.window)));
  return scan;
}

}  // namespace

CollapseVerdict detect_length_collapse(const TrainHistory& history,
                                       const CollapseThresholds& thresholds) {
  const WindowScan scan = prepare_scan(history, thresholds);
  const std::size_t w = static_cast<std::size_t>(thresholds.window);
  const std::size_t n = scan.rewards.size();

  CollapseVerdict verdict;
  for (std::size_t i = 2 * w - 1; i < n; ++i) {
    const std::span<const double> reward_win(scan.rewards.data() + i - w + 1, w);
    const std::span<const double> length_win(scan.lengths.data() + i - w + 1, w);
    const double reward_slope = slope_over_index(reward_win);
    const double length_slope = slope_over_index(length_win);
    const double ratio = mean(length_win) / scan.initial_mean_length;
    verdict.evidence = CollapseEvidence{reward_slope, length_slope, ratio};
    if (reward_slope >= 0.0 && ratio < thresholds.length_ratio && length_slope < 0.0) {
      verdict.kind = CollapseKind::LengthCollapse;
      verdict.onset_step = history.steps[i].step;
      return verdict;
    }
  }
  return verdict;
}

CollapseVerdict detect_training_collapse(const TrainHistory& history,
                                         const CollapseThresholds& thresholds) {
  const WindowScan scan = prepare_scan(history, thresholds);
  const std::size_t w = static_cast<std::size_t>(thresholds.window);
  const std::size_t n = scan.rewards.size();

  CollapseVerdict verdict;
  double peak_reward = scan.rewards[0];
  for (std::size_t i = 1; i < 2 * w - 1 && i < n; ++i)
    peak_reward = std::max(peak_reward, scan.rewards[i]);

  for (std::size_t i = 2 * w - 1; i < n; ++i) {
    peak_reward = std::max(peak_reward, scan.rewards[i]);
    const std::span<const double> reward_win(scan.rewards.data() + i - w + 1, w);
    const std::span<const double> length_win(scan.lengths.data() + i - w + 1, w);
    const double reward_slope = slope_over_index(reward_win);
    const double length_slope = slope_over_index(length_win);
    const double ratio = mean(length_win) / scan.initial_mean_length;
    verdict.evidence = CollapseEvidence{reward_slope, length_slope, ratio};
    if (reward_slope < 0.0 && length_slope < 0.0 &&
        mean(reward_win) < thresholds.reward_peak_fraction * peak_reward) {
      verdict.kind = CollapseKind::TrainingCollapse;
      verdict.onset_step = history.steps[i].step;
      return verdict;
    }
  }
  return verdict;
}

}  // namespace grpolab
