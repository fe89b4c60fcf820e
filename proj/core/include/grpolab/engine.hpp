#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grpolab/env.hpp"
#include "grpolab/matrix.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/rollout.hpp"

namespace grpolab {

/// Group-relative advantages: (R_i - mean) / (population sd + adv_epsilon).
/// All-equal groups yield all zeros (no 0/0 even at adv_epsilon = 0).
std::vector<double> group_advantages(std::span<const double> rewards, double adv_epsilon);

void group_advantages_into(std::vector<double>& out, std::span<const double> rewards,
                           double adv_epsilon);

enum class LrSchedule { InvSqrt, Constant };

struct OptimizerState {
  long step = 0;              // number of sgd_step calls applied so far
  double base_lr = 0.1;       // alpha in alpha_t = alpha / sqrt(t)
  double clip_epsilon = 0.2;  // epsilon in the clipped surrogate
  int inner_epochs = 1;       // mu: surrogate updates per rollout batch
  LrSchedule schedule = LrSchedule::InvSqrt;

  // Learning rate of the next update (t = step + 1, 1-based).
  double next_learning_rate() const;
};

/// Gradient of (1/G) sum_i min(r_i A_i, clip(r_i, 1-eps, 1+eps) A_i) with
/// respect to the policy logits, where r_i = pi(a_i|bucket) / old_prob_i.
/// Only the rollout's bucket row is nonzero.
Matrix surrogate_gradient(const PolicyParams& policy, const GroupRollout& rollout,
                          std::span<const double> advantages, double clip_epsilon);

void surrogate_gradient_into(Matrix& out, std::vector<double>& prob_scratch,
                             const PolicyParams& policy, const GroupRollout& rollout,
                             std::span<const double> advantages, double clip_epsilon);

/// Ascent update theta_{t+1} = theta_t + alpha_t g_t; advances state.step.
PolicyParams sgd_step(const PolicyParams& policy, const Matrix& grad, OptimizerState& state);

struct StepRecord {
  long step = 0;  // 1-based optimizer step
  double mean_shaped_reward = 0.0;
  double mean_outcome_reward = 0.0;
  double mean_length_tokens = 0.0;
  double accuracy_fraction = 0.0;
  double grad_norm = 0.0;
  double grad_sq_running_mean = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  // Pre-update policy at each step (theta_t), recorded when requested.
  std::vector<PolicyParams> policies;
  PolicyParams final_policy;
};

struct TrainOptions {
  long total_steps = 100;
  int questions_per_step = 8;
  int group_size = 8;
  std::uint64_t seed = 1;
  bool record_policies = false;
};

/// The GRPO training loop: snapshot the policy, sample question groups from
/// the snapshot, shape rewards (annealing sees the 0-based step), normalize
/// advantages per group, then run inner_epochs clipped-surrogate ascent
/// updates against the fixed snapshot. Deterministic for a given seed: each
/// group's stream is keyed by (seed, step, question index, env salt).
TrainHistory train(const SyntheticEnv& env, const RewardConfig& reward,
                   const OptimizerState& optimizer, const TrainOptions& options);

struct GradientEstimate {
  Matrix mean;
  Matrix std_error;  // per-coordinate standard error of the mean
  long n_groups = 0;

  double squared_norm() const { return mean.squared_norm(); }
  // ||mean||^2 minus the summed sampling variance: an (approximately)
  // unbiased estimate of the true squared gradient norm, clamped at 0.
  double debiased_squared_norm() const;
};

/// Large-sample Monte-Carlo oracle for grad J(theta) at pi = pi_old:
/// averages single-group surrogate gradients over n_samples fresh groups
/// of size group_size.
GradientEstimate true_gradient_estimate(const PolicyParams& policy, const SyntheticEnv& env,
                                        const RewardConfig& reward, int step, long n_samples,
                                        int group_size, RngStream stream);

}  // namespace grpolab
