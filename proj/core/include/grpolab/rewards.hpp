#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "grpolab/errors.hpp"

namespace grpolab {

/// Binary verifiable reward: exactly 0.0 or 1.0.
struct OutcomeReward {
  double value = 0.0;
};

OutcomeReward outcome_reward(bool is_correct);

/// Conciseness score on the 0.1 grid in [0.1, 1.0].
struct ConcisenessScore {
  double value = 0.1;
};

/// Snap a raw score to the 0.1 grid (round half up) and clamp to [0.1, 1.0].
ConcisenessScore make_conciseness_score(double raw);

struct ShapedReward {
  double value = 0.0;
};

enum class RewardKind {
  Outcome,
  Crf,
  WeightedSum,
  Cosine,
  Kimi,
  CrfNoAnneal,
  CrfNoDifficulty,
  CrfNoAnnealNoDifficulty,
};

std::string_view to_string(RewardKind kind);
RewardKind reward_kind_from_string(std::string_view name);

struct CosineParams {
  int l_max = 512;
  double r0_correct = 2.0;
  double rl_correct = 1.0;
  double r0_wrong = -10.0;
  double rl_wrong = 0.0;
  double r_exceed = -10.0;
};

struct RewardConfig {
  RewardKind kind = RewardKind::Crf;
  double alpha = 1.0;      // conciseness / length-penalty weight
  int total_steps = 1;     // T in the annealing coefficient
  CosineParams cosine;
  double adv_epsilon = 1e-6;  // epsilon' in the advantage denominator

  void validate() const;
};

/// Annealing coefficient s = exp(-step / total_steps); range (0, 1].
double annealing_coeff(int step, int total_steps);

/// Difficulty coefficient d = exp(n_correct / G); range [1, e].
double difficulty_coeff(std::span<const OutcomeReward> group_outcomes);

/// Conciseness reward function: R = outcome * (1 + alpha * c * (s + d)).
/// The conciseness bonus is gated on correctness: outcome 0 forces 0.
ShapedReward crf_reward(OutcomeReward outcome, ConcisenessScore score, double alpha,
                        double s, double d);

/// Ungated ablation of the CRF: R = outcome + alpha * c * (s + d).
ShapedReward weighted_sum_reward(OutcomeReward outcome, ConcisenessScore score, double alpha,
                                 double s, double d);

/// CosFn(t, T, eta_min, eta_max) = eta_min + 0.5 (eta_max - eta_min)(1 + cos(t pi / T)).
/// Runs from eta_max at t=0 down to eta_min at t=T.
double cos_fn(double t, double T, double eta_min, double eta_max);

/// Cosine scale reward: R = outcome + alpha * f(outcome, length), where f
/// follows the correct/wrong cosine schedules and f = r_exceed at the cap.
ShapedReward cosine_reward(OutcomeReward outcome, int length_tokens, const RewardConfig& config,
                           double alpha);

/// Kimi 1.5 length reward over one group:
///   lambda_i = 0.5 - (L_i - min L) / (max L - min L), lambda := 0 when max = min;
///   R_i = outcome_i + alpha * (correct ? lambda_i : min(0, lambda_i)).
std::vector<ShapedReward> kimi_rewards(std::span<const OutcomeReward> group_outcomes,
                                       std::span<const int> group_lengths, double alpha);

/// Dispatch one group's rewards through the configured shaping. `step` is the
/// 0-based training step used by the annealing coefficient.
std::vector<ShapedReward> shape_group(std::span<const OutcomeReward> outcomes,
                                      std::span<const ConcisenessScore> scores,
                                      std::span<const int> lengths, const RewardConfig& config,
                                      int step);

}  // namespace grpolab
