#include "grpolab/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grpolab {

namespace {

constexpr double kEulerE = std::numbers::e;

// Shared CRF-family kernel, unvalidated: callers own the coefficient ranges.
// The ablations deliberately feed s = 0 or d = 0 here.
double crf_term(double score, double alpha, double s, double d) {
  return alpha * score * (s + d);
}

void check_crf_args(const ConcisenessScore& score, double alpha, double s, double d) {
  if (!(score.value >= 0.1 - 1e-12 && score.value <= 1.0 + 1e-12))
    throw_invalid_input("conciseness score outside [0.1, 1.0]");
  if (!(alpha >= 0.0)) throw_invalid_input("alpha must be nonnegative");
  if (!(s > 0.0 && s <= 1.0)) throw_invalid_input("annealing coefficient outside (0, 1]");
  if (!(d >= 1.0 && d <= kEulerE + 1e-12))
    throw_invalid_input("difficulty coefficient outside [1, e]");
}

}  // namespace

OutcomeReward outcome_reward(bool is_correct) {
  return OutcomeReward{is_correct ? 1.0 : 0.0};
}

ConcisenessScore make_conciseness_score(double raw) {
  if (!std::isfinite(raw)) throw_invalid_input("conciseness score must be finite");
  // Round half up onto the 0.1 grid, then clamp to [0.1, 1.0].
  double snapped = std::floor(raw * 10.0 + 0.5) / 10.0;
  snapped = std::clamp(snapped, 0.1, 1.0);
  return ConcisenessScore{snapped};
}

std::string_view to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::Outcome: return "outcome";
    case RewardKind::Crf: return "crf";
    case RewardKind::WeightedSum: return "weighted_sum";
    case RewardKind::Cosine: return "cosine";
    case RewardKind::Kimi: return "kimi";
    case RewardKind::CrfNoAnneal: return "crf_no_anneal";
    case RewardKind::CrfNoDifficulty: return "crf_no_difficulty";
    case RewardKind::CrfNoAnnealNoDifficulty: return "crf_no_anneal_no_difficulty";
  }
  return "outcome";
}

RewardKind reward_kind_from_string(std::string_view name) {
  if (name == "outcome") return RewardKind::Outcome;
  if (name == "crf") return RewardKind::Crf;
  if (name == "weighted_sum") return RewardKind::WeightedSum;
  if (name == "cosine") return RewardKind::Cosine;
  if (name == "kimi") return RewardKind::Kimi;
  if (name == "crf_no_anneal") return RewardKind::CrfNoAnneal;
  if (name == "crf_no_difficulty") return RewardKind::CrfNoDifficulty;
  if (name == "crf_no_anneal_no_difficulty") return RewardKind::CrfNoAnnealNoDifficulty;
  throw_invalid_input("unknown reward kind '" + std::string(name) + "'");
}

void RewardConfig::validate() const {
  if (!(alpha >= 0.0)) throw_config_validation("reward.alpha must be nonnegative");
  if (total_steps < 1) throw_config_validation("reward.total_steps must be >= 1");
  if (cosine.l_max < 1) throw_config_validation("reward.cosine.l_max must be >= 1");
  if (!(adv_epsilon >= 0.0)) throw_config_validation("reward.adv_epsilon must be nonnegative");
}

double annealing_coeff(int step, int total_steps) {
  if (total_steps < 1) throw_config_validation("annealing total_steps must be >= 1");
  if (step < 0) throw_invalid_input("annealing step must be nonnegative");
  return std::exp(-static_cast<double>(step) / static_cast<double>(total_steps));
}

double difficulty_coeff(std::span<const OutcomeReward> group_outcomes) {
  if (group_outcomes.empty()) throw_invalid_input("difficulty_coeff: empty group");
  int correct = 0;
  for (const auto& o : group_outcomes) {
    if (o.value == 1.0) ++correct;
  }
  return std::exp(static_cast<double>(correct) / static_cast<double>(group_outcomes.size()));
}

ShapedReward crf_reward(OutcomeReward outcome, ConcisenessScore score, double alpha, double s,
                        double d) {
  check_crf_args(score, alpha, s, d);
  return ShapedReward{outcome.value * (1.0 + crf_term(score.value, alpha, s, d))};
}

ShapedReward weighted_sum_reward(OutcomeReward outcome, ConcisenessScore score, double alpha,
                                 double s, double d) {
  check_crf_args(score, alpha, s, d);
  return ShapedReward{outcome.value + crf_term(score.value, alpha, s, d)};
}

double cos_fn(double t, double T, double eta_min, double eta_max) {
  if (!(T > 0.0)) throw_invalid_input("cos_fn: T must be positive");
  if (t < 0.0 || t > T) throw_invalid_input("cos_fn: t outside [0, T]");
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(t * std::numbers::pi / T));
}

ShapedReward cosine_reward(OutcomeReward outcome, int length_tokens, const RewardConfig& config,
                           double alpha) {
  const CosineParams& p = config.cosine;
  if (length_tokens < 1) throw_invalid_input("cosine_reward: length must be positive");
  if (length_tokens > p.l_max)
    throw_invalid_input("cosine_reward: length exceeds l_max (sampler must truncate)");
  double f;
  if (length_tokens == p.l_max) {
    f = p.r_exceed;  // the cap case is terminal in the piecewise listing
  } else if (outcome.value == 1.0) {
    f = cos_fn(length_tokens, p.l_max, p.rl_correct, p.r0_correct);
  } else {
    f = cos_fn(length_tokens, p.l_max, p.rl_wrong, p.r0_wrong);
  }
  return ShapedReward{outcome.value + alpha * f};
}

std::vector<ShapedReward> kimi_rewards(std::span<const OutcomeReward> group_outcomes,
                                       std::span<const int> group_lengths, double alpha) {
  if (group_outcomes.size() != group_lengths.size())
    throw_invalid_input("kimi_rewards: outcome/length list size mismatch");
  if (group_outcomes.empty()) throw_invalid_input("kimi_rewards: empty group");
  int min_len = group_lengths[0];
  int max_len = group_lengths[0];
  for (int len : group_lengths) {
    if (len < 1) throw_invalid_input("kimi_rewards: lengths must be positive");
    min_len = std::min(min_len, len);
    max_len = std::max(max_len, len);
  }
  const double span = static_cast<double>(max_len - min_len);
  std::vector<ShapedReward> out(group_outcomes.size());
  for (std::size_t i = 0; i < group_outcomes.size(); ++i) {
    // No length signal when the whole group has one length: lambda = 0.
    const double lambda =
        span == 0.0 ? 0.0 : 0.5 - static_cast<double>(group_lengths[i] - min_len) / span;
    const double f = group_outcomes[i].value == 1.0 ? lambda : std::min(0.0, lambda);
    out[i] = ShapedReward{group_outcomes[i].value + alpha * f};
  }
  return out;
}

std::vector<ShapedReward> shape_group(std::span<const OutcomeReward> outcomes,
                                      std::span<const ConcisenessScore> scores,
                                      std::span<const int> lengths, const RewardConfig& config,
                                      int step) {
  const std::size_t n = outcomes.size();
  if (scores.size() != n || lengths.size() != n)
    throw_invalid_input("shape_group: list size mismatch");
  if (n == 0) throw_invalid_input("shape_group: empty group");

  std::vector<ShapedReward> out(n);
  switch (config.kind) {
    case RewardKind::Outcome:
      for (std::size_t i = 0; i < n; ++i) out[i] = ShapedReward{outcomes[i].value};
      return out;
    case RewardKind::Cosine:
      for (std::size_t i = 0; i < n; ++i)
        out[i] = cosine_reward(outcomes[i], lengths[i], config, config.alpha);
      return out;
    case RewardKind::Kimi:
      return kimi_rewards(outcomes, lengths, config.alpha);
    default:
      break;
  }

  // CRF family. The ablations drop coefficients rather than re-validating
  // them, so this path uses the kernel directly.
  const double s = annealing_coeff(step, config.total_steps);
  const double d = difficulty_coeff(outcomes);
  for (std::size_t i = 0; i < n; ++i) {
    double term;
    switch (config.kind) {
      case RewardKind::Crf:
        term = crf_term(scores[i].value, config.alpha, s, d);
        break;
      case RewardKind::WeightedSum:
        out[i] = ShapedReward{outcomes[i].value +
                              crf_term(scores[i].value, config.alpha, s, d)};
        continue;
      case RewardKind::CrfNoAnneal:
        term = crf_term(scores[i].value, config.alpha, 0.0, d);
        break;
      case RewardKind::CrfNoDifficulty:
        term = crf_term(scores[i].value, config.alpha, s, 0.0);
        break;
      case RewardKind::CrfNoAnnealNoDifficulty:
        term = config.alpha * scores[i].value;  // 1 + alpha c, gate retained
        break;
      default:
        throw_invalid_input("shape_group: unhandled reward kind");
    }
    out[i] = ShapedReward{outcomes[i].value * (1.0 + term)};
  }
  return out;
}

}  // namespace grpolab
