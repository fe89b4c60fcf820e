#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grpolab/policy.hpp"
#include "grpolab/rng.hpp"
#include "grpolab/rollout.hpp"

namespace grpolab {

// Rubric coefficients for the deterministic conciseness scorer.
struct RubricParams {
  double unit_penalty = 0.1;  // cost per repetition unit / irrelevant step / excess band
  double grace = 0.05;        // fractional length overshoot that costs nothing
  double band = 0.25;         // each further 25% of excess length costs one band
};

struct EnvConfig {
  int num_buckets = 6;
  int templates_per_bucket = 8;   // K
  double base_length = 100.0;     // L0, tokens at the difficulty anchor
  double difficulty_length_slope = 0.06;  // default calibrated to the 15% / 2.5 datum
  double correlation_knob = 0.0;  // rho in [-1, 1]
  double correlation_strength = 0.3;  // kappa
  double length_noise_sd = 4.0;   // tokens
  bool short_wrong_template = false;  // prepend a 5-token always-wrong template
  std::int64_t seed_salt = 0;

  // Template geometry and accuracy profile (invented defaults, overridable).
  double template_ratio_min = 0.25;
  double template_ratio_max = 4.0;
  double accuracy_easy = 0.8;   // base p_correct at difficulty 3
  double accuracy_hard = 0.2;   // base p_correct at difficulty 9
  double accuracy_ramp = 0.0;   // sub-plateau accuracy reduction, 0 = flat
  int length_cap = 0;           // >0: truncate realized lengths (cosine's L_max)
  RubricParams rubric;

  static constexpr double kDifficultyMin = 3.0;
  static constexpr double kDifficultyMax = 9.0;
  static constexpr double kDifficultyAnchor = 4.25;  // where optimal length equals L0
  static constexpr int kShortTemplateLength = 5;

  double bucket_width() const {
    return (kDifficultyMax - kDifficultyMin) / num_buckets;
  }
  int bucket_of(double difficulty) const;
  int templates_total() const {
    return templates_per_bucket + (short_wrong_template ? 1 : 0);
  }

  void validate() const;
};

struct Question {
  std::uint64_t id = 0;
  double difficulty = kAnchorDefault;
  int bucket = 0;

  static constexpr double kAnchorDefault = 4.25;
};

struct ResponseTemplate {
  int index = 0;
  int length_tokens = 1;
  double p_correct = 0.0;       // effective accuracy (after the rho adjustment)
  double base_p_correct = 0.0;  // pre-adjustment accuracy profile
  int repetition_units = 0;
  int irrelevant_steps = 0;
  bool concise = false;  // at or below the plateau template
};

/// Deterministic rubric standing in for the conciseness reward model:
/// start at 1.0, subtract unit_penalty per repetition unit, per irrelevant
/// step, and per excess-length band beyond the grace; clamp to [0.1, 1.0]
/// and snap to the 0.1 grid.
ConcisenessScore score_conciseness(const ConcisenessFeatures& features,
                                   const RubricParams& rubric = {});

// Controllable math-task world: difficulty-bucketed questions, response
// templates trading length against accuracy, and a correlation knob that
// sets the sign of Cov(outcome, conciseness).
class SyntheticEnv {
public:
  explicit SyntheticEnv(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  int num_buckets() const { return config_.num_buckets; }
  int num_templates() const { return config_.templates_total(); }
  std::span<const ResponseTemplate> bucket_templates(int bucket) const;
  int plateau_index(int bucket) const { return plateau_[bucket]; }

  /// L*(d) = L0 * (1 + slope * (d - 4.25)); strictly increasing in d.
  double optimal_length(double difficulty) const;

  /// Difficulty uniform on [3, 9]; bucket derived; id as given.
  Question sample_question(RngStream& stream, std::uint64_t id = 0) const;

  /// Sample G responses from softmax(policy.logits[bucket]) and score them.
  GroupRollout rollout_group(const PolicyParams& policy, const Question& question,
                             int group_size, RngStream& stream) const;

  /// Allocation-free variant for hot loops; reuses `out` and `prob_scratch`.
  void rollout_group_into(GroupRollout& out, std::vector<double>& prob_scratch,
                          const PolicyParams& policy, const Question& question, int group_size,
                          RngStream& stream) const;

  /// Same, but with row softmax probabilities already computed by the caller.
  void rollout_group_with_probs(GroupRollout& out, std::span<const double> probs,
                                const Question& question, int group_size,
                                RngStream& stream) const;

  ConcisenessScore conciseness_score(const ConcisenessFeatures& features) const {
    return score_conciseness(features, config_.rubric);
  }

  struct CovarianceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
  };

  /// Monte-Carlo estimate of Cov(outcome, conciseness score) under `policy`.
  CovarianceEstimate covariance(const PolicyParams& policy, long n_samples,
                                RngStream stream) const;

  PolicyParams uniform_policy() const {
    return PolicyParams::uniform(num_buckets(), num_templates());
  }

private:
  EnvConfig config_;
  std::vector<std::vector<ResponseTemplate>> templates_;  // per bucket, sorted by length
  std::vector<int> plateau_;                              // plateau template index per bucket

  void build_templates();
};

}  // namespace grpolab
