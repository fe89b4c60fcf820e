#include "grpolab/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grpolab/errors.hpp"

namespace grpolab {

int EnvConfig::bucket_of(double difficulty) const {
  const int b = static_cast<int>((difficulty - kDifficultyMin) / bucket_width());
  return std::clamp(b, 0, num_buckets - 1);
}

void EnvConfig::validate() const {
  if (num_buckets < 1) throw_config_validation("env.num_buckets must be >= 1");
  if (templates_per_bucket < 3) throw_config_validation("env.templates_per_bucket must be >= 3");
  if (!(base_length > 0.0)) throw_config_validation("env.base_length must be positive");
  if (!(difficulty_length_slope >= 0.0))
    throw_config_validation("env.difficulty_length_slope must be nonnegative");
  if (!(correlation_knob >= -1.0 && correlation_knob <= 1.0))
    throw_config_validation("env.correlation_knob must be in [-1, 1]");
  if (!(correlation_strength >= 0.0 && correlation_strength <= 1.0))
    throw_config_validation("env.correlation_strength must be in [0, 1]");
  if (!(length_noise_sd >= 0.0)) throw_config_validation("env.length_noise_sd must be nonnegative");
  if (!(template_ratio_min > 0.0)) throw_config_validation("env.template_ratio_min must be positive");
  if (!(template_ratio_max > template_ratio_min))
    throw_config_validation("env.template_ratio_max must exceed template_ratio_min");
  if (!(accuracy_easy >= 0.0 && accuracy_easy <= 1.0))
    throw_config_validation("env.accuracy_easy must be in [0, 1]");
  if (!(accuracy_hard >= 0.0 && accuracy_hard <= 1.0))
    throw_config_validation("env.accuracy_hard must be in [0, 1]");
  if (!(accuracy_ramp >= 0.0 && accuracy_ramp < 1.0))
    throw_config_validation("env.accuracy_ramp must be in [0, 1)");
  if (length_cap < 0) throw_config_validation("env.length_cap must be nonnegative");
  if (!(rubric.unit_penalty >= 0.0)) throw_config_validation("env.rubric.unit_penalty must be nonnegative");
  if (!(rubric.grace >= 0.0)) throw_config_validation("env.rubric.grace must be nonnegative");
  if (!(rubric.band > 0.0)) throw_config_validation("env.rubric.band must be positive");
}

ConcisenessScore score_conciseness(const ConcisenessFeatures& features,
                                   const RubricParams& rubric) {
  if (features.length_tokens < 1)
    throw_invalid_input("conciseness features: length must be positive");
  if (!(features.optimal_length > 0.0))
    throw_invalid_input("conciseness features: optimal_length must be positive");
  if (features.repetition_units < 0 || features.irrelevant_steps < 0)
    throw_invalid_input("conciseness features: counts must be nonnegative");

  const double ratio =
      static_cast<double>(features.length_tokens) / features.optimal_length;
  const double excess = std::max(0.0, ratio - (1.0 + rubric.grace));
  const double bands = std::floor(excess / rubric.band);
  const double raw = 1.0 - rubric.unit_penalty * features.repetition_units -
                     rubric.unit_penalty * features.irrelevant_steps -
                     rubric.unit_penalty * bands;
  return make_conciseness_score(raw);
}

SyntheticEnv::SyntheticEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  build_templates();
}

double SyntheticEnv::optimal_length(double difficulty) const {
  if (difficulty < EnvConfig::kDifficultyMin || difficulty > EnvConfig::kDifficultyMax)
    throw_invalid_input("optimal_length: difficulty outside [3, 9]");
  return config_.base_length *
         (1.0 + config_.difficulty_length_slope * (difficulty - EnvConfig::kDifficultyAnchor));
}

void SyntheticEnv::build_templates() {
  const int K = config_.templates_per_bucket;
  const double rho = config_.correlation_knob;
  const double kappa = config_.correlation_strength;

  templates_.assign(config_.num_buckets, {});
  plateau_.assign(config_.num_buckets, 0);

  for (int b = 0; b < config_.num_buckets; ++b) {
    const double center = EnvConfig::kDifficultyMin + (b + 0.5) * config_.bucket_width();
    const double l_star = optimal_length(center);
    const double difficulty_frac =
        (center - EnvConfig::kDifficultyMin) / (EnvConfig::kDifficultyMax - EnvConfig::kDifficultyMin);
    const double p_bucket =
        config_.accuracy_easy + (config_.accuracy_hard - config_.accuracy_easy) * difficulty_frac;

    std::vector<ResponseTemplate>& bucket = templates_[b];
    bucket.reserve(config_.templates_total());

    // Geometric length ladder between ratio_min * L* and ratio_max * L*.
    const double log_step =
        std::log(config_.template_ratio_max / config_.template_ratio_min) / (K - 1);
    int plateau = 0;
    double best_dist = std::numeric_limits<double>::max();
    std::vector<int> lengths(K);
    int prev = 0;
    for (int j = 0; j < K; ++j) {
      const double ratio = config_.template_ratio_min * std::exp(log_step * j);
      int len = std::max<int>(1, static_cast<int>(std::llround(ratio * l_star)));
      if (len <= prev) len = prev + 1;  // keep lengths strictly increasing
      lengths[j] = len;
      prev = len;
      const double dist = std::abs(len - l_star);
      if (dist < best_dist) {
        best_dist = dist;
        plateau = j;
      }
    }

    if (config_.short_wrong_template) {
      if (EnvConfig::kShortTemplateLength >= lengths[0])
        throw_config_validation(
            "env.short_wrong_template requires the shortest proper template to exceed 5 tokens");
      bucket.push_back(ResponseTemplate{0, EnvConfig::kShortTemplateLength, 0.0, 0.0, 0, 0, true});
      plateau += 1;
    }

    const int offset = static_cast<int>(bucket.size());
    for (int j = 0; j < K; ++j) {
      ResponseTemplate t;
      t.index = offset + j;
      t.length_tokens = lengths[j];
      // Accuracy ramps (optionally) up to the plateau template, flat after:
      // length beyond the plateau buys no accuracy.
      double base = p_bucket;
      if (j < plateau - offset && plateau - offset > 0) {
        const int gap = (plateau - offset) - j;
        base *= 1.0 - config_.accuracy_ramp * static_cast<double>(gap) / (plateau - offset);
      }
      t.base_p_correct = base;
      t.concise = t.index <= plateau;
      const double adjust = t.concise ? 1.0 + rho * kappa : 1.0 - rho * kappa;
      t.p_correct = std::clamp(base * adjust, 0.0, 1.0);
      // Verbosity features grow past the plateau.
      const int over = std::max(0, t.index - plateau);
      t.repetition_units = over;
      t.irrelevant_steps = over / 2;
      bucket.push_back(t);
    }
    plateau_[b] = plateau;
  }
}

std::span<const ResponseTemplate> SyntheticEnv::bucket_templates(int bucket) const {
  if (bucket < 0 || bucket >= config_.num_buckets)
    throw_invalid_input("bucket index out of range");
  return templates_[bucket];
}

Question SyntheticEnv::sample_question(RngStream& stream, std::uint64_t id) const {
  const double difficulty =
      EnvConfig::kDifficultyMin +
      (EnvConfig::kDifficultyMax - EnvConfig::kDifficultyMin) * stream.next_unit();
  return Question{id, difficulty, config_.bucket_of(difficulty)};
}

GroupRollout SyntheticEnv::rollout_group(const PolicyParams& policy, const Question& question,
                                         int group_size, RngStream& stream) const {
  if (group_size < 2) throw_invalid_input("rollout_group: group size must be >= 2");
  GroupRollout out;
  std::vector<double> probs;
  rollout_group_into(out, probs, policy, question, group_size, stream);
  return out;
}

void SyntheticEnv::rollout_group_into(GroupRollout& out, std::vector<double>& prob_scratch,
                                      const PolicyParams& policy, const Question& question,
                                      int group_size, RngStream& stream) const {
  if (policy.num_buckets() != config_.num_buckets ||
      policy.num_templates() != config_.templates_total())
    throw_invalid_input("rollout_group: policy shape does not match environment");
  prob_scratch.resize(static_cast<std::size_t>(policy.num_templates()));
  softmax_into(policy.logits.row(question.bucket), prob_scratch);
  rollout_group_with_probs(out, prob_scratch, question, group_size, stream);
}

void SyntheticEnv::rollout_group_with_probs(GroupRollout& out, std::span<const double> probs,
                                            const Question& question, int group_size,
                                            RngStream& stream) const {
  if (question.bucket < 0 || question.bucket >= config_.num_buckets)
    throw Error(Error::Category::Internal, "rollout_group: bucket out of range");
  if (group_size < 1) throw_invalid_input("rollout_group: group size must be positive");

  const auto& bucket = templates_[question.bucket];
  const double l_star = optimal_length(question.difficulty);

  out.question_id = question.id;
  out.bucket = question.bucket;
  out.samples.resize(static_cast<std::size_t>(group_size));

  for (int g = 0; g < group_size; ++g) {
    const int j = sample_categorical(probs, stream);
    const ResponseTemplate& tpl = bucket[static_cast<std::size_t>(j)];
    const bool correct = stream.next_unit() < tpl.p_correct;
    const double noise = stream.next_gaussian() * config_.length_noise_sd;
    long long len = std::llround(tpl.length_tokens + noise);
    if (len < 1) len = 1;
    if (config_.length_cap > 0 && len > config_.length_cap) len = config_.length_cap;

    SampleRecord& rec = out.samples[static_cast<std::size_t>(g)];
    rec.template_index = j;
    rec.old_prob = probs[static_cast<std::size_t>(j)];
    rec.correct = correct;
    rec.length_tokens = static_cast<int>(len);
    rec.features = ConcisenessFeatures{tpl.repetition_units, tpl.irrelevant_steps,
                                       rec.length_tokens, l_star};
    rec.score = score_conciseness(rec.features, config_.rubric);
  }
}

SyntheticEnv::CovarianceEstimate SyntheticEnv::covariance(const PolicyParams& policy,
                                                          long n_samples,
                                                          RngStream stream) const {
  if (n_samples < 2) throw_invalid_input("covariance: need at least 2 samples");

  // Cache softmax rows; the policy is fixed during probing.
  std::vector<std::vector<double>> probs(static_cast<std::size_t>(config_.num_buckets));
  for (int b = 0; b < config_.num_buckets; ++b)
    probs[static_cast<std::size_t>(b)] = softmax(policy.logits.row(b));

  std::vector<double> outcomes(static_cast<std::size_t>(n_samples));
  std::vector<double> scores(static_cast<std::size_t>(n_samples));
  GroupRollout scratch;
  for (long i = 0; i < n_samples; ++i) {
    RngStream s = stream.substream(static_cast<std::uint64_t>(i));
    const Question q = sample_question(s, static_cast<std::uint64_t>(i));
    rollout_group_with_probs(scratch, probs[static_cast<std::size_t>(q.bucket)], q, 1, s);
    outcomes[static_cast<std::size_t>(i)] = scratch.samples[0].correct ? 1.0 : 0.0;
    scores[static_cast<std::size_t>(i)] = scratch.samples[0].score.value;
  }

  double mean_x = 0.0, mean_y = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    mean_x += outcomes[static_cast<std::size_t>(i)];
    mean_y += scores[static_cast<std::size_t>(i)];
  }
  mean_x /= static_cast<double>(n_samples);
  mean_y /= static_cast<double>(n_samples);

  // cov = mean of centered products; SE from the product sample variance.
  double sum_p = 0.0, sum_p2 = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const double p = (outcomes[static_cast<std::size_t>(i)] - mean_x) *
                     (scores[static_cast<std::size_t>(i)] - mean_y);
    sum_p += p;
    sum_p2 += p * p;
  }
  const double n = static_cast<double>(n_samples);
  const double cov = sum_p / n;
  const double var_p = std::max(0.0, (sum_p2 - sum_p * sum_p / n) / (n - 1.0));
  return CovarianceEstimate{cov, std::sqrt(var_p / n), n_samples};
}

}  // namespace grpolab
