#include "grpolab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grpolab/errors.hpp"

namespace grpolab {

void group_advantages_into(std::vector<double>& out, std::span<const double> rewards,
                           double adv_epsilon) {
  const std::size_t n = rewards.size();
  if (n < 2) throw_invalid_input("group_advantages: need G >= 2");
  if (!(adv_epsilon >= 0.0)) throw_invalid_input("group_advantages: adv_epsilon must be >= 0");

  out.assign(n, 0.0);
  bool all_equal = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (rewards[i] != rewards[0]) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) return;  // exact zeros, no 0/0 even at adv_epsilon = 0

  double mu = 0.0;
  for (double r : rewards) mu += r;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mu) * (r - mu);
  var /= static_cast<double>(n);  // population standard deviation
  const double denom = std::sqrt(var) + adv_epsilon;
  for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mu) / denom;
}

std::vector<double> group_advantages(std::span<const double> rewards, double adv_epsilon) {
  std::vector<double> out;
  group_advantages_into(out, rewards, adv_epsilon);
  return out;
}

double OptimizerState::next_learning_rate() const {
  if (schedule == LrSchedule::Constant) return base_lr;
  return base_lr / std::sqrt(static_cast<double>(step + 1));
}

namespace {

// Gradient accumulation with the bucket softmax already computed. Assumes out
// is zeroed. d r_i / d theta_k = r_i (delta_{k,a_i} - pi_k).
void accumulate_gradient(Matrix& out, std::span<const double> probs, const GroupRollout& rollout,
                         std::span<const double> advantages, double clip_epsilon) {
  const int G = rollout.group_size();
  if (static_cast<std::size_t>(G) != advantages.size())
    throw_invalid_input("surrogate_gradient: rollout/advantage size mismatch");
  if (G == 0) throw_invalid_input("surrogate_gradient: empty rollout");
  if (!(clip_epsilon >= 0.0)) throw_invalid_input("surrogate_gradient: clip_epsilon must be >= 0");

  auto row = out.row(rollout.bucket);
  const double inv_g = 1.0 / static_cast<double>(G);
  const int K = static_cast<int>(probs.size());

  for (int i = 0; i < G; ++i) {
    const SampleRecord& s = rollout.samples[static_cast<std::size_t>(i)];
    const double advantage = advantages[static_cast<std::size_t>(i)];
    if (!std::isfinite(advantage)) throw_numeric("surrogate_gradient: non-finite advantage");
    if (!(s.old_prob > 0.0)) throw_invalid_input("surrogate_gradient: old_prob must be positive");
    if (s.template_index < 0 || s.template_index >= K)
      throw_invalid_input("surrogate_gradient: template index out of range");

    const double ratio = probs[static_cast<std::size_t>(s.template_index)] / s.old_prob;
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    // min(r A, clip(r) A): the clipped branch is constant in theta when the
    // clamp is active, so that sample contributes nothing.
    const double coeff =
        ratio * advantage <= clipped_ratio * advantage ? advantage * ratio * inv_g : 0.0;
    if (coeff == 0.0) continue;
    for (int k = 0; k < K; ++k) {
      const double indicator = k == s.template_index ? 1.0 : 0.0;
      row[static_cast<std::size_t>(k)] += coeff * (indicator - probs[static_cast<std::size_t>(k)]);
    }
  }
}

}  // namespace

void surrogate_gradient_into(Matrix& out, std::vector<double>& prob_scratch,
                             const PolicyParams& policy, const GroupRollout& rollout,
                             std::span<const double> advantages, double clip_epsilon) {
  if (rollout.bucket < 0 || rollout.bucket >= policy.num_buckets())
    throw_invalid_input("surrogate_gradient: bucket out of range");
  if (out.rows != policy.num_buckets() || out.cols != policy.num_templates())
    out = Matrix(policy.num_buckets(), policy.num_templates());
  else
    out.zero();
  prob_scratch.resize(static_cast<std::size_t>(policy.num_templates()));
  softmax_into(policy.logits.row(rollout.bucket), prob_scratch);
  accumulate_gradient(out, prob_scratch, rollout, advantages, clip_epsilon);
}

Matrix surrogate_gradient(const PolicyParams& policy, const GroupRollout& rollout,
                          std::span<const double> advantages, double clip_epsilon) {
  Matrix out;
  std::vector<double> probs;
  surrogate_gradient_into(out, probs, policy, rollout, advantages, clip_epsilon);
  return out;
}

PolicyParams sgd_step(const PolicyParams& policy, const Matrix& grad, OptimizerState& state) {
  if (!grad.same_shape(policy.logits)) throw_invalid_input("sgd_step: gradient shape mismatch");
  if (!grad.all_finite()) {
    std::ostringstream msg;
    msg << "sgd_step: non-finite gradient at";
    int reported = 0;
    for (int r = 0; r < grad.rows && reported < 4; ++r) {
      for (int c = 0; c < grad.cols && reported < 4; ++c) {
        if (!std::isfinite(grad.at(r, c))) {
          msg << " (" << r << "," << c << ")";
          ++reported;
        }
      }
    }
    throw_numeric(msg.str());
  }
  PolicyParams next = policy;
  next.logits.add_scaled(grad, state.next_learning_rate());
  state.step += 1;
  return next;
}

namespace {

struct GroupBuffers {
  std::vector<OutcomeReward> outcomes;
  std::vector<ConcisenessScore> scores;
  std::vector<int> lengths;

  void fill(const GroupRollout& rollout) {
    const std::size_t n = rollout.samples.size();
    outcomes.resize(n);
    scores.resize(n);
    lengths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      outcomes[i] = outcome_reward(rollout.samples[i].correct);
      scores[i] = rollout.samples[i].score;
      lengths[i] = rollout.samples[i].length_tokens;
    }
  }
};

// Softmax rows of a fixed policy, computed once per snapshot.
std::vector<std::vector<double>> softmax_rows(const PolicyParams& policy) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(policy.num_buckets()));
  for (int b = 0; b < policy.num_buckets(); ++b)
    rows[static_cast<std::size_t>(b)] = softmax(policy.logits.row(b));
  return rows;
}

}  // namespace

TrainHistory train(const SyntheticEnv& env, const RewardConfig& reward,
                   const OptimizerState& optimizer, const TrainOptions& options) {
  reward.validate();
  if (options.total_steps < 1) throw_config_validation("train: total_steps must be >= 1");
  if (options.questions_per_step < 1)
    throw_config_validation("train: questions_per_step must be >= 1");
  if (options.group_size < 2) throw_config_validation("train: group_size must be >= 2");
  if (optimizer.inner_epochs < 1) throw_config_validation("train: inner_epochs must be >= 1");
  if (!(optimizer.base_lr >= 0.0)) throw_config_validation("train: base_lr must be nonnegative");

  const int qps = options.questions_per_step;
  const std::uint64_t salt = static_cast<std::uint64_t>(env.config().seed_salt);

  PolicyParams theta = env.uniform_policy();
  OptimizerState opt = optimizer;
  opt.step = 0;

  TrainHistory history;
  history.steps.reserve(static_cast<std::size_t>(options.total_steps));
  if (options.record_policies)
    history.policies.reserve(static_cast<std::size_t>(options.total_steps));

  std::vector<GroupRollout> groups(static_cast<std::size_t>(qps));
  std::vector<std::vector<double>> advantages(static_cast<std::size_t>(qps));
  GroupBuffers buffers;
  Matrix grad(theta.num_buckets(), theta.num_templates());
  Matrix group_grad(theta.num_buckets(), theta.num_templates());
  std::vector<double> prob_scratch;
  double grad_sq_running = 0.0;

  for (long step = 1; step <= options.total_steps; ++step) {
    const PolicyParams snapshot = theta;
    const auto snapshot_probs = softmax_rows(snapshot);
    if (options.record_policies) history.policies.push_back(snapshot);

    double sum_shaped = 0.0, sum_outcome = 0.0, sum_length = 0.0;
    long n_samples = 0;

    for (int q = 0; q < qps; ++q) {
      RngStream stream = RngStream::from_key({options.seed, static_cast<std::uint64_t>(step),
                                              static_cast<std::uint64_t>(q), salt});
      const std::uint64_t question_id =
          static_cast<std::uint64_t>(step - 1) * static_cast<std::uint64_t>(qps) +
          static_cast<std::uint64_t>(q);
      const Question question = env.sample_question(stream, question_id);
      env.rollout_group_with_probs(groups[static_cast<std::size_t>(q)],
                                   snapshot_probs[static_cast<std::size_t>(question.bucket)],
                                   question, options.group_size, stream);

      buffers.fill(groups[static_cast<std::size_t>(q)]);
      // Annealing sees the 0-based step so training starts at s = 1.
      const std::vector<ShapedReward> shaped =
          shape_group(buffers.outcomes, buffers.scores, buffers.lengths, reward,
                      static_cast<int>(step - 1));

      std::vector<double> shaped_values(shaped.size());
      for (std::size_t i = 0; i < shaped.size(); ++i) shaped_values[i] = shaped[i].value;
      group_advantages_into(advantages[static_cast<std::size_t>(q)], shaped_values,
                            reward.adv_epsilon);

      for (std::size_t i = 0; i < shaped.size(); ++i) {
        sum_shaped += shaped[i].value;
        sum_outcome += buffers.outcomes[i].value;
        sum_length += buffers.lengths[i];
        ++n_samples;
      }
    }

    double grad_norm = 0.0;
    for (int epoch = 0; epoch < opt.inner_epochs; ++epoch) {
      grad.zero();
      for (int q = 0; q < qps; ++q) {
        surrogate_gradient_into(group_grad, prob_scratch, theta,
                                groups[static_cast<std::size_t>(q)],
                                advantages[static_cast<std::size_t>(q)], opt.clip_epsilon);
        grad.add_scaled(group_grad, 1.0 / static_cast<double>(qps));
      }
      if (epoch == 0) grad_norm = grad.norm();  // the r = 1 update direction
      theta = sgd_step(theta, grad, opt);
    }

    grad_sq_running += (grad_norm * grad_norm - grad_sq_running) / static_cast<double>(step);
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    history.steps.push_back(StepRecord{step, sum_shaped * inv_n, sum_outcome * inv_n,
                                       sum_length * inv_n, sum_outcome * inv_n, grad_norm,
                                       grad_sq_running});
  }

  history.final_policy = theta;
  return history;
}

double GradientEstimate::debiased_squared_norm() const {
  double se_sq = 0.0;
  for (double v : std_error.data) se_sq += v * v;
  return std::max(0.0, mean.squared_norm() - se_sq);
}

GradientEstimate true_gradient_estimate(const PolicyParams& policy, const SyntheticEnv& env,
                                        const RewardConfig& reward, int step, long n_samples,
                                        int group_size, RngStream stream) {
  reward.validate();
  if (n_samples < 2) throw_invalid_input("true_gradient_estimate: need n_samples >= 2");
  if (group_size < 2) throw_invalid_input("true_gradient_estimate: group_size must be >= 2");

  const auto probs = softmax_rows(policy);

  GradientEstimate est;
  est.mean = Matrix(policy.num_buckets(), policy.num_templates());
  est.std_error = Matrix(policy.num_buckets(), policy.num_templates());
  est.n_groups = n_samples;

  Matrix m2(policy.num_buckets(), policy.num_templates());
  Matrix g(policy.num_buckets(), policy.num_templates());
  GroupRollout rollout;
  GroupBuffers buffers;
  std::vector<double> shaped_values;
  std::vector<double> advantages;

  for (long m = 0; m < n_samples; ++m) {
    RngStream s = stream.substream(static_cast<std::uint64_t>(m));
    const Question question = env.sample_question(s, static_cast<std::uint64_t>(m));
    env.rollout_group_with_probs(rollout, probs[static_cast<std::size_t>(question.bucket)],
                                 question, group_size, s);
    buffers.fill(rollout);
    const std::vector<ShapedReward> shaped =
        shape_group(buffers.outcomes, buffers.scores, buffers.lengths, reward, step);
    shaped_values.resize(shaped.size());
    for (std::size_t i = 0; i < shaped.size(); ++i) shaped_values[i] = shaped[i].value;
    group_advantages_into(advantages, shaped_values, reward.adv_epsilon);

    g.zero();
    accumulate_gradient(g, probs[static_cast<std::size_t>(rollout.bucket)], rollout, advantages,
                        /*clip_epsilon=*/0.2);

    // Welford update over every coordinate (untouched buckets observe 0).
    const double inv = 1.0 / static_cast<double>(m + 1);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const double delta = g.data[i] - est.mean.data[i];
      est.mean.data[i] += delta * inv;
      m2.data[i] += delta * (g.data[i] - est.mean.data[i]);
    }
  }

  const double n = static_cast<double>(n_samples);
  for (std::size_t i = 0; i < m2.data.size(); ++i)
    est.std_error.data[i] = std::sqrt(m2.data[i] / ((n - 1.0) * n));
  return est;
}

}  // namespace grpolab
