#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grpolab/engine.hpp"
#include "grpolab/stats.hpp"

namespace grpolab {

// ---------------------------------------------------------------------------
// Gradient-variance probing (Proposition 1, empirical side)

struct VarianceProbeOptions {
  int batches = 200;           // M independent batch gradients, >= 50
  int groups_per_batch = 8;    // fresh groups averaged into each batch gradient
  int group_size = 8;          // G
  int step = 0;                // annealing step used when shaping rewards
  long covariance_samples = 50000;  // 0 skips the Cov(outcome, score) probe
  int bootstrap_resamples = 1000;
};

struct VarianceEntry {
  std::string label;
  double var_estimate = 0.0;  // (1/M) sum ||g_m - g_bar||^2, a.k.a. sigma_g^2
  BootstrapCi ci95;
  int n_batches = 0;
  double measured_cov = 0.0;  // Cov(outcome, score) at the probe policy
  double cov_std_error = 0.0;

  double sigma_g_sq() const { return var_estimate; }
};

/// Mean squared deviation of M batch gradients around their mean, with a
/// percentile-bootstrap 95% CI, at a fixed probe policy.
VarianceEntry gradient_variance(const PolicyParams& policy, const SyntheticEnv& env,
                                const RewardConfig& reward, const VarianceProbeOptions& options,
                                RngStream stream);

struct SweepCell {
  int probe_index = 0;
  VarianceEntry entry;
};

struct EtaEntry {
  int probe_index = 0;
  std::string label;      // config compared against the Outcome baseline
  double eta_hat = 0.0;   // 1 - Var[config] / Var[Outcome]
  BootstrapCi ci95;
};

struct VarianceSweep {
  std::vector<SweepCell> cells;
  std::vector<EtaEntry> etas;
};

/// Full cross of probe policies x reward configs. Rollouts are drawn once per
/// (probe, batch, group) and re-shaped under every config, so identical
/// configs get identical estimates and eta-hat comparisons share noise.
VarianceSweep variance_reduction_sweep(const SyntheticEnv& env,
                                       std::span<const PolicyParams> probe_policies,
                                       std::span<const RewardConfig> reward_configs,
                                       const VarianceProbeOptions& options, RngStream stream);

// ---------------------------------------------------------------------------
// Convergence analysis (Proposition 2, empirical side)

struct ConvergenceCheckpoint {
  long T = 0;
  double running_mean_grad_sq = 0.0;  // (1/T) sum_{t<=T} ||grad J(theta_t)||^2
  double bound = 0.0;                 // Proposition-2 RHS with measured surrogates
  bool bound_ok = false;
};

struct ConvergenceOptions {
  std::vector<long> checkpoints;  // subset of [1, total_steps], increasing
  long oracle_samples = 1000;     // groups per true-gradient estimate
  int sigma_probe_batches = 64;   // batches for the sigma_g^2 probes
};

struct ConvergenceRun {
  std::string label;
  std::uint64_t seed = 0;
  double base_lr = 0.0;
  std::vector<double> grad_sq;  // variance-corrected ||grad J(theta_t)||^2, t = 1..T
  std::vector<ConvergenceCheckpoint> checkpoints;
  double loglog_slope = 0.0;   // fit of log running mean vs log T over checkpoints
  double j_theta1 = 0.0;       // mean shaped reward at step 1
  double best_objective = 0.0; // run-local max mean shaped reward
  double g_sq_max = 0.0;       // max_t grad_sq (the G^2 surrogate)
  double sigma_g_sq = 0.0;     // max batch-gradient variance over probed policies
  double final_running_mean = 0.0;
};

/// Run sqrt-decay training, estimate ||grad J(theta_t)||^2 at every logged
/// policy with the Monte-Carlo oracle, and accumulate running means at the
/// requested checkpoints. Bounds are evaluated afterwards via apply_bound
/// (J(theta*) may aggregate several seeds).
ConvergenceRun convergence_analysis(const SyntheticEnv& env, const RewardConfig& reward,
                                    const OptimizerState& optimizer, const TrainOptions& run,
                                    const ConvergenceOptions& options);

/// Fill each checkpoint's Proposition-2 bound
///   (2 (J* - J(theta_1)) + alpha^2 G^2 + alpha^2 sigma_g^2) / (alpha sqrt(T))
/// and the bound_ok flags, using the run's measured surrogates.
void apply_bound(ConvergenceRun& run, double j_star);

// ---------------------------------------------------------------------------
// Collapse detection (Fig. 2 phenomenology)

enum class CollapseKind { None, LengthCollapse, TrainingCollapse };

std::string_view to_string(CollapseKind kind);

struct CollapseThresholds {
  int window = 200;                  // trailing / initial window length, steps
  double length_ratio = 0.10;        // collapse when mean length < ratio * initial
  double reward_peak_fraction = 0.5; // training collapse when reward < fraction * peak
};

struct CollapseEvidence {
  double reward_slope = 0.0;            // per-step, trailing window
  double length_slope = 0.0;            // per-step, trailing window
  double length_ratio_to_initial = 0.0; // trailing mean / initial-window mean
};

struct CollapseVerdict {
  CollapseKind kind = CollapseKind::None;
  std::optional<long> onset_step;  // present iff kind != None
  CollapseEvidence evidence;       // at onset, or at the last window if None
};

/// Length collapse: reward slope still nonnegative while mean length has
/// fallen below length_ratio of the initial window and keeps falling.
CollapseVerdict detect_length_collapse(const TrainHistory& history,
                                       const CollapseThresholds& thresholds);

/// Training collapse: reward and length both falling, with reward below
/// reward_peak_fraction of its historical maximum.
CollapseVerdict detect_training_collapse(const TrainHistory& history,
                                         const CollapseThresholds& thresholds);

}  // namespace grpolab
