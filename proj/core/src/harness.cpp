#include "grpolab/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"
#include "grpolab/version.hpp"

namespace grpolab {

using nlohmann::json;

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t lanes = std::min<std::size_t>(std::max(workers, 1), n);
  if (lanes <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(lanes);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    threads.emplace_back([&, lane]() {
      // Static striping: indices lane, lane + lanes, ...
      for (std::size_t i = lane; i < n; i += lanes) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw_numeric("failed to format double");
  return std::string(buffer, ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw_io("write failed: " + path.string());
}

void write_curves_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::string body;
  body.reserve(history.steps.size() * 96 + 128);
  body += "step,mean_shaped_reward,mean_outcome_reward,mean_length_tokens,accuracy_fraction,grad_norm\n";
  for (const StepRecord& s : history.steps) {
    body += std::to_string(s.step);
    body += ',';
    body += format_double(s.mean_shaped_reward);
    body += ',';
    body += format_double(s.mean_outcome_reward);
    body += ',';
    body += format_double(s.mean_length_tokens);
    body += ',';
    body += format_double(s.accuracy_fraction);
    body += ',';
    body += format_double(s.grad_norm);
    body += '\n';
  }
  write_text_file(path, body);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_io("cannot create output directory " + dir.string() + ": " + ec.message());
}

json ci_to_json(const BootstrapCi& ci) { return json::array({ci.low, ci.high}); }

json verdict_to_json(const CollapseVerdict& v) {
  json out;
  out["kind"] = std::string(to_string(v.kind));
  if (v.onset_step)
    out["onset_step"] = *v.onset_step;
  else
    out["onset_step"] = nullptr;
  out["evidence"] = {{"reward_slope", v.evidence.reward_slope},
                     {"length_slope", v.evidence.length_slope},
                     {"length_ratio_to_initial", v.evidence.length_ratio_to_initial}};
  return out;
}

json entry_to_json(const VarianceEntry& e) {
  json out;
  out["label"] = e.label;
  out["var_estimate"] = e.var_estimate;
  out["sigma_g_sq"] = e.sigma_g_sq();
  out["bootstrap_ci_95"] = ci_to_json(e.ci95);
  out["n_batches"] = e.n_batches;
  out["measured_cov"] = e.measured_cov;
  out["cov_std_error"] = e.cov_std_error;
  return out;
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const ExperimentConfig& config, const CommandResult& result,
                    double total_ms, const json& summary_stats) {
  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["command"] = command;
  manifest["config_hash"] = config_hash(config);
  json files = json::array();
  for (const auto& p : result.outputs) files.push_back(p.filename().string());
  manifest["outputs"] = files;
  manifest["wall_clock_ms"] = total_ms;
  manifest["summary"] = summary_stats;
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

RewardConfig outcome_baseline(const RewardConfig& like) {
  RewardConfig outcome = like;
  outcome.kind = RewardKind::Outcome;
  return outcome;
}

// One training run keyed by seed, with optional collapse verdicts.
struct SeedRun {
  TrainHistory history;
  CollapseVerdict length_verdict;
  CollapseVerdict training_verdict;
  bool collapse_evaluated = false;
};

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const SyntheticEnv env(config.env);
  TrainOptions options;
  options.total_steps = config.run.total_steps;
  options.questions_per_step = config.run.questions_per_step;
  options.group_size = config.run.group_size;
  options.seed = seed;

  SeedRun run;
  run.history = train(env, config.reward, config.optimizer.state(), options);
  if (run.history.steps.size() >=
      2 * static_cast<std::size_t>(config.analysis.collapse.window)) {
    run.length_verdict = detect_length_collapse(run.history, config.analysis.collapse);
    run.training_verdict = detect_training_collapse(run.history, config.analysis.collapse);
    run.collapse_evaluated = true;
  }
  return run;
}

json seed_run_summary(const SeedRun& run, std::uint64_t seed) {
  const StepRecord& last = run.history.steps.back();
  json out;
  out["seed"] = seed;
  out["final"] = {{"step", last.step},
                  {"mean_shaped_reward", last.mean_shaped_reward},
                  {"mean_outcome_reward", last.mean_outcome_reward},
                  {"mean_length_tokens", last.mean_length_tokens},
                  {"accuracy_fraction", last.accuracy_fraction},
                  {"grad_norm", last.grad_norm}};
  if (run.collapse_evaluated) {
    out["length_collapse"] = verdict_to_json(run.length_verdict);
    out["training_collapse"] = verdict_to_json(run.training_verdict);
  } else {
    out["length_collapse"] = nullptr;
    out["training_collapse"] = nullptr;
  }
  return out;
}

}  // namespace

std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env_dir = std::getenv("GRPOLAB_OUT"); env_dir && *env_dir) return env_dir;
  throw_config_validation(
      "no output directory: set output_dir in the config, pass --out, or export GRPOLAB_OUT");
}

CommandResult cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                        int workers) {
  const auto start = Clock::now();
  ensure_directory(out_dir);

  const std::size_t n_seeds = config.run.seeds.size();
  std::vector<SeedRun> runs(n_seeds);
  parallel_for(n_seeds, workers,
               [&](std::size_t i) { runs[i] = run_seed(config, config.run.seeds[i]); });

  CommandResult result;
  json per_seed = json::array();
  double acc_sum = 0.0, reward_sum = 0.0, length_sum = 0.0;
  int length_collapses = 0, training_collapses = 0;

  for (std::size_t i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = config.run.seeds[i];
    const auto curve_path = out_dir / ("curves_seed_" + std::to_string(seed) + ".csv");
    write_curves_csv(curve_path, runs[i].history);
    result.outputs.push_back(curve_path);
    per_seed.push_back(seed_run_summary(runs[i], seed));

    const StepRecord& last = runs[i].history.steps.back();
    acc_sum += last.accuracy_fraction;
    reward_sum += last.mean_shaped_reward;
    length_sum += last.mean_length_tokens;
    if (runs[i].collapse_evaluated) {
      if (runs[i].length_verdict.kind == CollapseKind::LengthCollapse) ++length_collapses;
      if (runs[i].training_verdict.kind == CollapseKind::TrainingCollapse) ++training_collapses;
    }
  }

  json summary;
  summary["seeds"] = per_seed;
  summary["aggregate"] = {{"n_seeds", n_seeds},
                          {"mean_final_accuracy", acc_sum / static_cast<double>(n_seeds)},
                          {"mean_final_shaped_reward", reward_sum / static_cast<double>(n_seeds)},
                          {"mean_final_length_tokens", length_sum / static_cast<double>(n_seeds)},
                          {"length_collapse_count", length_collapses},
                          {"training_collapse_count", training_collapses}};
  const auto summary_path = out_dir / "summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.outputs.push_back(summary_path);

  write_manifest(out_dir, "train", config, result, elapsed_ms(start), summary["aggregate"]);
  result.manifest = out_dir / "manifest.json";
  return result;
}

CommandResult cmd_variance(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           int workers) {
  const auto start = Clock::now();
  ensure_directory(out_dir);

  std::vector<RewardConfig> sweep_configs;
  sweep_configs.push_back(outcome_baseline(config.reward));
  if (config.reward.kind != RewardKind::Outcome) sweep_configs.push_back(config.reward);

  VarianceProbeOptions probe;
  probe.batches = config.analysis.variance_batches;
  probe.groups_per_batch = config.analysis.groups_per_batch;
  probe.group_size = config.run.group_size;
  probe.step = config.analysis.probe_step;
  probe.covariance_samples = config.analysis.covariance_samples;
  probe.bootstrap_resamples = config.analysis.bootstrap_resamples;

  const std::size_t n_rho = config.analysis.rho_sweep.size();
  std::vector<VarianceSweep> sweeps(n_rho);
  parallel_for(n_rho, workers, [&](std::size_t i) {
    EnvConfig env_config = config.env;
    env_config.correlation_knob = config.analysis.rho_sweep[i];
    const SyntheticEnv env(env_config);
    const std::vector<PolicyParams> probes{env.uniform_policy()};
    RngStream stream = RngStream::from_key(
        {config.run.seeds.front(), 0x76617269616e6365ULL,
         std::bit_cast<std::uint64_t>(config.analysis.rho_sweep[i])});
    sweeps[i] = variance_reduction_sweep(env, probes, sweep_configs, probe, stream);
  });

  json report;
  report["probe"] = "uniform_logits";
  report["rho_sweep"] = json::array();
  // eta-hat per label across the rho sweep, for the monotone-trend check.
  std::map<std::string, std::vector<double>> eta_by_label;
  for (std::size_t i = 0; i < n_rho; ++i) {
    json block;
    block["rho"] = config.analysis.rho_sweep[i];
    block["entries"] = json::array();
    for (const SweepCell& cell : sweeps[i].cells) block["entries"].push_back(entry_to_json(cell.entry));
    block["eta"] = json::array();
    for (const EtaEntry& eta : sweeps[i].etas) {
      block["eta"].push_back({{"label", eta.label},
                              {"eta_hat", eta.eta_hat},
                              {"bootstrap_ci_95", ci_to_json(eta.ci95)}});
      eta_by_label[eta.label].push_back(eta.eta_hat);
    }
    report["rho_sweep"].push_back(block);
  }

  json trend;
  for (const auto& [label, values] : eta_by_label) {
    bool nondecreasing = true;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] < values[i - 1]) nondecreasing = false;
    trend[label] = {{"eta_hats", values}, {"nondecreasing", nondecreasing}};
  }
  report["eta_trend"] = trend;

  CommandResult result;
  const auto report_path = out_dir / "variance_report.json";
  write_text_file(report_path, report.dump(2) + "\n");
  result.outputs.push_back(report_path);

  write_manifest(out_dir, "variance", config, result, elapsed_ms(start), trend);
  result.manifest = out_dir / "manifest.json";
  return result;
}

CommandResult cmd_converge(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           int workers) {
  const auto start = Clock::now();
  ensure_directory(out_dir);

  std::vector<RewardConfig> reward_configs;
  reward_configs.push_back(outcome_baseline(config.reward));
  if (config.reward.kind != RewardKind::Outcome) reward_configs.push_back(config.reward);

  const SyntheticEnv env(config.env);
  const long horizon = config.analysis.checkpoints.back();

  ConvergenceOptions options;
  options.checkpoints = config.analysis.checkpoints;
  options.oracle_samples = config.analysis.oracle_samples;
  options.sigma_probe_batches = config.analysis.sigma_probe_batches;

  struct Job {
    std::size_t config_index;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < reward_configs.size(); ++c)
    for (std::uint64_t seed : config.run.seeds) jobs.push_back(Job{c, seed});

  std::vector<ConvergenceRun> runs(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    TrainOptions run_options;
    run_options.total_steps = horizon;
    run_options.questions_per_step = config.run.questions_per_step;
    run_options.group_size = config.run.group_size;
    run_options.seed = jobs[i].seed;
    runs[i] = convergence_analysis(env, reward_configs[jobs[i].config_index],
                                   config.optimizer.state(), run_options, options);
  });

  // J(theta*) per label, best observed across all seeds.
  std::map<std::string, double> j_star;
  for (const ConvergenceRun& run : runs) {
    auto it = j_star.find(run.label);
    if (it == j_star.end())
      j_star[run.label] = run.best_objective;
    else
      it->second = std::max(it->second, run.best_objective);
  }
  for (ConvergenceRun& run : runs) apply_bound(run, j_star[run.label]);

  json report;
  report["checkpoints"] = config.analysis.checkpoints;
  report["j_star"] = j_star;
  report["runs"] = json::array();
  bool all_bounds_ok = true;
  for (const ConvergenceRun& run : runs) {
    json r;
    r["label"] = run.label;
    r["seed"] = run.seed;
    r["loglog_slope"] = run.loglog_slope;
    r["j_theta1"] = run.j_theta1;
    r["best_objective"] = run.best_objective;
    r["g_sq_max"] = run.g_sq_max;
    r["sigma_g_sq"] = run.sigma_g_sq;
    r["final_running_mean"] = run.final_running_mean;
    r["checkpoints"] = json::array();
    for (const ConvergenceCheckpoint& cp : run.checkpoints) {
      r["checkpoints"].push_back({{"T", cp.T},
                                  {"running_mean_grad_sq", cp.running_mean_grad_sq},
                                  {"bound", cp.bound},
                                  {"bound_ok", cp.bound_ok}});
      all_bounds_ok = all_bounds_ok && cp.bound_ok;
    }
    report["runs"].push_back(std::move(r));
  }
  report["all_bounds_ok"] = all_bounds_ok;

  // One-sided paired sign test: configured reward vs the Outcome baseline.
  if (reward_configs.size() == 2) {
    const std::string treated = std::string(to_string(reward_configs[1].kind));
    int wins = 0, losses = 0;
    for (std::uint64_t seed : config.run.seeds) {
      double outcome_final = 0.0, treated_final = 0.0;
      for (const ConvergenceRun& run : runs) {
        if (run.seed != seed) continue;
        if (run.label == "outcome")
          outcome_final = run.final_running_mean;
        else
          treated_final = run.final_running_mean;
      }
      if (treated_final < outcome_final)
        ++wins;
      else if (treated_final > outcome_final)
        ++losses;
    }
    report["paired_test"] = {{"baseline", "outcome"},
                             {"treatment", treated},
                             {"hypothesis", "treatment final running mean <= baseline"},
                             {"wins", wins},
                             {"losses", losses},
                             {"p_value", sign_test_pvalue(wins, losses)}};
  }

  CommandResult result;
  const auto report_path = out_dir / "convergence_report.json";
  write_text_file(report_path, report.dump(2) + "\n");
  result.outputs.push_back(report_path);

  json stats;
  stats["all_bounds_ok"] = all_bounds_ok;
  write_manifest(out_dir, "converge", config, result, elapsed_ms(start), stats);
  result.manifest = out_dir / "manifest.json";
  return result;
}

ExperimentConfig scenario_config(const ExperimentConfig& base, const std::string& name) {
  ExperimentConfig scenario = base;
  // All collapse scenarios share the hack-prone environment: the 5-token
  // always-wrong template is present and every proper template sits above
  // the rubric's grace region, so trivially short output is the unique way
  // to a 1.0 conciseness score.
  scenario.env.short_wrong_template = true;
  scenario.env.template_ratio_min = std::max(scenario.env.template_ratio_min, 1.2);
  scenario.reward.cosine = base.reward.cosine;

  if (name == "weighted_sum") {
    scenario.reward.kind = RewardKind::WeightedSum;
    scenario.reward.alpha = 3.0;
  } else if (name == "cosine_aggressive") {
    scenario.reward.kind = RewardKind::Cosine;
    scenario.reward.alpha = 2.0;
    scenario.reward.cosine.l_max = 700;
    scenario.reward.cosine.r0_correct = 2.0;
    scenario.reward.cosine.rl_correct = 1.0;
    scenario.reward.cosine.r0_wrong = 2.0;  // no deterrent against short wrong answers
    scenario.reward.cosine.rl_wrong = 0.0;
    scenario.reward.cosine.r_exceed = -10.0;
    scenario.env.length_cap = scenario.reward.cosine.l_max;
  } else if (name == "kimi") {
    scenario.reward.kind = RewardKind::Kimi;
    scenario.reward.alpha = 0.5;
  } else if (name == "crf") {
    scenario.reward.kind = RewardKind::Crf;
    scenario.reward.alpha = 1.0;
  } else {
    throw_config_validation("unknown collapse scenario '" + name + "'");
  }
  scenario.finalize();
  return scenario;
}

CommandResult cmd_collapse_scan(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir, int workers) {
  const auto start = Clock::now();
  if (config.analysis.scenarios.empty())
    throw_invalid_input("collapse-scan: nothing to scan (analysis.scenarios is empty)");
  if (config.run.total_steps < 2 * static_cast<long>(config.analysis.collapse.window))
    throw_config_validation(
        "collapse-scan: run.total_steps must be >= 2 * analysis.collapse_window");
  ensure_directory(out_dir);

  struct Job {
    std::size_t scenario_index;
    std::uint64_t seed;
  };
  std::vector<ExperimentConfig> scenarios;
  for (const std::string& name : config.analysis.scenarios)
    scenarios.push_back(scenario_config(config, name));

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (std::uint64_t seed : config.run.seeds) jobs.push_back(Job{s, seed});

  std::vector<SeedRun> runs(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    runs[i] = run_seed(scenarios[jobs[i].scenario_index], jobs[i].seed);
  });

  json report;
  report["scenarios"] = json::array();
  json rates_summary;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const std::string& name = config.analysis.scenarios[s];
    json block;
    block["name"] = name;
    block["reward_kind"] = std::string(to_string(scenarios[s].reward.kind));
    block["alpha"] = scenarios[s].reward.alpha;
    block["runs"] = json::array();
    int n = 0, length_flags = 0, training_flags = 0, any_flags = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].scenario_index != s) continue;
      const SeedRun& run = runs[i];
      const bool length_hit =
          run.collapse_evaluated && run.length_verdict.kind == CollapseKind::LengthCollapse;
      const bool training_hit =
          run.collapse_evaluated && run.training_verdict.kind == CollapseKind::TrainingCollapse;
      json r;
      r["seed"] = jobs[i].seed;
      r["length_collapse"] = verdict_to_json(run.length_verdict);
      r["training_collapse"] = verdict_to_json(run.training_verdict);
      r["final_accuracy"] = run.history.steps.back().accuracy_fraction;
      r["final_length"] = run.history.steps.back().mean_length_tokens;
      block["runs"].push_back(std::move(r));
      ++n;
      if (length_hit) ++length_flags;
      if (training_hit) ++training_flags;
      if (length_hit || training_hit) ++any_flags;
    }
    block["rates"] = {{"n_seeds", n},
                      {"length_collapse", static_cast<double>(length_flags) / n},
                      {"training_collapse", static_cast<double>(training_flags) / n},
                      {"any_collapse", static_cast<double>(any_flags) / n}};
    rates_summary[name] = block["rates"];
    report["scenarios"].push_back(std::move(block));
  }

  CommandResult result;
  const auto report_path = out_dir / "collapse_report.json";
  write_text_file(report_path, report.dump(2) + "\n");
  result.outputs.push_back(report_path);

  write_manifest(out_dir, "collapse-scan", config, result, elapsed_ms(start), rates_summary);
  result.manifest = out_dir / "manifest.json";
  return result;
}

}  // namespace grpolab
