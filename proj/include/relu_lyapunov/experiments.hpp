#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "relu_lyapunov/optimize.hpp"

namespace relu_lyapunov {

struct ExperimentPreset {
  std::string name;
  Architecture arch{{1, 1}};
  std::vector<double> xi{1.0};
  double a = 0.0;
  double b = 1.0;
  std::size_t batch = 100;
  double gamma = 1.0 / 2000.0;
  std::size_t steps = 100000;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t eval_samples = 10000;

  static ExperimentPreset shallow() {
    ExperimentPreset p;
    p.name = "shallow";
    p.arch = Architecture({1, 7, 1});
    return p;
  }

  static ExperimentPreset deep() {
    ExperimentPreset p;
    p.name = "deep";
    p.arch = Architecture({1, 3, 7, 1});
    return p;
  }

  static ExperimentPreset by_name(const std::string& name) {
    if (name == "shallow") return shallow();
    if (name == "deep") return deep();
    throw std::invalid_argument("unknown preset '" + name + "' (expected shallow or deep)");
  }
};

/// Theta_0 with i.i.d. N(0, 1 / l_1) entries.
inline ParamVector initial_params(const Architecture& arch, std::uint64_t key) {
  CounterRng rng(key);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(arch.width(1))));
  ParamVector theta(arch.param_count());
  for (double& x : theta) x = normal(rng);
  return theta;
}

/// Steps 1, 2, 5, 10, 20, 50, ... up to `steps`, with `steps` itself always last.
inline std::vector<std::size_t> log_checkpoints(std::size_t steps) {
  std::vector<std::size_t> out;
  for (std::size_t decade = 1; decade <= steps; decade *= 10) {
    for (std::size_t m : {1, 2, 5}) {
      if (m * decade <= steps) out.push_back(m * decade);
    }
    if (decade > steps / 10) break;
  }
  if (out.empty() || out.back() != steps) out.push_back(steps);
  return out;
}

/// Keys for trial t: parameter initialization and the SGD stream.
inline std::uint64_t init_key(std::uint64_t seed, std::size_t trial) { return derive_key(seed, 2 * trial); }
inline std::uint64_t trial_key(std::uint64_t seed, std::size_t trial) {
  return derive_key(seed, 2 * trial + 1);
}

/// Worker count: a positive request wins, then RELU_LYAPUNOV_THREADS, then the hardware.
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RELU_LYAPUNOV_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(t) for t in [0, count) on `threads` workers. Rethrows the failure of
/// the lowest-indexed failing job.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job&& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < count; t = next++) {
      try {
        job(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct CheckpointStat {
  std::size_t step = 0;
  double mean_mse = 0.0;
  double std_error = 0.0;
};

struct SgdExperimentResult {
  std::vector<CheckpointStat> rows;
  std::vector<double> trial_thresholds;  // distribution-free SGD rate for each trial's Theta_0

  void write_csv(std::ostream& out) const {
    out << "step,mean_mse,std_error\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.step, r.mean_mse, r.std_error);
      out << buf;
    }
  }

  double at(std::size_t step) const {
    for (const auto& r : rows) {
      if (r.step == step) return r.mean_mse;
    }
    throw std::out_of_range("no checkpoint at step " + std::to_string(step));
  }
};

/// Independent SGD trials; each logs its fixed-sample population-risk estimate at
/// the log-spaced checkpoints. Trial results are merged in trial order, so the
/// output does not depend on the thread count.
inline SgdExperimentResult run_sgd_experiment(const ExperimentPreset& preset, std::size_t threads = 0) {
  if (preset.trials == 0) throw std::invalid_argument("need at least one trial");
  if (preset.steps == 0) throw std::invalid_argument("need at least one step");
  const auto checkpoints = log_checkpoints(preset.steps);
  const Schedule schedule = Schedule::constant(preset.gamma);
  const UniformSampler domain(preset.a, preset.b, preset.arch.input_dim(), preset.seed);

  std::vector<std::vector<double>> per_trial(preset.trials);
  std::vector<double> thresholds(preset.trials);
  parallel_for(preset.trials, resolve_threads(threads), [&](std::size_t t) {
    const ParamVector theta0 = initial_params(preset.arch, init_key(preset.seed, t));
    thresholds[t] = sgd_threshold(preset.arch, euclidean_norm(theta0.span()), preset.xi, preset.a, preset.b);
    SgdConfig cfg;
    cfg.batch = preset.batch;
    cfg.steps = preset.steps;
    cfg.seed = trial_key(preset.seed, t);
    cfg.log_stride = preset.steps + 1;
    cfg.eval_samples = preset.eval_samples;
    cfg.eval_steps = checkpoints;
    cfg.snapshot_count = 0;
    const Trajectory traj = sgd_run(preset.arch, theta0, schedule, domain, preset.xi, cfg);
    auto& risks = per_trial[t];
    for (const auto& row : traj.rows) {
      if (std::isfinite(row.risk)) risks.push_back(row.risk);
    }
    if (risks.size() != checkpoints.size()) throw ContractError("trial missed a checkpoint");
  });

  SgdExperimentResult result;
  result.trial_thresholds = std::move(thresholds);
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    detail::RunningMoments moments;
    for (const auto& risks : per_trial) moments.add(risks[c]);
    const McEstimate est = moments.estimate();
    result.rows.push_back({checkpoints[c], est.estimate, est.std_error});
  }
  return result;
}

}  // namespace relu_lyapunov
