// Command-line harness: SGD experiments, GD / gradient-flow runs, verification
// suites and the non-convexity witness.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "relu_lyapunov/relu_lyapunov.hpp"
#include "relu_lyapunov/verification.hpp"

namespace rl = relu_lyapunov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemFlags {
  std::string preset = "shallow";
  std::string arch;
  std::vector<double> xi;
  std::optional<double> a;
  std::optional<double> b;
  std::uint64_t seed = 0;
  std::string out;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& f) {
  cmd->add_option("--preset", f.preset, "shallow (1,7,1) or deep (1,3,7,1)")
      ->check(CLI::IsMember({"shallow", "deep"}));
  cmd->add_option("--arch", f.arch, "layer widths l0,...,lL (overrides the preset)");
  cmd->add_option("--xi", f.xi, "constant target, one value per output")->delimiter(',');
  cmd->add_option("--a", f.a, "lower input bound");
  cmd->add_option("--b", f.b, "upper input bound");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output CSV path (default: stdout)");
}

/// Preset with explicit flags applied on top.
rl::ExperimentPreset resolve_problem(const ProblemFlags& f) {
  rl::ExperimentPreset p = rl::ExperimentPreset::by_name(f.preset);
  if (!f.arch.empty()) p.arch = rl::Architecture::parse(f.arch);
  if (!f.xi.empty()) p.xi = f.xi;
  if (f.a) p.a = *f.a;
  if (f.b) p.b = *f.b;
  p.seed = f.seed;
  if (p.xi.size() != p.arch.output_dim()) {
    if (f.xi.empty() && p.xi.size() == 1) {
      p.xi.assign(p.arch.output_dim(), p.xi.front());
    } else {
      throw UsageError("--xi has " + std::to_string(p.xi.size()) + " entries, network has " +
                       std::to_string(p.arch.output_dim()) + " outputs");
    }
  }
  if (!(p.b > p.a)) throw UsageError("need --a < --b");
  return p;
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open " + path + " for writing");
  write(out);
}

int cmd_sgd(const ProblemFlags& f, std::optional<double> gamma, std::optional<std::size_t> batch,
            std::optional<std::size_t> steps, std::optional<std::size_t> trials,
            std::optional<std::size_t> eval_samples, std::size_t threads) {
  rl::ExperimentPreset p = resolve_problem(f);
  if (gamma) p.gamma = *gamma;
  if (batch) p.batch = *batch;
  if (steps) p.steps = *steps;
  if (trials) p.trials = *trials;
  if (eval_samples) p.eval_samples = *eval_samples;
  if (p.batch == 0 || p.steps == 0 || p.trials == 0 || p.eval_samples < 2) {
    throw UsageError("--batch, --steps, --trials must be positive and --eval-samples at least 2");
  }
  if (!(p.gamma >= 0.0)) throw UsageError("--gamma must be non-negative");

  const rl::SgdExperimentResult res = rl::run_sgd_experiment(p, threads);
  const auto [lo, hi] = std::minmax_element(res.trial_thresholds.begin(), res.trial_thresholds.end());
  std::fprintf(stderr, "gamma = %.6g; distribution-free SGD rate over trials in [%.6g, %.6g]\n", p.gamma,
               *lo, *hi);
  emit(f.out, [&](std::ostream& os) { res.write_csv(os); });
  return kExitOk;
}

struct DeterministicFlags {
  std::string measure;
  std::optional<double> mass;
  std::optional<double> rate;
  std::size_t steps = 10000;
  std::size_t log_stride = 1;
};

int cmd_deterministic(const ProblemFlags& f, const DeterministicFlags& d, bool flow) {
  const rl::ExperimentPreset p = resolve_problem(f);
  rl::DiscreteMeasure mu = d.measure.empty() ? rl::DiscreteMeasure::uniform_grid(101, p.a, p.b)
                                             : rl::DiscreteMeasure::load(d.measure, p.a, p.b);
  if (d.mass) mu = mu.scaled(*d.mass / mu.mass());
  if (mu.size() > 0 && mu.dimension() != p.arch.input_dim()) {
    throw UsageError("measure points have dimension " + std::to_string(mu.dimension()));
  }
  if (d.log_stride == 0) throw UsageError("--log-stride must be positive");
  const rl::TargetSpec target = rl::TargetSpec::constant(p.xi);
  const rl::ParamVector theta0 = rl::initial_params(p.arch, rl::init_key(p.seed, 0));
  const double thr = rl::gd_threshold(p.arch, theta0, p.xi, mu.mass(), mu.bound());
  const double rate = d.rate.value_or(flow ? 0.5 * thr : 0.9 * thr);
  if (!std::isfinite(rate)) throw UsageError("rate is not finite; pass --gamma or --dt explicitly");
  std::fprintf(stderr, "%s = %.6g; GD admissibility bound %.6g\n", flow ? "dt" : "gamma", rate, thr);

  const rl::Trajectory traj =
      flow ? rl::gf_euler_run(p.arch, theta0, mu, target, rate, d.steps, d.log_stride)
           : rl::gd_run(p.arch, theta0, mu, target, rl::Schedule::constant(rate), d.steps, d.log_stride);
  for (const auto& w : traj.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  emit(f.out, [&](std::ostream& os) { traj.write_csv(os); });
  return kExitOk;
}

int cmd_verify(const std::string& suite) {
  bool all = true;
  for (const auto& r : rl::run_suite(suite)) {
    std::printf("[%s] %s%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.empty() ? "" : ": ",
                r.detail.c_str());
    all = all && r.passed;
  }
  return all ? kExitOk : kExitVerifyFailed;
}

void print_vector(const char* label, const rl::ParamVector& v) {
  std::printf("%s = (", label);
  for (std::size_t i = 0; i < v.size(); ++i) std::printf(i ? ", %.17g" : "%.17g", v[i]);
  std::printf(")\n");
}

int cmd_nonconvexity(const ProblemFlags& f, const DeterministicFlags& d) {
  const rl::ExperimentPreset p = resolve_problem(f);
  if (p.arch.depth() < 2) {
    std::fprintf(stderr,
                 "error: with a single affine layer the realization is linear in the parameters, "
                 "so the risk is convex and no witness exists\n");
    return kExitUsage;
  }
  rl::DiscreteMeasure mu = d.measure.empty() ? rl::DiscreteMeasure::uniform_grid(101, p.a, p.b)
                                             : rl::DiscreteMeasure::load(d.measure, p.a, p.b);
  if (d.mass) mu = mu.scaled(mu.mass() > 0.0 ? *d.mass / mu.mass() : 0.0);
  const rl::TargetSpec target = rl::TargetSpec::constant(p.xi);
  const rl::WitnessPair w = rl::nonconvexity_witness(p.arch, p.xi);
  print_vector("theta", w.theta);
  print_vector("vartheta", w.vartheta);
  const double r_theta = rl::risk_exact(p.arch, w.theta, mu, target);
  const double r_vartheta = rl::risk_exact(p.arch, w.vartheta, mu, target);
  const double r_mid = rl::risk_exact(p.arch, rl::affine_combination(0.5, w.theta, w.vartheta), mu, target);
  std::printf("risk(theta) = %.17g\nrisk(vartheta) = %.17g\nrisk(midpoint) = %.17g\n", r_theta,
              r_vartheta, r_mid);
  std::printf("gap = %.17g (mass / 16 = %.17g)\n",
              rl::midpoint_gap(p.arch, w.theta, w.vartheta, mu, target), mu.mass() / 16.0);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training ReLU networks: Lyapunov descent checks and SGD experiments"};
  app.require_subcommand(1);

  ProblemFlags sgd_flags;
  std::optional<double> sgd_gamma;
  std::optional<std::size_t> sgd_batch, sgd_steps, sgd_trials, sgd_eval;
  std::size_t threads = 0;
  auto* sgd = app.add_subcommand("sgd", "trial-averaged SGD risk curve (CSV step,mean_mse,std_error)");
  add_problem_flags(sgd, sgd_flags);
  sgd->add_option("--gamma", sgd_gamma, "constant learning rate");
  sgd->add_option("--batch", sgd_batch, "minibatch size");
  sgd->add_option("--steps", sgd_steps, "SGD steps per trial");
  sgd->add_option("--trials", sgd_trials, "independent trials");
  sgd->add_option("--eval-samples", sgd_eval, "fixed evaluation sample size per trial");
  sgd->add_option("--threads", threads, "worker threads (0: RELU_LYAPUNOV_THREADS or hardware)");

  ProblemFlags gd_flags, gf_flags, nc_flags;
  DeterministicFlags gd_det, gf_det, nc_det;
  auto* gd = app.add_subcommand("gd", "deterministic gradient descent on a discrete measure");
  add_problem_flags(gd, gd_flags);
  gd->add_option("--gamma", gd_det.rate, "constant learning rate (default 0.9 x admissibility bound)");
  auto* gf = app.add_subcommand("gf", "Euler-discretized gradient flow on a discrete measure");
  add_problem_flags(gf, gf_flags);
  gf->add_option("--dt", gf_det.rate, "Euler step (default 0.5 x admissibility bound)");
  for (auto [cmd, det] : {std::pair{gd, &gd_det}, std::pair{gf, &gf_det}}) {
    cmd->add_option("--measure", det->measure, "measure file: lines 'x_1 ... x_l0 weight'");
    cmd->add_option("--mass", det->mass, "rescale the measure to this total mass");
    cmd->add_option("--steps", det->steps, "number of steps");
    cmd->add_option("--log-stride", det->log_stride, "log every n-th step");
  }

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run an invariant suite");
  verify->add_option("suite", suite, "gradient, lyapunov, convexity, activation or thresholds")
      ->required()
      ->check(CLI::IsMember(rl::suite_names()));

  auto* nonconvexity = app.add_subcommand("nonconvexity", "midpoint-convexity counterexample");
  add_problem_flags(nonconvexity, nc_flags);
  nonconvexity->add_option("--measure", nc_det.measure, "measure file: lines 'x_1 ... x_l0 weight'");
  nonconvexity->add_option("--mass", nc_det.mass, "rescale the measure to this total mass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sgd) return cmd_sgd(sgd_flags, sgd_gamma, sgd_batch, sgd_steps, sgd_trials, sgd_eval, threads);
    if (*gd) return cmd_deterministic(gd_flags, gd_det, false);
    if (*gf) return cmd_deterministic(gf_flags, gf_det, true);
    if (*verify) return cmd_verify(suite);
    if (*nonconvexity) return cmd_nonconvexity(nc_flags, nc_det);
  } catch (const rl::DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
