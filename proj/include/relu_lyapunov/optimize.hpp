#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relu_lyapunov/lyapunov.hpp"

namespace relu_lyapunov {

/// Learning rates gamma_n >= 0: a constant or a function of the step index.
class Schedule {
 public:
  using Function = std::function<double(std::size_t)>;

  static Schedule constant(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw std::domain_error("learning rate must be finite and non-negative");
    }
    Schedule s;
    s.constant_ = gamma;
    return s;
  }

  static Schedule function(Function f) {
    Schedule s;
    s.f_ = std::move(f);
    return s;
  }

  double rate(std::size_t n) const {
    const double g = f_ ? f_(n) : constant_;
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw std::domain_error("learning rate at step " + std::to_string(n) +
                              " is negative or not finite");
    }
    return g;
  }

  /// Largest rate over steps 0..steps-1.
  double supremum(std::size_t steps) const {
    if (!f_) return constant_;
    double m = 0.0;
    for (std::size_t n = 0; n < steps; ++n) m = std::max(m, rate(n));
    return m;
  }

 private:
  Function f_;
  double constant_ = 0.0;
};

struct TrajectoryRow {
  std::size_t step = 0;
  double time = 0.0;           // sum of rates before this step (n * dt for GF)
  double v = 0.0;              // V(theta_n)
  double risk = std::nan("");  // exact risk (GD/GF) or Monte Carlo population risk (SGD)
  double risk_std_error = 0.0;
  double batch_risk = std::nan("");  // SGD: empirical risk of the batch drawn at step n
  double grad_norm = 0.0;
  double param_norm = 0.0;
  double gamma = 0.0;
  double risk_integral = 0.0;  // GF: 4 L sum_{m<n} risk_m dt
};

enum class Method { gradient_descent, gradient_flow, stochastic_gradient_descent };

struct Trajectory {
  Method method = Method::gradient_descent;
  std::vector<TrajectoryRow> rows;
  std::vector<std::pair<std::size_t, ParamVector>> snapshots;
  ParamVector final_params;
  double initial_v = 0.0;
  double admissible_rate = 0.0;  // rate bound under which V provably descends
  double sup_rate = 0.0;         // largest rate actually used
  std::vector<std::string> warnings;

  static constexpr const char* csv_header = "step,v,risk,grad_norm,param_norm,gamma";

  void write_csv(std::ostream& out) const {
    out << csv_header << '\n';
    char buf[256];
    for (const auto& r : rows) {
      const double risk = std::isfinite(r.risk) ? r.risk : r.batch_risk;
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.v, risk,
                    r.grad_norm, r.param_norm, r.gamma);
      out << buf;
    }
  }
};

/// The largest rate that keeps V(Theta_{n+1}) <= V(Theta_n) for GD on a measure of
/// mass m with constant target f(0):
/// ( m L a^2 prod_p (l_p + 1) (2 V(Theta_0) + 4 L^2 ||f(0)||^2 + 1)^{L-1} )^{-1}.
/// Infinite for m = 0.
inline double gd_threshold(const Architecture& arch, const ParamVector& theta0,
                           const std::vector<double>& f0, double mass, double input_bound_a) {
  if (mass == 0.0) return std::numeric_limits<double>::infinity();
  const LyapunovContext ctx(arch, f0);
  const double L = ctx.depth();
  double widths = 1.0;
  for (std::size_t w : arch.widths()) widths *= static_cast<double>(w) + 1.0;
  const double base = 2.0 * lyapunov_value(ctx, theta0) + 4.0 * L * L * ctx.f0_squared_norm() + 1.0;
  return 1.0 / (mass * L * input_bound_a * input_bound_a * widths * std::pow(base, L - 1.0));
}

/// Distribution-free SGD rate: (||Theta_0|| + 1)^{-2L} / (4 L d max{a, ||xi||})^{2L}.
inline double sgd_threshold(const Architecture& arch, double theta0_norm,
                            std::span<const double> xi, double a, double b) {
  if (!(theta0_norm >= 0.0)) throw std::domain_error("parameter norm must be non-negative");
  const double L = static_cast<double>(arch.depth());
  const double big_b = std::max(input_bound(a, b), euclidean_norm(xi));
  const double scale = 4.0 * L * static_cast<double>(arch.param_count()) * big_b;
  return std::pow(theta0_norm + 1.0, -2.0 * L) / std::pow(scale, 2.0 * L);
}

/// Slack for comparing consecutive values of V: floating-point evaluation of V
/// and of the update theta - gamma g each carry an error of a few ulps of ||theta||^2.
inline double descent_tolerance(double v, double param_norm) noexcept {
  return 64.0 * DBL_EPSILON * (1.0 + std::abs(v) + param_norm * param_norm);
}

namespace detail {

/// Step 0 plus `count` roughly geometric steps up to `steps`.
inline std::vector<std::size_t> geometric_checkpoints(std::size_t steps, std::size_t count) {
  std::vector<std::size_t> out{0};
  if (steps == 0 || count == 0) return out;
  for (std::size_t i = 0; i < count; ++i) {
    const double e = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(steps), e))));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void require_finite_update(std::span<const double> theta, std::size_t step) {
  if (!all_finite(theta)) {
    throw DivergenceError("iterate became non-finite at step " + std::to_string(step + 1), step);
  }
}

inline Trajectory deterministic_run(const Architecture& arch, const ParamVector& theta0,
                                    const DiscreteMeasure& mu, const TargetSpec& target,
                                    const Schedule& schedule, std::size_t steps,
                                    std::size_t log_stride, Method method,
                                    std::size_t snapshot_count) {
  require_params(arch, theta0.span());
  if (log_stride == 0) throw std::invalid_argument("log stride must be positive");
  const LyapunovContext ctx(arch, target.value_at_zero());
  const double L = ctx.depth();
  const auto snap_steps = geometric_checkpoints(steps, snapshot_count);

  Trajectory traj;
  traj.method = method;
  traj.initial_v = lyapunov_value(ctx, theta0);
  traj.admissible_rate = gd_threshold(arch, theta0, target.value_at_zero(), mu.mass(), mu.bound());
  traj.sup_rate = schedule.supremum(steps);

  ParamVector theta = theta0;
  double time = 0.0;
  CompensatedSum integral;
  std::size_t next_snap = 0;
  for (std::size_t n = 0;; ++n) {
    const double risk = risk_exact(arch, theta, mu, target);
    const bool last = n == steps;
    const GradientVector g = last ? GradientVector(arch.param_count())
                                  : generalized_gradient(arch, theta, mu, target);
    const double gamma = last ? 0.0 : schedule.rate(n);
    if (n % log_stride == 0 || last) {
      TrajectoryRow row;
      row.step = n;
      row.time = time;
      row.v = lyapunov_value(ctx, theta);
      row.risk = risk;
      row.grad_norm = last ? euclidean_norm(generalized_gradient(arch, theta, mu, target).span())
                           : euclidean_norm(g.span());
      row.param_norm = euclidean_norm(theta.span());
      row.gamma = gamma;
      row.risk_integral = 4.0 * L * integral.value();
      traj.rows.push_back(row);
    }
    if (next_snap < snap_steps.size() && snap_steps[next_snap] == n) {
      traj.snapshots.emplace_back(n, theta);
      ++next_snap;
    }
    if (last) break;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= gamma * g[i];
    require_finite_update(theta.span(), n);
    integral.add(risk * gamma);
    time += gamma;
  }
  traj.final_params = std::move(theta);
  return traj;
}

}  // namespace detail

/// Deterministic GD Theta_{n+1} = Theta_n - gamma_n G(Theta_n) on a discrete measure.
/// Logs every `log_stride` steps and always the final step.
inline Trajectory gd_run(const Architecture& arch, const ParamVector& theta0,
                         const DiscreteMeasure& mu, const TargetSpec& target,
                         const Schedule& schedule, std::size_t steps, std::size_t log_stride = 1,
                         std::size_t snapshot_count = 10) {
  return detail::deterministic_run(arch, theta0, mu, target, schedule, steps, log_stride,
                                   Method::gradient_descent, snapshot_count);
}

/// Explicit Euler discretization of the gradient flow with step dt. Each row's
/// `time` is n dt and `risk_integral` is 4 L sum_{m<n} risk(Theta_m) dt.
inline Trajectory gf_euler_run(const Architecture& arch, const ParamVector& theta0,
                               const DiscreteMeasure& mu, const TargetSpec& target, double dt,
                               std::size_t steps, std::size_t log_stride = 1,
                               std::size_t snapshot_count = 10) {
  if (!(dt > 0.0)) throw std::domain_error("Euler step dt must be positive");
  Trajectory traj = detail::deterministic_run(arch, theta0, mu, target, Schedule::constant(dt),
                                              steps, log_stride, Method::gradient_flow,
                                              snapshot_count);
  if (dt > traj.admissible_rate) {
    traj.warnings.push_back("dt = " + std::to_string(dt) + " exceeds the GD admissibility bound " +
                            std::to_string(traj.admissible_rate) +
                            "; V may increase along the Euler path");
  }
  return traj;
}

/// Batch sizes M_n >= 1: a constant or a function of the step index.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t m = 1) : constant_(m) {}  // NOLINT(google-explicit-constructor)
  explicit BatchSchedule(std::function<std::size_t(std::size_t)> f) : f_(std::move(f)) {}

  std::size_t size(std::size_t n) const {
    const std::size_t m = f_ ? f_(n) : constant_;
    if (m == 0) throw std::domain_error("batch size must be at least 1");
    return m;
  }

 private:
  std::function<std::size_t(std::size_t)> f_;
  std::size_t constant_ = 1;
};

struct SgdConfig {
  BatchSchedule batch{100};
  std::size_t steps = 1;
  std::uint64_t seed = 0;
  std::size_t log_stride = 1;
  /// Size of the fixed evaluation sample for the population-risk column; 0 disables it.
  std::size_t eval_samples = 10000;
  /// Steps that get a population-risk estimate; empty means every logged step.
  std::vector<std::size_t> eval_steps;
  std::size_t snapshot_count = 10;
};

/// Stream tags under the per-run base stream.
inline constexpr std::uint64_t kEvalStream = 1;
inline constexpr std::uint64_t batch_stream(std::size_t step) { return 2 * step + 2; }

/// Minibatch SGD with fresh i.i.d. uniform inputs per step. `domain` fixes the
/// input cube; all randomness derives from (domain key, cfg.seed).
inline Trajectory sgd_run(const Architecture& arch, const ParamVector& theta0,
                          const Schedule& schedule, const UniformSampler& domain,
                          std::span<const double> xi, const SgdConfig& cfg) {
  require_params(arch, theta0.span());
  require_target(arch, xi.size());
  if (domain.dimension() != arch.input_dim()) {
    throw DimensionError("sampler dimension does not match input");
  }
  if (cfg.steps == 0) throw std::invalid_argument("SGD needs at least one step");
  if (cfg.log_stride == 0) throw std::invalid_argument("log stride must be positive");

  const std::vector<double> f0(xi.begin(), xi.end());
  const LyapunovContext ctx(arch, f0);
  const UniformSampler base = domain.split(cfg.seed);

  Batch eval_sample;
  if (cfg.eval_samples >= 2) base.split(kEvalStream).fill(eval_sample, cfg.eval_samples);
  std::vector<std::size_t> eval_steps = cfg.eval_steps;
  std::sort(eval_steps.begin(), eval_steps.end());
  const auto snap_steps = detail::geometric_checkpoints(cfg.steps, cfg.snapshot_count);

  Trajectory traj;
  traj.method = Method::stochastic_gradient_descent;
  traj.initial_v = lyapunov_value(ctx, theta0);
  traj.admissible_rate = gd_threshold(arch, theta0, f0, 1.0, input_bound(domain.lower(), domain.upper()));
  traj.sup_rate = schedule.supremum(cfg.steps);

  MinibatchGradient engine(arch);
  ParamVector theta = theta0;
  GradientVector g(arch.param_count());
  Batch batch;
  double time = 0.0;
  std::size_t next_eval = 0;
  std::size_t next_snap = 0;
  for (std::size_t n = 0;; ++n) {
    const bool last = n == cfg.steps;
    while (next_eval < eval_steps.size() && eval_steps[next_eval] < n) ++next_eval;
    const bool eval_here = next_eval < eval_steps.size() && eval_steps[next_eval] == n;
    const bool log_here = n % cfg.log_stride == 0 || last || eval_here;

    double batch_risk = std::nan("");
    double gamma = 0.0;
    if (!last) {
      UniformSampler stream = base.split(batch_stream(n));
      stream.fill(batch, cfg.batch.size(n));
      batch_risk = engine.compute(theta.span(), batch, xi, g.span());
      gamma = schedule.rate(n);
    }
    if (log_here) {
      TrajectoryRow row;
      row.step = n;
      row.time = time;
      row.v = lyapunov_value(ctx, theta);
      row.batch_risk = batch_risk;
      row.grad_norm = last ? 0.0 : euclidean_norm(g.span());
      row.param_norm = euclidean_norm(theta.span());
      row.gamma = gamma;
      const bool want_eval = eval_steps.empty() || eval_here;
      if (want_eval && eval_sample.size() >= 2) {
        const McEstimate est = sample_risk(arch, theta, eval_sample, xi);
        row.risk = est.estimate;
        row.risk_std_error = est.std_error;
      }
      traj.rows.push_back(row);
    }
    if (next_snap < snap_steps.size() && snap_steps[next_snap] == n) {
      traj.snapshots.emplace_back(n, theta);
      ++next_snap;
    }
    if (last) break;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= gamma * g[i];
    detail::require_finite_update(theta.span(), n);
    time += gamma;
  }
  traj.final_params = std::move(theta);
  return traj;
}

struct DescentReport {
  std::size_t steps_checked = 0;
  std::size_t v_increases = 0;     // steps with V_{n+1} - V_n above round-off slack
  double max_v_increase = 0.0;     // largest V_{n+1} - V_n observed (may be negative)
  double delta = 0.0;              // sup rate / admissible rate
  std::size_t inequality_violations = 0;
  bool inequality_held = true;     // V_{n+1} - V_n <= -4 gamma_n L (1 - delta) risk_n at every step
  double sup_param_norm = 0.0;
  double norm_bound = 0.0;         // (2 V(Theta_0) + 4 L^2 ||f(0)||^2)^{1/2}
  bool norm_bound_held = true;

  bool certified() const noexcept {
    return v_increases == 0 && inequality_held && norm_bound_held;
  }
};

/// Checks the per-step descent inequality and the trapping-ball bound on a
/// trajectory logged at every step. For SGD the per-step risk is the batch risk.
inline DescentReport descent_certificate(const Trajectory& traj, const LyapunovContext& ctx) {
  const auto& rows = traj.rows;
  if (rows.size() < 2) throw ContractError("descent certificate needs at least two logged steps");
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (rows[n].step != n) {
      throw ContractError("descent certificate needs a row for every step (missing step " +
                          std::to_string(n) + ")");
    }
  }
  const bool sgd = traj.method == Method::stochastic_gradient_descent;
  DescentReport rep;
  rep.delta = traj.admissible_rate > 0.0 ? traj.sup_rate / traj.admissible_rate : 0.0;
  if (traj.sup_rate == 0.0) rep.delta = 0.0;
  rep.norm_bound = trapping_radius(ctx, traj.initial_v);
  rep.max_v_increase = -std::numeric_limits<double>::infinity();
  const double L = ctx.depth();
  for (std::size_t n = 0; n + 1 < rows.size(); ++n) {
    const auto& cur = rows[n];
    const double step_risk = sgd ? cur.batch_risk : cur.risk;
    if (!std::isfinite(step_risk)) {
      throw ContractError("step " + std::to_string(n) + " has no logged risk");
    }
    const double dv = rows[n + 1].v - cur.v;
    const double tol = descent_tolerance(cur.v, cur.param_norm);
    ++rep.steps_checked;
    rep.max_v_increase = std::max(rep.max_v_increase, dv);
    if (dv > tol) ++rep.v_increases;
    const double bound = -4.0 * cur.gamma * L * (1.0 - rep.delta) * step_risk;
    if (dv > bound + tol) ++rep.inequality_violations;
  }
  rep.inequality_held = rep.inequality_violations == 0;
  for (const auto& r : rows) rep.sup_param_norm = std::max(rep.sup_param_norm, r.param_norm);
  rep.norm_bound_held = rep.sup_param_norm <= rep.norm_bound * (1.0 + 1e-12);
  return rep;
}

}  // namespace relu_lyapunov
