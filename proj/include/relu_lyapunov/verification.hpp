#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "relu_lyapunov/convexity.hpp"
#include "relu_lyapunov/experiments.hpp"
#include "relu_lyapunov/optimize.hpp"

namespace relu_lyapunov {

/// Random problem instances for property checks.
class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform01(); }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng_.uniform01() * static_cast<double>(hi - lo + 1));
  }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }

  Architecture architecture(std::size_t max_width, std::size_t min_depth, std::size_t max_depth) {
    const std::size_t depth = integer(min_depth, max_depth);
    std::vector<std::size_t> w(depth + 1);
    for (auto& x : w) x = integer(1, max_width);
    return Architecture(std::move(w));
  }

  ParamVector params(const Architecture& arch, double sd) {
    ParamVector theta(arch.param_count());
    for (double& t : theta) t = normal(sd);
    return theta;
  }

  /// Integer entries in [-range, range].
  ParamVector integer_params(const Architecture& arch, int range) {
    ParamVector theta(arch.param_count());
    for (double& t : theta) t = static_cast<double>(static_cast<int>(integer(0, 2 * range)) - range);
    return theta;
  }

  DiscreteMeasure measure(std::size_t dim, std::size_t points, double a, double b) {
    std::vector<std::vector<double>> pts(points, std::vector<double>(dim));
    std::vector<double> weights(points);
    for (std::size_t p = 0; p < points; ++p) {
      for (double& c : pts[p]) c = uniform(a, b);
      weights[p] = uniform(0.05, 1.0);
    }
    return DiscreteMeasure(std::move(pts), std::move(weights), a, b);
  }

  /// Points on the grid a + (b - a) q / 4 and weights in {1/4, 1/2, 3/4, 1}: every
  /// product and sum with integer parameters stays exact.
  DiscreteMeasure dyadic_measure(std::size_t dim, std::size_t points, double a, double b) {
    std::vector<std::vector<double>> pts(points, std::vector<double>(dim));
    std::vector<double> weights(points);
    for (std::size_t p = 0; p < points; ++p) {
      for (double& c : pts[p]) c = a + (b - a) * static_cast<double>(integer(0, 4)) / 4.0;
      weights[p] = static_cast<double>(integer(1, 4)) / 4.0;
    }
    return DiscreteMeasure(std::move(pts), std::move(weights), a, b);
  }

  std::vector<double> vector(std::size_t n, double sd) {
    std::vector<double> v(n);
    for (double& x : v) x = normal(sd);
    return v;
  }

  /// f_i(x) = c_i + sum_j u_ij sin(x_j), so f(0) = c.
  TargetSpec smooth_target(std::size_t in_dim, std::size_t out_dim) {
    std::vector<double> c = vector(out_dim, 1.0);
    std::vector<double> u = vector(in_dim * out_dim, 1.0);
    auto f = [u, in_dim, out_dim, c](std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < out_dim; ++i) {
        double s = c[i];
        for (std::size_t j = 0; j < in_dim; ++j) s += u[i * in_dim + j] * std::sin(x[j]);
        out[i] = s;
      }
    };
    return TargetSpec::function(f, c);
  }

  CounterRng& rng() noexcept { return rng_; }

 private:
  CounterRng rng_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

/// Central difference (f(t+h) - f(t-h)) / 2h of a scalar function of theta, coordinate-wise.
inline std::vector<double> central_differences(const ParamVector& theta, double h,
                                               const std::function<double(const ParamVector&)>& f) {
  std::vector<double> out(theta.size());
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = f(probe);
    probe[i] = theta[i] - h;
    const double down = f(probe);
    probe[i] = theta[i];
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

/// Smallest |preactivation| over all hidden neurons and all support points.
inline double min_hidden_margin(const Architecture& arch, const ParamVector& theta,
                                const DiscreteMeasure& mu) {
  double m = std::numeric_limits<double>::infinity();
  ForwardTrace trace;
  for (std::size_t p = 0; p < mu.size(); ++p) {
    forward_into(arch, theta.span(), mu.point(p), nullptr, trace);
    for (std::size_t k = 0; k + 1 < arch.depth(); ++k) {
      for (double z : trace.preactivations[k]) m = std::min(m, std::abs(z));
    }
  }
  return m;
}

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::string format_detail(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

namespace suites {

inline std::vector<CheckResult> gradient(std::uint64_t seed = 1) {
  std::vector<CheckResult> out;
  InstanceGenerator gen(seed);
  {
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      const Architecture arch = gen.architecture(3, 1, 3);
      const ParamVector theta = gen.params(arch, 1.0);
      const DiscreteMeasure mu = gen.measure(arch.input_dim(), gen.integer(1, 5), -1.0, 1.0);
      const TargetSpec target = gen.smooth_target(arch.input_dim(), arch.output_dim());
      const GradientVector g = generalized_gradient(arch, theta, mu, target);
      const GradientVector o = gradient_pathsum_oracle(arch, theta, mu, target);
      worst = std::max(worst, max_abs_diff(g.span(), o.span()) / std::max(1.0, max_abs(o.span())));
    }
    out.push_back({"backprop matches path-sum oracle (200 random instances)", worst <= 1e-12,
                   format_detail("max relative deviation %.3g", worst)});
  }
  {
    std::size_t mismatches = 0;
    for (int t = 0; t < 100; ++t) {
      const Architecture arch = gen.architecture(3, 1, 3);
      const ParamVector theta = gen.integer_params(arch, 3);
      const DiscreteMeasure mu = gen.dyadic_measure(arch.input_dim(), gen.integer(1, 5), -1.0, 1.0);
      std::vector<double> xi(arch.output_dim());
      for (double& x : xi) x = static_cast<double>(gen.integer(0, 6)) - 3.0;
      const TargetSpec target = TargetSpec::constant(xi);
      if (generalized_gradient(arch, theta, mu, target) != gradient_pathsum_oracle(arch, theta, mu, target)) {
        ++mismatches;
      }
    }
    out.push_back({"exact agreement on integer parameters (100 instances)", mismatches == 0,
                   format_detail("%.0f mismatches", static_cast<double>(mismatches))});
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 30; ++t) {
      const Architecture arch = gen.architecture(3, 1, 3);
      const ParamVector theta = gen.params(arch, 0.7);
      const DiscreteMeasure mu = gen.measure(arch.input_dim(), gen.integer(1, 5), -1.0, 1.0).scaled(0.3);
      const TargetSpec target = gen.smooth_target(arch.input_dim(), arch.output_dim());
      const double r = gen.uniform(1.0, 10.0);
      const GradientVector g = smooth_gradient(arch, theta, mu, target, r);
      const auto fd = central_differences(theta, 1e-6, [&](const ParamVector& p) {
        return risk_smooth(arch, p, mu, target, r);
      });
      for (std::size_t i = 0; i < fd.size(); ++i) {
        const double tol = std::max(1e-6 * std::max(std::abs(g[i]), std::abs(fd[i])), 1e-9);
        worst = std::max(worst, std::abs(g[i] - fd[i]) / tol);
      }
    }
    out.push_back({"smoothed gradient matches central differences (30 instances)", worst <= 1.0,
                   format_detail("worst error / tolerance %.3g", worst)});
  }
  {
    std::size_t violations = 0;
    for (int t = 0; t < 1000; ++t) {
      const Architecture arch = gen.architecture(3, 1, 3);
      const ParamVector theta = gen.params(arch, gen.uniform(0.1, 2.0));
      const double a = gen.uniform(-2.0, 0.0);
      const double b = a + gen.uniform(0.5, 2.0);
      const DiscreteMeasure mu = gen.measure(arch.input_dim(), gen.integer(1, 5), a, b);
      const TargetSpec target = TargetSpec::constant(gen.vector(arch.output_dim(), 1.0));
      const double g2 = squared_norm(generalized_gradient(arch, theta, mu, target).span());
      const double bound = gradient_growth_bound(arch, theta, mu.mass(), mu.bound(),
                                                 risk_exact(arch, theta, mu, target));
      if (g2 > bound * (1.0 + 1e-12)) ++violations;
    }
    out.push_back({"gradient growth bound (1000 instances)", violations == 0,
                   format_detail("%.0f violations", static_cast<double>(violations))});
  }
  return out;
}

inline std::vector<CheckResult> lyapunov(std::uint64_t seed = 2) {
  std::vector<CheckResult> out;
  InstanceGenerator gen(seed);
  double worst_pair = 0.0;
  double worst_const = 0.0;
  std::size_t sandwich_fail = 0;
  std::size_t norm_fail = 0;
  for (int t = 0; t < 1000; ++t) {
    const Architecture arch = gen.architecture(3, 1, 3);
    const ParamVector theta = gen.params(arch, 1.0);
    const DiscreteMeasure mu = gen.measure(arch.input_dim(), gen.integer(1, 5), -1.0, 1.0);
    const TargetSpec target = gen.smooth_target(arch.input_dim(), arch.output_dim());
    const LyapunovContext ctx(arch, target.value_at_zero());
    const PairingResult pr = pairing(ctx, theta, mu, target);
    worst_pair = std::max(worst_pair, std::abs(pr.lhs - pr.rhs) / (1.0 + std::abs(pr.lhs)));

    const TargetSpec constant = TargetSpec::constant(target.value_at_zero());
    const PairingResult pc = pairing(ctx, theta, mu, constant);
    const double four_l_risk = 4.0 * ctx.depth() * risk_exact(arch, theta, mu, constant);
    worst_const = std::max(worst_const, std::abs(pc.lhs - four_l_risk) / (1.0 + std::abs(pc.lhs)));

    const double v = lyapunov_value(ctx, theta);
    const SandwichBounds sb = sandwich_bounds(ctx, theta);
    const double slack = 1e-12 * (1.0 + std::abs(v));
    if (v < sb.lower - slack || v > sb.upper + slack) ++sandwich_fail;
    const double radius = trapping_radius(ctx, v);
    if (!(euclidean_norm(theta.span()) <= radius * (1.0 + 1e-12))) ++norm_fail;
  }
  out.push_back({"pairing identity <grad V, G> (1000 instances)", worst_pair <= 1e-10,
                 format_detail("max scaled deviation %.3g", worst_pair)});
  out.push_back({"constant target: <grad V, G> = 4 L risk", worst_const <= 1e-10,
                 format_detail("max scaled deviation %.3g", worst_const)});
  out.push_back({"sandwich bounds on V", sandwich_fail == 0,
                 format_detail("%.0f violations", static_cast<double>(sandwich_fail))});
  out.push_back({"norm control by V", norm_fail == 0,
                 format_detail("%.0f violations", static_cast<double>(norm_fail))});
  {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Architecture arch = gen.architecture(3, 1, 3);
      const ParamVector theta = gen.params(arch, 1.0);
      const LyapunovContext ctx(arch, gen.vector(arch.output_dim(), 1.0));
      const GradientVector g = lyapunov_gradient(ctx, theta);
      const auto fd = central_differences(theta, 1e-5, [&](const ParamVector& p) {
        return lyapunov_value(ctx, p);
      });
      worst = std::max(worst, max_abs_diff(g.span(), fd) / (1.0 + max_abs(g.span())));
    }
    out.push_back({"closed-form grad V matches central differences", worst <= 1e-8,
                   format_detail("max scaled deviation %.3g", worst)});
  }
  return out;
}

inline std::vector<CheckResult> convexity(std::uint64_t seed = 3) {
  std::vector<CheckResult> out;
  InstanceGenerator gen(seed);
  for (const char* widths : {"1,7,1", "1,3,7,1"}) {
    const Architecture arch = Architecture::parse(widths);
    for (double mass : {1.0, 4.0}) {
      const DiscreteMeasure mu = DiscreteMeasure::uniform_grid(11, 0.0, 1.0, mass);
      // f(x) = 1 + x has mean 3/2 under the grid measure; matching xi_1 to it leaves m/16.
      const TargetSpec target = TargetSpec::function(
          [](std::span<const double> x, std::span<double> o) { o[0] = 1.0 + x[0]; }, {1.0});
      const std::vector<double> xi{1.5};
      const WitnessPair w = nonconvexity_witness(arch, xi);
      const double gap = midpoint_gap(arch, w.theta, w.vartheta, mu, target);
      const double r1 = risk_exact(arch, w.theta, mu, target);
      const double r2 = risk_exact(arch, w.vartheta, mu, target);
      const bool ok = std::abs(gap - mass / 16.0) <= 1e-12 && r1 == r2;
      out.push_back({std::string("witness gap m/16 for ") + widths + ", m = " + std::to_string(int(mass)),
                     ok, format_detail("gap %.17g, expected %.17g", gap, mass / 16.0)});
    }
  }
  {
    const Architecture arch({2, 3, 2});
    const DiscreteMeasure mu = gen.measure(2, 5, -1.0, 1.0).scaled(0.0);
    const WitnessPair w = nonconvexity_witness(arch, std::vector<double>{0.3, -0.2});
    const double gap = midpoint_gap(arch, w.theta, w.vartheta, mu, TargetSpec::constant({0.3, -0.2}));
    out.push_back({"zero mass gives zero gap", gap == 0.0, format_detail("gap %.3g", gap)});
  }
  {
    std::size_t violations = 0;
    for (int t = 0; t < 300; ++t) {
      const Architecture arch = gen.architecture(3, 2, 3);
      const ParamVector hidden = gen.params(arch, 1.0);
      const std::size_t block = arch.output_dim() * (arch.width(arch.depth() - 1) + 1);
      const auto v = gen.vector(block, 1.0);
      const auto w = gen.vector(block, 1.0);
      const DiscreteMeasure mu = gen.measure(arch.input_dim(), gen.integer(1, 5), -1.0, 1.0);
      const TargetSpec target = gen.smooth_target(arch.input_dim(), arch.output_dim());
      const double lambda = static_cast<double>(gen.integer(1, 9)) / 10.0;
      if (!last_layer_midpoint_check(arch, hidden, v, w, mu, target, lambda).holds()) ++violations;
    }
    out.push_back({"risk is convex in the last layer (300 pairs)", violations == 0,
                   format_detail("%.0f violations", static_cast<double>(violations))});
  }
  {
    const Architecture arch({2, 3});
    const DiscreteMeasure mu = gen.measure(2, 5, -1.0, 1.0);
    const auto rep = random_midpoint_convexity(arch, mu, TargetSpec::constant({0.5, 1.0, -1.0}), 300, seed);
    out.push_back({"depth 1: full risk is midpoint convex (300 pairs)", rep.violations == 0,
                   format_detail("worst excess %.3g", rep.worst_excess)});
  }
  return out;
}

inline std::vector<CheckResult> activation(std::uint64_t seed = 4) {
  std::vector<CheckResult> out;
  InstanceGenerator gen(seed);
  const ClampConfig cfg;
  {
    double worst = 0.0;
    for (int e = 0; e <= 20; ++e) {
      const double r = std::ldexp(1.0, e);
      for (int i = 0; i <= 20000; ++i) {
        const double x = -10.0 + 20.0 * i / 20000.0;
        worst = std::max(worst, r * std::abs(smooth_relu(cfg, r, x) - relu(x)) / cfg.upper);
      }
    }
    out.push_back({"|R_r - relu| <= B / r on [-10, 10]", worst <= 1.0 + 1e-12,
                   format_detail("max r |R_r - relu| / B = %.6g", worst)});
  }
  {
    bool ok = true;
    for (double x : {-2.0, -1e-3, -1e-7, 1e-7, 1e-3, 0.4, 3.0}) {
      for (int k = 0; k <= 8; ++k) {
        const double r = std::pow(10.0, k);
        if (cfg.upper / r < std::abs(x) && smooth_relu_derivative(cfg, r, x) != relu_left_derivative(x)) ok = false;
      }
      if (smooth_relu_derivative(cfg, 1e8, x) != relu_left_derivative(x) && std::abs(x) > 1e-8) ok = false;
    }
    out.push_back({"R_r' reaches the ReLU gate once the band is passed", ok, ""});
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const double r = std::exp(gen.uniform(0.0, std::log(1e3)));
      const double x = gen.uniform(-1.0, 2.0) * 1.2 / r;
      const double h = 1e-6 / r;
      const double fd = (smooth_relu(cfg, r, x + h) - smooth_relu(cfg, r, x - h)) / (2.0 * h);
      const double an = smooth_relu_derivative(cfg, r, x);
      const double tol = std::max(1e-6 * std::max(std::abs(an), std::abs(fd)), 1e-9);
      worst = std::max(worst, std::abs(fd - an) / tol);
    }
    out.push_back({"R_r' matches central differences (1000 points)", worst <= 1.0,
                   format_detail("worst error / tolerance %.3g", worst)});
  }
  {
    double worst = 0.0;
    for (int e = 0; e <= 20; ++e) {
      const double r = std::ldexp(1.0, e);
      for (int i = 0; i <= 20000; ++i) {
        const double x = (cfg.lower + (cfg.upper - cfg.lower) * i / 20000.0) / r;
        worst = std::max(worst, std::abs(smooth_relu_derivative(cfg, r, x)));
      }
    }
    out.push_back({"sup |R_r'| <= 4", worst <= smooth_relu_derivative_bound(cfg),
                   format_detail("observed sup %.6g", worst)});
  }
  return out;
}

inline std::vector<CheckResult> thresholds(std::uint64_t seed = 5) {
  std::vector<CheckResult> out;
  const Architecture arch({1, 7, 1});
  const std::vector<double> xi{1.0};
  const ParamVector theta0 = initial_params(arch, seed);
  const DiscreteMeasure mu = DiscreteMeasure::uniform_grid(101, 0.0, 1.0);
  const LyapunovContext ctx(arch, xi);
  {
    const double thr = gd_threshold(arch, theta0, xi, 1.0, 1.0);
    const Trajectory traj = gd_run(arch, theta0, mu, TargetSpec::constant(xi),
                                   Schedule::constant(0.9 * thr), 2000);
    const DescentReport rep = descent_certificate(traj, ctx);
    out.push_back({"GD at 0.9 x threshold: V descends, norm stays trapped (2000 steps)",
                   rep.certified(), format_detail("threshold %.6g, max V increment %.3g", thr, rep.max_v_increase)});
  }
  {
    const double t1 = gd_threshold(arch, theta0, xi, 1.0, 1.0);
    const double t4 = gd_threshold(arch, theta0, xi, 4.0, 1.0);
    const double t0 = gd_threshold(arch, theta0, xi, 0.0, 1.0);
    out.push_back({"GD threshold scales as 1/m and is unbounded at m = 0",
                   std::abs(t1 / t4 - 4.0) <= 1e-14 && std::isinf(t0), format_detail("ratio %.17g", t1 / t4)});
  }
  {
    const double thr = sgd_threshold(arch, euclidean_norm(theta0.span()), xi, 0.0, 1.0);
    SgdConfig cfg;
    cfg.steps = 1000;
    cfg.seed = seed;
    cfg.eval_samples = 0;
    const Trajectory traj = sgd_run(arch, theta0, Schedule::constant(thr),
                                    UniformSampler(0.0, 1.0, 1, seed), xi, cfg);
    const DescentReport rep = descent_certificate(traj, ctx);
    out.push_back({"SGD at the distribution-free rate: V descends on the path (1000 steps)",
                   rep.v_increases == 0 && rep.inequality_held,
                   format_detail("rate %.6g, max V increment %.3g", thr, rep.max_v_increase)});
  }
  return out;
}

}  // namespace suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"gradient", "lyapunov", "convexity", "activation",
                                              "thresholds"};
  return names;
}

inline std::vector<CheckResult> run_suite(const std::string& name) {
  if (name == "gradient") return suites::gradient();
  if (name == "lyapunov") return suites::lyapunov();
  if (name == "convexity") return suites::convexity();
  if (name == "activation") return suites::activation();
  if (name == "thresholds") return suites::thresholds();
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace relu_lyapunov
