#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "relu_lyapunov/gradient.hpp"

namespace relu_lyapunov {

/// Architecture plus the target value f(0); all that V depends on.
struct LyapunovContext {
  Architecture arch;
  std::vector<double> f0;

  LyapunovContext(Architecture a, std::vector<double> f_at_zero)
      : arch(std::move(a)), f0(std::move(f_at_zero)) {
    if (f0.size() != arch.output_dim()) {
      throw DimensionError("f(0) has dimension " + std::to_string(f0.size()) +
                           ", network output " + std::to_string(arch.output_dim()));
    }
  }

  double depth() const noexcept { return static_cast<double>(arch.depth()); }
  double f0_squared_norm() const noexcept { return squared_norm(f0); }
};

/// V(theta) = sum_k (k ||b^k||^2 + ||W^k||_F^2) - 2 L <f(0), b^L>.
inline double lyapunov_value(const LyapunovContext& ctx, std::span<const double> theta) {
  const Architecture& arch = ctx.arch;
  require_params(arch, theta);
  const std::size_t depth = arch.depth();
  double v = 0.0;
  for (std::size_t k = 1; k <= depth; ++k) {
    const std::size_t nw = arch.width(k) * arch.width(k - 1);
    const double* w = theta.data() + arch.weight_base(k);
    const double* b = theta.data() + arch.bias_base(k);
    double ww = 0.0;
    for (std::size_t t = 0; t < nw; ++t) ww += w[t] * w[t];
    double bb = 0.0;
    for (std::size_t i = 0; i < arch.width(k); ++i) bb += b[i] * b[i];
    v += static_cast<double>(k) * bb + ww;
  }
  const double* bl = theta.data() + arch.bias_base(depth);
  double cross = 0.0;
  for (std::size_t i = 0; i < arch.output_dim(); ++i) cross += ctx.f0[i] * bl[i];
  return v - 2.0 * static_cast<double>(depth) * cross;
}

inline double lyapunov_value(const LyapunovContext& ctx, const ParamVector& theta) {
  return lyapunov_value(ctx, theta.span());
}

/// 2 (W^1, b^1, W^2, 2 b^2, ..., W^L, L (b^L - f(0))).
inline GradientVector lyapunov_gradient(const LyapunovContext& ctx, const ParamVector& theta) {
  const Architecture& arch = ctx.arch;
  require_params(arch, theta.span());
  const std::size_t depth = arch.depth();
  GradientVector g(arch.param_count());
  for (std::size_t k = 1; k <= depth; ++k) {
    const std::size_t nw = arch.width(k) * arch.width(k - 1);
    for (std::size_t t = 0; t < nw; ++t) g[arch.weight_base(k) + t] = 2.0 * theta[arch.weight_base(k) + t];
    for (std::size_t i = 0; i < arch.width(k); ++i) {
      const std::size_t idx = arch.bias_base(k) + i;
      const double shift = k == depth ? ctx.f0[i] : 0.0;
      g[idx] = 2.0 * static_cast<double>(k) * (theta[idx] - shift);
    }
  }
  return g;
}

struct SandwichBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// (1/2)||theta||^2 - 2 L^2 ||f(0)||^2  <=  V(theta)  <=  2 L ||theta||^2 + L ||f(0)||^2.
inline SandwichBounds sandwich_bounds(const LyapunovContext& ctx, const ParamVector& theta) {
  require_params(ctx.arch, theta.span());
  const double L = ctx.depth();
  const double t2 = squared_norm(theta.span());
  const double f2 = ctx.f0_squared_norm();
  return {0.5 * t2 - 2.0 * L * L * f2, 2.0 * L * t2 + L * f2};
}

/// Radius (2 V(theta) + 4 L^2 ||f(0)||^2)^{1/2} of the ball that traps the
/// trajectory started at theta under admissible rates. NaN if the radicand is negative.
inline double trapping_radius(const LyapunovContext& ctx, double v) {
  const double L = ctx.depth();
  const double radicand = 2.0 * v + 4.0 * L * L * ctx.f0_squared_norm();
  return radicand >= 0.0 ? std::sqrt(radicand) : std::nan("");
}

struct PairingResult {
  double lhs = 0.0;  // <grad V, G>
  double rhs = 0.0;  // 4 L sum_p w_p <N(x_p) - f(x_p), N(x_p) - f(0)>
};

inline PairingResult pairing(const LyapunovContext& ctx, const ParamVector& theta,
                             const DiscreteMeasure& mu, const TargetSpec& target) {
  const Architecture& arch = ctx.arch;
  const GradientVector g = generalized_gradient(arch, theta, mu, target);
  const GradientVector gv = lyapunov_gradient(ctx, theta);
  PairingResult res;
  {
    CompensatedSum s;
    for (std::size_t i = 0; i < g.size(); ++i) s.add(g[i] * gv[i]);
    res.lhs = s.value();
  }
  ForwardTrace trace;
  std::vector<double> fx(arch.output_dim());
  CompensatedSum s;
  for (std::size_t p = 0; p < mu.size(); ++p) {
    forward_into(arch, theta.span(), mu.point(p), nullptr, trace);
    target.evaluate(mu.point(p), fx);
    const auto out = trace.output();
    double inner = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) inner += (out[i] - fx[i]) * (out[i] - ctx.f0[i]);
    s.add(mu.weight(p) * inner);
  }
  res.rhs = 4.0 * ctx.depth() * s.value();
  return res;
}

}  // namespace relu_lyapunov
