#pragma once

#include <cmath>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "relu_lyapunov/risk.hpp"

namespace relu_lyapunov {

struct WitnessPair {
  ParamVector theta;
  ParamVector vartheta;
};

/// Two parameter vectors whose networks both realize the constant xi, yet whose
/// midpoint does not: theta switches on neuron 1 of layer L-1 through its bias,
/// vartheta connects that neuron to output 1 through w^L_{1,1}.
inline WitnessPair nonconvexity_witness(const Architecture& arch, std::span<const double> xi) {
  const std::size_t depth = arch.depth();
  if (depth < 2) {
    throw std::invalid_argument(
        "a depth-1 network is affine in its parameters, so its risk is convex; no witness exists");
  }
  require_target(arch, xi.size());
  WitnessPair pair{ParamVector(arch.param_count()), ParamVector(arch.param_count())};
  for (std::size_t i = 1; i <= arch.output_dim(); ++i) {
    pair.theta.at1(arch.bias_index(depth, i)) = xi[i - 1];
    pair.vartheta.at1(arch.bias_index(depth, i)) = xi[i - 1];
  }
  pair.theta.at1(arch.bias_index(depth - 1, 1)) = 1.0;
  pair.vartheta.at1(arch.weight_index(depth, 1, 1)) = 1.0;
  return pair;
}

inline ParamVector affine_combination(double lambda, const ParamVector& v, const ParamVector& w) {
  if (v.size() != w.size()) throw DimensionError("parameter vectors differ in length");
  ParamVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = lambda * v[i] + (1.0 - lambda) * w[i];
  return out;
}

/// risk((theta + vartheta) / 2) - (risk(theta) + risk(vartheta)) / 2. Positive means
/// midpoint convexity fails for this pair.
inline double midpoint_gap(const Architecture& arch, const ParamVector& theta,
                           const ParamVector& vartheta, const DiscreteMeasure& mu,
                           const TargetSpec& target) {
  require_params(arch, theta.span());
  require_params(arch, vartheta.span());
  const double mid = risk_exact(arch, affine_combination(0.5, theta, vartheta), mu, target);
  return mid - 0.5 * (risk_exact(arch, theta, mu, target) + risk_exact(arch, vartheta, mu, target));
}

struct ConvexityCheck {
  double lhs = 0.0;  // risk at lambda v + (1 - lambda) w
  double rhs = 0.0;  // lambda risk(v) + (1 - lambda) risk(w)
  bool holds(double tol = 1e-12) const noexcept { return lhs <= rhs + tol; }
};

/// Convexity of the risk in the last-layer block with the hidden parameters frozen.
/// `hidden` supplies layers 1..L-1 (its last-layer entries are ignored); v and w are
/// last-layer blocks (W^L row-major, then b^L).
inline ConvexityCheck last_layer_midpoint_check(const Architecture& arch, const ParamVector& hidden,
                                                std::span<const double> v,
                                                std::span<const double> w,
                                                const DiscreteMeasure& mu, const TargetSpec& target,
                                                double lambda = 0.5) {
  require_params(arch, hidden.span());
  const std::size_t depth = arch.depth();
  const std::size_t block = arch.width(depth) * (arch.width(depth - 1) + 1);
  if (v.size() != block || w.size() != block) {
    throw DimensionError("last-layer block must have " + std::to_string(block) + " entries");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::domain_error("lambda must lie in [0, 1]");
  const std::size_t base = arch.weight_base(depth);
  auto with_block = [&](auto&& entry) {
    ParamVector theta = hidden;
    for (std::size_t t = 0; t < block; ++t) theta[base + t] = entry(t);
    return risk_exact(arch, theta, mu, target);
  };
  ConvexityCheck c;
  c.lhs = with_block([&](std::size_t t) { return lambda * v[t] + (1.0 - lambda) * w[t]; });
  c.rhs = lambda * with_block([&](std::size_t t) { return v[t]; }) +
          (1.0 - lambda) * with_block([&](std::size_t t) { return w[t]; });
  return c;
}

struct RandomConvexityReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max of lhs - rhs
};

/// Midpoint convexity of the full risk on random parameter pairs with N(0, scale^2) entries.
inline RandomConvexityReport random_midpoint_convexity(const Architecture& arch,
                                                       const DiscreteMeasure& mu,
                                                       const TargetSpec& target, std::size_t pairs,
                                                       std::uint64_t seed, double scale = 1.0,
                                                       double tol = 1e-12) {
  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  RandomConvexityReport rep;
  ParamVector v(arch.param_count());
  ParamVector w(arch.param_count());
  for (std::size_t p = 0; p < pairs; ++p) {
    for (double& x : v) x = normal(rng);
    for (double& x : w) x = normal(rng);
    const double excess = midpoint_gap(arch, v, w, mu, target);
    ++rep.pairs;
    rep.worst_excess = std::max(rep.worst_excess, excess);
    if (excess > tol) ++rep.violations;
  }
  return rep;
}

}  // namespace relu_lyapunov
