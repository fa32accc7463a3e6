#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "relu_lyapunov/risk.hpp"

namespace relu_lyapunov {

namespace detail {

/// Per-component compensated accumulation of point contributions.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

  void reset() {
    std::fill(sum_.begin(), sum_.end(), 0.0);
    std::fill(comp_.begin(), comp_.end(), 0.0);
  }

  void add(std::size_t i, double x) noexcept {
    const double s = sum_[i];
    const double t = s + x;
    comp_[i] += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    sum_[i] = t;
  }

  void write(std::span<double> out) const noexcept {
    for (std::size_t i = 0; i < sum_.size(); ++i) out[i] = sum_[i] + comp_[i];
  }

 private:
  std::vector<double> sum_;
  std::vector<double> comp_;
};

/// Scratch buffers for the reverse sweep.
struct BackwardWorkspace {
  ForwardTrace trace;
  std::vector<double> delta;
  std::vector<double> delta_prev;
  std::vector<double> target;
};

/// Adds `weight` times the gradient of ||N(x) - y||^2 at one point. The forward
/// pass must already be in `ws.trace`; `ws.target` holds y.
inline void backward_point(const Architecture& arch, std::span<const double> theta,
                           std::span<const double> x, double weight, BackwardWorkspace& ws,
                           GradientAccumulator& acc) {
  const std::size_t depth = arch.depth();
  const auto out = ws.trace.output();
  ws.delta.resize(arch.max_width());
  ws.delta_prev.resize(arch.max_width());
  for (std::size_t i = 0; i < out.size(); ++i) ws.delta[i] = 2.0 * weight * (out[i] - ws.target[i]);
  for (std::size_t k = depth; k >= 1; --k) {
    const std::size_t rows = arch.width(k);
    const std::size_t cols = arch.width(k - 1);
    const std::span<const double> in = k == 1 ? x : std::span<const double>(ws.trace.activations[k - 2]);
    const std::size_t wbase = arch.weight_base(k);
    const std::size_t bbase = arch.bias_base(k);
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = ws.delta[i];
      acc.add(bbase + i, d);
      for (std::size_t j = 0; j < cols; ++j) acc.add(wbase + i * cols + j, d * in[j]);
    }
    if (k == 1) break;
    const std::vector<double>& slope = ws.trace.slopes[k - 2];
    const double* w = theta.data() + wbase;
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += w[i * cols + j] * ws.delta[i];
      ws.delta_prev[j] = slope[j] * s;
    }
    std::swap(ws.delta, ws.delta_prev);
  }
}

inline GradientVector measure_gradient(const Architecture& arch, const ParamVector& theta,
                                       const DiscreteMeasure& mu, const TargetSpec& target,
                                       const Smoothing* smoothing) {
  require_params(arch, theta.span());
  require_target(arch, target.output_dim());
  if (mu.size() > 0 && mu.dimension() != arch.input_dim()) {
    throw DimensionError("measure dimension does not match network input");
  }
  BackwardWorkspace ws;
  ws.target.resize(arch.output_dim());
  GradientAccumulator acc(arch.param_count());
  for (std::size_t p = 0; p < mu.size(); ++p) {
    forward_into(arch, theta.span(), mu.point(p), smoothing, ws.trace);
    target.evaluate(mu.point(p), ws.target);
    backward_point(arch, theta.span(), mu.point(p), mu.weight(p), ws, acc);
  }
  GradientVector g(arch.param_count());
  acc.write(g.span());
  return g;
}

}  // namespace detail

/// Generalized gradient of the exact risk: reverse sweep with the gate 1_{(0,inf)}
/// at every hidden neuron.
inline GradientVector generalized_gradient(const Architecture& arch, const ParamVector& theta,
                                           const DiscreteMeasure& mu, const TargetSpec& target) {
  return detail::measure_gradient(arch, theta, mu, target, nullptr);
}

/// Exact gradient of the smoothed risk at sharpness r.
inline GradientVector smooth_gradient(const Architecture& arch, const ParamVector& theta,
                                      const DiscreteMeasure& mu, const TargetSpec& target, double r,
                                      const ClampConfig& cfg = {}) {
  if (!(r >= 1.0)) throw std::domain_error("smoothing parameter r must be >= 1");
  cfg.validate();
  const Smoothing smoothing{r, cfg};
  return detail::measure_gradient(arch, theta, mu, target, &smoothing);
}

/// Reusable state for repeated minibatch gradients of the same architecture.
class MinibatchGradient {
 public:
  explicit MinibatchGradient(const Architecture& arch)
      : arch_(arch), acc_(arch.param_count()) {
    ws_.target.resize(arch.output_dim());
  }

  /// Writes the generalized gradient for the uniform measure on `batch` and
  /// returns the batch's empirical risk.
  double compute(std::span<const double> theta, const Batch& batch, std::span<const double> xi,
                 std::span<double> grad) {
    const std::size_t m = batch.size();
    const double w = 1.0 / static_cast<double>(m);
    std::copy(xi.begin(), xi.end(), ws_.target.begin());
    acc_.reset();
    CompensatedSum risk;
    for (std::size_t p = 0; p < m; ++p) {
      const auto x = batch.point(p);
      forward_into(arch_, theta, x, nullptr, ws_.trace);
      risk.add(detail::squared_residual(ws_.trace.output(), xi));
      detail::backward_point(arch_, theta, x, w, ws_, acc_);
    }
    acc_.write(grad);
    return risk.value() / static_cast<double>(m);
  }

 private:
  Architecture arch_;
  detail::BackwardWorkspace ws_;
  detail::GradientAccumulator acc_;
};

/// Generalized gradient of the empirical risk of a minibatch against constant xi.
inline GradientVector minibatch_gradient(const Architecture& arch, const ParamVector& theta,
                                         const Batch& batch, std::span<const double> xi) {
  require_params(arch, theta.span());
  require_target(arch, xi.size());
  if (batch.size() == 0) throw std::domain_error("minibatch gradient needs a non-empty batch");
  if (batch.dim != arch.input_dim()) throw DimensionError("batch dimension does not match input");
  MinibatchGradient engine(arch);
  GradientVector g(arch.param_count());
  engine.compute(theta.span(), batch, xi, g.span());
  return g;
}

/// Literal evaluation of the neuron-path sums for the generalized gradient.
/// Cost grows like the product of the layer widths; refuses above `max_paths`.
inline GradientVector gradient_pathsum_oracle(const Architecture& arch, const ParamVector& theta,
                                              const DiscreteMeasure& mu, const TargetSpec& target,
                                              std::size_t max_paths = 10000) {
  require_params(arch, theta.span());
  require_target(arch, target.output_dim());
  if (mu.size() > 0 && mu.dimension() != arch.input_dim()) {
    throw DimensionError("measure dimension does not match network input");
  }
  const std::size_t depth = arch.depth();
  std::size_t paths = 1;
  for (std::size_t k = 1; k <= depth; ++k) {
    paths *= arch.width(k);
    if (paths > max_paths) {
      throw ResourceError("path-sum oracle would enumerate more than " +
                          std::to_string(max_paths) + " neuron paths");
    }
  }

  auto w = [&](std::size_t n, std::size_t i, std::size_t j) {
    return theta.at1(arch.weight_index(n, i, j));
  };

  GradientVector grad(arch.param_count());
  std::vector<double> fx(arch.output_dim());
  for (std::size_t p = 0; p < mu.size(); ++p) {
    const auto& x = mu.point(p);
    const ForwardTrace tr = forward_exact(arch, theta, x);
    target.evaluate(x, fx);
    auto gate = [&](std::size_t layer, std::size_t v) -> double {
      return tr.pattern[layer - 1][v - 1] ? 1.0 : 0.0;
    };

    for (std::size_t k = 1; k <= depth; ++k) {
      // Multi-index (v_k, ..., v_L), each v_n in 1..l_n.
      std::vector<std::size_t> v(depth + 1, 1);
      for (;;) {
        double chain = 1.0;
        for (std::size_t n = k + 1; n <= depth; ++n) {
          chain *= w(n, v[n], v[n - 1]) * gate(n - 1, v[n - 1]);
        }
        const double residual = tr.preactivations[depth - 1][v[depth] - 1] - fx[v[depth] - 1];
        const double common = 2.0 * residual * chain * mu.weight(p);
        for (std::size_t i = 1; i <= arch.width(k); ++i) {
          const double selector = v[k] == i ? 1.0 : 0.0;
          for (std::size_t j = 1; j <= arch.width(k - 1); ++j) {
            const double factor = k > 1 ? relu(tr.preactivations[k - 2][j - 1]) : x[j - 1];
            grad.at1(arch.weight_index(k, i, j)) += factor * selector * common;
          }
          grad.at1(arch.bias_index(k, i)) += selector * common;
        }
        // Advance the odometer over layers k..L.
        std::size_t n = k;
        while (n <= depth && v[n] == arch.width(n)) {
          v[n] = 1;
          ++n;
        }
        if (n > depth) break;
        ++v[n];
      }
    }
  }
  return grad;
}

/// Right-hand side of the polynomial growth estimate
/// ||G||^2 <= 4 L m a^2 prod_p (l_p + 1) (||theta||^2 + 1)^{L-1} risk.
inline double gradient_growth_bound(const Architecture& arch, const ParamVector& theta,
                                    double mass, double input_bound_a, double risk_value) {
  const auto depth = static_cast<double>(arch.depth());
  double widths = 1.0;
  for (std::size_t wk : arch.widths()) widths *= static_cast<double>(wk) + 1.0;
  return 4.0 * depth * mass * input_bound_a * input_bound_a * widths *
         std::pow(squared_norm(theta.span()) + 1.0, depth - 1.0) * risk_value;
}

/// Q_{k,i}: squared norm of the incoming weights and bias of neuron i in layer k.
inline double neuron_energy(const Architecture& arch, const ParamVector& theta, std::size_t k,
                            std::size_t i) {
  double q = theta.at1(arch.bias_index(k, i)) * theta.at1(arch.bias_index(k, i));
  for (std::size_t j = 1; j <= arch.width(k - 1); ++j) {
    const double wij = theta.at1(arch.weight_index(k, i, j));
    q += wij * wij;
  }
  return q;
}

/// 1 + sum_i Q_{k,i}, with the value 1 for k = 0.
inline double layer_energy(const Architecture& arch, const ParamVector& theta, std::size_t k) {
  if (k == 0) return 1.0;
  double q = 1.0;
  for (std::size_t i = 1; i <= arch.width(k); ++i) q += neuron_energy(arch, theta, k, i);
  return q;
}

/// Bound on |N_{inf,i}^k(x)|^2 valid for every x in the input cube.
inline double preactivation_bound(const Architecture& arch, const ParamVector& theta,
                                  std::size_t k, std::size_t i, double input_bound_a) {
  double prod = 1.0;
  for (std::size_t p = 0; p < k; ++p) {
    prod *= (static_cast<double>(arch.width(p)) + 1.0) * layer_energy(arch, theta, p);
  }
  return input_bound_a * input_bound_a * neuron_energy(arch, theta, k, i) * prod;
}

}  // namespace relu_lyapunov
