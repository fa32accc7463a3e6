#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "relu_lyapunov/activation.hpp"
#include "relu_lyapunov/arch.hpp"

namespace relu_lyapunov {

/// Selects the smoothed realization: after hidden layer k the activation is
/// R_{r^{1/k}}.
struct Smoothing {
  double r = 1.0;
  ClampConfig cfg{};

  /// Sharpness used after layer k, computed as exp(ln r / k).
  double exponent(std::size_t k) const { return std::exp(std::log(r) / static_cast<double>(k)); }
};

/// Every intermediate of one forward evaluation. Index layer k at position k-1.
struct ForwardTrace {
  std::vector<std::vector<double>> preactivations;  // k = 1..L
  std::vector<std::vector<double>> activations;     // hidden k = 1..L-1
  std::vector<std::vector<double>> slopes;          // activation derivative, hidden layers
  std::vector<std::vector<bool>> pattern;           // exact mode only: preactivation > 0
  bool exact = true;

  std::span<const double> output() const { return preactivations.back(); }
};

namespace detail {

inline void shape_trace(const Architecture& arch, ForwardTrace& trace, bool exact) {
  const std::size_t depth = arch.depth();
  trace.exact = exact;
  trace.preactivations.resize(depth);
  trace.activations.resize(depth - 1);
  trace.slopes.resize(depth - 1);
  for (std::size_t k = 1; k <= depth; ++k) {
    trace.preactivations[k - 1].resize(arch.width(k));
    if (k < depth) {
      trace.activations[k - 1].resize(arch.width(k));
      trace.slopes[k - 1].resize(arch.width(k));
    }
  }
  if (exact) {
    trace.pattern.resize(depth - 1);
    for (std::size_t k = 1; k < depth; ++k) trace.pattern[k - 1].resize(arch.width(k));
  } else {
    trace.pattern.clear();
  }
}

}  // namespace detail

/// Evaluates the network into a caller-owned trace, reusing its storage.
/// No validation; callers check shapes once.
inline void forward_into(const Architecture& arch, std::span<const double> theta,
                         std::span<const double> x, const Smoothing* smoothing,
                         ForwardTrace& trace) {
  const std::size_t depth = arch.depth();
  const bool exact = smoothing == nullptr;
  if (trace.preactivations.size() != depth || trace.exact != exact ||
      (exact && trace.pattern.size() != depth - 1)) {
    detail::shape_trace(arch, trace, exact);
  }
  std::span<const double> in = x;
  for (std::size_t k = 1; k <= depth; ++k) {
    const std::size_t rows = arch.width(k);
    const std::size_t cols = arch.width(k - 1);
    const double* w = theta.data() + arch.weight_base(k);
    const double* b = theta.data() + arch.bias_base(k);
    std::vector<double>& z = trace.preactivations[k - 1];
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = b[i];
      const double* wi = w + i * cols;
      for (std::size_t j = 0; j < cols; ++j) acc += wi[j] * in[j];
      z[i] = acc;
    }
    if (k == depth) break;
    std::vector<double>& act = trace.activations[k - 1];
    std::vector<double>& slope = trace.slopes[k - 1];
    if (exact) {
      auto& pat = trace.pattern[k - 1];
      for (std::size_t i = 0; i < rows; ++i) {
        const bool on = z[i] > 0.0;
        pat[i] = on;
        act[i] = on ? z[i] : 0.0;
        slope[i] = on ? 1.0 : 0.0;
      }
    } else {
      const double s = smoothing->exponent(k);
      for (std::size_t i = 0; i < rows; ++i) {
        act[i] = smooth_relu(smoothing->cfg, s, z[i]);
        slope[i] = smooth_relu_derivative(smoothing->cfg, s, z[i]);
      }
    }
    in = act;
  }
}

inline void require_input(const Architecture& arch, std::span<const double> x) {
  if (x.size() != arch.input_dim()) {
    throw DimensionError("input has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(arch.input_dim()));
  }
}

/// Exact ReLU realization with activation pattern.
inline ForwardTrace forward_exact(const Architecture& arch, const ParamVector& theta,
                                  std::span<const double> x) {
  require_params(arch, theta.span());
  require_input(arch, x);
  ForwardTrace trace;
  forward_into(arch, theta.span(), x, nullptr, trace);
  return trace;
}

/// Smoothed realization with per-layer sharpness r^{1/k}.
inline ForwardTrace forward_smooth(const Architecture& arch, const ParamVector& theta,
                                   std::span<const double> x, double r, const ClampConfig& cfg = {}) {
  require_params(arch, theta.span());
  require_input(arch, x);
  if (!(r >= 1.0)) throw std::domain_error("smoothing parameter r must be >= 1");
  cfg.validate();
  const Smoothing smoothing{r, cfg};
  ForwardTrace trace;
  forward_into(arch, theta.span(), x, &smoothing, trace);
  return trace;
}

/// Constant C with r^{1/max(k-1,1)} |N_r^k(x) - N_inf^k(x)| <= C for all r >= 1 and
/// all x: upper * sum_{j=1}^{k} D^{j-1} S^j, where D bounds |R_r'| and S is the
/// l1 norm of theta. Zero for k = 1, where smoothing has not acted yet.
inline double smoothing_error_bound(const Architecture& arch, const ParamVector& theta,
                                    std::size_t k, const ClampConfig& cfg = {}) {
  require_params(arch, theta.span());
  if (k < 1 || k > arch.depth()) throw std::out_of_range("layer index out of range");
  cfg.validate();
  if (k == 1) return 0.0;
  double s = 0.0;
  for (double t : theta) s += std::abs(t);
  const double d = smooth_relu_derivative_bound(cfg);
  double total = 0.0;
  double term = s;  // D^{j-1} S^j
  for (std::size_t j = 1; j <= k; ++j) {
    total += term;
    term *= d * s;
  }
  return cfg.upper * total;
}

}  // namespace relu_lyapunov
