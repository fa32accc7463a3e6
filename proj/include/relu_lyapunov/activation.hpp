#pragma once

#include <stdexcept>

namespace relu_lyapunov {

/// Transition band of the smoothed rectifier: R_r vanishes below A/r and is
/// the identity above B/r.
struct ClampConfig {
  double lower = 0.5;  // A
  double upper = 1.0;  // B

  void validate() const {
    if (!(lower > 0.0) || !(upper > lower)) {
      throw std::invalid_argument("clamp config requires 0 < A < B");
    }
  }
};

inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }

/// Indicator of (0, inf); the value at the kink is 0.
inline double relu_left_derivative(double x) noexcept { return x > 0.0 ? 1.0 : 0.0; }

/// Clamped cubic smoothstep: 0 on (-inf, 0], 3t^2 - 2t^3 on (0, 1), 1 on [1, inf).
inline double smoothstep(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

inline double smoothstep_derivative(double t) noexcept {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 6.0 * t * (1.0 - t);
}

namespace detail {
inline void check_sharpness(double r) {
  if (!(r >= 1.0)) throw std::domain_error("smoothing parameter r must be >= 1");
}
}  // namespace detail

/// R_r(x) = max{x, 0} * smoothstep((r x - A) / (B - A)).
inline double smooth_relu(const ClampConfig& cfg, double r, double x) {
  detail::check_sharpness(r);
  if (x <= 0.0) return 0.0;
  const double t = (r * x - cfg.lower) / (cfg.upper - cfg.lower);
  return x * smoothstep(t);
}

inline double smooth_relu_derivative(const ClampConfig& cfg, double r, double x) {
  detail::check_sharpness(r);
  if (x <= 0.0) return 0.0;
  const double width = cfg.upper - cfg.lower;
  const double t = (r * x - cfg.lower) / width;
  return smoothstep(t) + x * (r / width) * smoothstep_derivative(t);
}

/// Upper bound for |R_r'| over all r >= 1 and x: 1 + B/(B-A) * sup|smoothstep'|.
inline double smooth_relu_derivative_bound(const ClampConfig& cfg) noexcept {
  return 1.0 + cfg.upper / (cfg.upper - cfg.lower) * 1.5;
}

}  // namespace relu_lyapunov
