#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "relu_lyapunov/network.hpp"
#include "relu_lyapunov/numerics.hpp"

namespace relu_lyapunov {

/// max{|a|, |b|, 1}; the input-size constant entering every growth estimate.
inline double input_bound(double a, double b) noexcept {
  return std::max({std::abs(a), std::abs(b), 1.0});
}

/// Finite weighted point masses on the cube [a, b]^{l_0}.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<std::vector<double>> points, std::vector<double> weights, double a,
                  double b)
      : points_(std::move(points)), weights_(std::move(weights)), a_(a), b_(b) {
    if (!(b_ > a_)) throw std::invalid_argument("measure bounds need a < b");
    if (points_.size() != weights_.size()) {
      throw DimensionError("measure has " + std::to_string(points_.size()) + " points but " +
                           std::to_string(weights_.size()) + " weights");
    }
    if (!points_.empty()) dim_ = points_.front().size();
    CompensatedSum mass;
    for (std::size_t p = 0; p < points_.size(); ++p) {
      if (points_[p].size() != dim_) throw DimensionError("measure points differ in dimension");
      for (double c : points_[p]) {
        if (!(c >= a_ && c <= b_)) {
          throw std::domain_error("measure point coordinate " + std::to_string(c) +
                                  " outside [a, b]");
        }
      }
      if (!(weights_[p] >= 0.0) || !std::isfinite(weights_[p])) {
        throw std::domain_error("measure weights must be finite and non-negative");
      }
      mass.add(weights_[p]);
    }
    mass_ = mass.value();
  }

  /// n equispaced points a, ..., b on a one-dimensional domain, each of weight total_mass / n.
  static DiscreteMeasure uniform_grid(std::size_t n, double a, double b, double total_mass = 1.0) {
    if (n == 0) throw std::invalid_argument("grid needs at least one point");
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double x = n == 1 ? a : a + (b - a) * static_cast<double>(p) / static_cast<double>(n - 1);
      pts.push_back({x});
    }
    return DiscreteMeasure(std::move(pts), std::vector<double>(n, total_mass / static_cast<double>(n)), a, b);
  }

  /// Reads "x_1 ... x_{l0} weight" lines. Blank lines and '#' comments are skipped.
  static DiscreteMeasure load(const std::string& path, double a, double b) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open measure file " + path);
    std::vector<std::vector<double>> pts;
    std::vector<double> weights;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::istringstream fields(line);
      std::vector<double> values;
      double v = 0.0;
      while (fields >> v) values.push_back(v);
      if (!fields.eof()) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": not a number");
      }
      if (values.empty()) continue;
      if (values.size() < 2) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": need coordinates followed by a weight");
      }
      weights.push_back(values.back());
      values.pop_back();
      pts.push_back(std::move(values));
    }
    return DiscreteMeasure(std::move(pts), std::move(weights), a, b);
  }

  DiscreteMeasure scaled(double c) const {
    if (!(c >= 0.0)) throw std::domain_error("measure scale must be non-negative");
    std::vector<double> w = weights_;
    for (double& x : w) x *= c;
    return DiscreteMeasure(points_, std::move(w), a_, b_);
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dimension() const noexcept { return dim_; }
  const std::vector<double>& point(std::size_t p) const { return points_[p]; }
  const std::vector<std::vector<double>>& points() const noexcept { return points_; }
  double weight(std::size_t p) const { return weights_[p]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double mass() const noexcept { return mass_; }
  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  double bound() const noexcept { return input_bound(a_, b_); }

 private:
  std::vector<std::vector<double>> points_;
  std::vector<double> weights_;
  double a_;
  double b_;
  std::size_t dim_ = 0;
  double mass_ = 0.0;
};

/// Regression target: a constant vector xi, or a general function with its value at 0.
class TargetSpec {
 public:
  using Function = std::function<void(std::span<const double> x, std::span<double> out)>;

  static TargetSpec constant(std::vector<double> xi) {
    TargetSpec t;
    t.f0_ = std::move(xi);
    return t;
  }

  static TargetSpec function(Function f, std::vector<double> f_at_zero) {
    TargetSpec t;
    t.f_ = std::move(f);
    t.f0_ = std::move(f_at_zero);
    return t;
  }

  bool is_constant() const noexcept { return !f_; }
  std::size_t output_dim() const noexcept { return f0_.size(); }
  const std::vector<double>& value_at_zero() const noexcept { return f0_; }

  void evaluate(std::span<const double> x, std::span<double> out) const {
    if (f_) {
      f_(x, out);
    } else {
      std::copy(f0_.begin(), f0_.end(), out.begin());
    }
  }

 private:
  Function f_;
  std::vector<double> f0_;
};

/// A set of input points stored contiguously, point m at [m*dim, (m+1)*dim).
struct Batch {
  std::size_t dim = 0;
  std::vector<double> coords;

  std::size_t size() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t m) const { return {coords.data() + m * dim, dim}; }

  static Batch from_points(const std::vector<std::vector<double>>& pts) {
    Batch batch;
    if (pts.empty()) return batch;
    batch.dim = pts.front().size();
    for (const auto& p : pts) {
      if (p.size() != batch.dim) throw DimensionError("batch points differ in dimension");
      batch.coords.insert(batch.coords.end(), p.begin(), p.end());
    }
    return batch;
  }
};

/// I.i.d. uniform draws on [a, b]^dim from a counter-based stream.
class UniformSampler {
 public:
  UniformSampler(double a, double b, std::size_t dim, std::uint64_t seed)
      : a_(a), b_(b), dim_(dim), rng_(seed) {
    if (!(b > a)) throw std::invalid_argument("sampler bounds need a < b");
    if (dim == 0) throw std::invalid_argument("sampler dimension must be positive");
  }

  void draw(std::span<double> out) {
    for (double& c : out) c = a_ + (b_ - a_) * rng_.uniform01();
  }

  void fill(Batch& batch, std::size_t count) {
    batch.dim = dim_;
    batch.coords.resize(count * dim_);
    draw(batch.coords);
  }

  /// An independent sampler over the same domain; deterministic in (seed, stream).
  UniformSampler split(std::uint64_t stream) const {
    return UniformSampler(a_, b_, dim_, derive_key(rng_.key(), stream));
  }

  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  std::size_t dimension() const noexcept { return dim_; }
  CounterRng& rng() noexcept { return rng_; }

 private:
  double a_;
  double b_;
  std::size_t dim_;
  CounterRng rng_;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

inline void require_target(const Architecture& arch, std::size_t out_dim) {
  if (out_dim != arch.output_dim()) {
    throw DimensionError("target has dimension " + std::to_string(out_dim) + ", network output " +
                         std::to_string(arch.output_dim()));
  }
}

namespace detail {

inline double squared_residual(std::span<const double> out, std::span<const double> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out[i] - target[i];
    s += d * d;
  }
  return s;
}

inline double risk_impl(const Architecture& arch, const ParamVector& theta,
                        const DiscreteMeasure& mu, const TargetSpec& target,
                        const Smoothing* smoothing) {
  require_params(arch, theta.span());
  require_target(arch, target.output_dim());
  if (mu.size() > 0 && mu.dimension() != arch.input_dim()) {
    throw DimensionError("measure dimension does not match network input");
  }
  ForwardTrace trace;
  std::vector<double> fx(arch.output_dim());
  CompensatedSum total;
  for (std::size_t p = 0; p < mu.size(); ++p) {
    forward_into(arch, theta.span(), mu.point(p), smoothing, trace);
    target.evaluate(mu.point(p), fx);
    total.add(mu.weight(p) * squared_residual(trace.output(), fx));
  }
  return total.value();
}

}  // namespace detail

/// Integral of ||N_inf(x) - f(x)||^2 against the discrete measure.
inline double risk_exact(const Architecture& arch, const ParamVector& theta,
                         const DiscreteMeasure& mu, const TargetSpec& target) {
  return detail::risk_impl(arch, theta, mu, target, nullptr);
}

inline double risk_smooth(const Architecture& arch, const ParamVector& theta,
                          const DiscreteMeasure& mu, const TargetSpec& target, double r,
                          const ClampConfig& cfg = {}) {
  if (!(r >= 1.0)) throw std::domain_error("smoothing parameter r must be >= 1");
  cfg.validate();
  const Smoothing smoothing{r, cfg};
  return detail::risk_impl(arch, theta, mu, target, &smoothing);
}

/// Mean squared residual of the exact network on a batch against a constant xi.
inline double empirical_risk(const Architecture& arch, const ParamVector& theta,
                             const Batch& batch, std::span<const double> xi) {
  require_params(arch, theta.span());
  require_target(arch, xi.size());
  if (batch.size() == 0) throw std::domain_error("empirical risk needs a non-empty batch");
  if (batch.dim != arch.input_dim()) throw DimensionError("batch dimension does not match input");
  ForwardTrace trace;
  CompensatedSum total;
  for (std::size_t m = 0; m < batch.size(); ++m) {
    forward_into(arch, theta.span(), batch.point(m), nullptr, trace);
    total.add(detail::squared_residual(trace.output(), xi));
  }
  return total.value() / static_cast<double>(batch.size());
}

namespace detail {

/// Welford accumulator for mean and unbiased variance.
class RunningMoments {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  McEstimate estimate() const noexcept {
    return {mean_, n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace detail

/// Sample mean and standard error of the squared residual over a fixed sample.
inline McEstimate sample_risk(const Architecture& arch, const ParamVector& theta,
                              const Batch& sample, std::span<const double> xi) {
  require_params(arch, theta.span());
  require_target(arch, xi.size());
  if (sample.size() < 2) throw std::domain_error("risk estimate needs at least two samples");
  if (sample.dim != arch.input_dim()) throw DimensionError("sample dimension does not match input");
  ForwardTrace trace;
  detail::RunningMoments moments;
  for (std::size_t m = 0; m < sample.size(); ++m) {
    forward_into(arch, theta.span(), sample.point(m), nullptr, trace);
    moments.add(detail::squared_residual(trace.output(), xi));
  }
  return moments.estimate();
}

/// Monte Carlo estimate of E||N_inf(X) - xi||^2 for X uniform on the sampler's cube.
inline McEstimate population_risk_mc(const Architecture& arch, const ParamVector& theta,
                                     UniformSampler& sampler, std::span<const double> xi,
                                     std::size_t n_samples) {
  require_params(arch, theta.span());
  require_target(arch, xi.size());
  if (n_samples < 2) throw std::domain_error("Monte Carlo risk needs at least two samples");
  if (sampler.dimension() != arch.input_dim()) {
    throw DimensionError("sampler dimension does not match input");
  }
  ForwardTrace trace;
  std::vector<double> x(arch.input_dim());
  detail::RunningMoments moments;
  for (std::size_t m = 0; m < n_samples; ++m) {
    sampler.draw(x);
    forward_into(arch, theta.span(), x, nullptr, trace);
    moments.add(detail::squared_residual(trace.output(), xi));
  }
  return moments.estimate();
}

}  // namespace relu_lyapunov
