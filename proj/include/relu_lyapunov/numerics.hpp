#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace relu_lyapunov {

/// Neumaier's variant of Kahan summation. Order of `add` calls fixes the result.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double squared_norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double euclidean_norm(std::span<const double> v) noexcept {
  return std::sqrt(squared_norm(v));
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(std::span<const double> v) noexcept {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from a parent key and a counter.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t counter) noexcept {
  return mix64(parent ^ mix64(counter + 0x9E3779B97F4A7C15ULL));
}

/// Counter-based generator: the i-th output is a pure function of (key, i).
/// Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace relu_lyapunov
