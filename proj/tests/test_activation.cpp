#include <gtest/gtest.h>

#include <cmath>

#include "relu_lyapunov/activation.hpp"
#include "relu_lyapunov/numerics.hpp"

using namespace relu_lyapunov;

namespace {
const ClampConfig kDefault;
}

TEST(SmoothRelu, HandEvaluatedPoints) {
  // r = 1: zero up to A = 1/2, identity from B = 1, x * smoothstep(2x - 1) in between.
  EXPECT_EQ(smooth_relu(kDefault, 1.0, -3.0), 0.0);
  EXPECT_EQ(smooth_relu(kDefault, 1.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(smooth_relu(kDefault, 1.0, 0.75), 0.75 * 0.5);
  EXPECT_EQ(smooth_relu(kDefault, 1.0, 1.0), 1.0);
  EXPECT_EQ(smooth_relu(kDefault, 1.0, 2.5), 2.5);
  // r = 4 squeezes the band to [1/8, 1/4].
  EXPECT_EQ(smooth_relu(kDefault, 4.0, 0.125), 0.0);
  EXPECT_EQ(smooth_relu(kDefault, 4.0, 0.25), 0.25);
}

TEST(SmoothRelu, DerivativeByHand) {
  // At x = 3/4, r = 1: t = 1/2, eta = 1/2, eta' = 3/2, so R' = 1/2 + (3/4)(2)(3/2) = 11/4.
  EXPECT_DOUBLE_EQ(smooth_relu_derivative(kDefault, 1.0, 0.75), 2.75);
  EXPECT_EQ(smooth_relu_derivative(kDefault, 1.0, 0.4), 0.0);
  EXPECT_EQ(smooth_relu_derivative(kDefault, 1.0, 1.5), 1.0);
  EXPECT_EQ(smooth_relu_derivative(kDefault, 1.0, -1.0), 0.0);
}

TEST(SmoothRelu, RejectsSharpnessBelowOne) {
  EXPECT_THROW(smooth_relu(kDefault, 0.5, 1.0), std::domain_error);
  EXPECT_THROW(smooth_relu_derivative(kDefault, std::nan(""), 1.0), std::domain_error);
}

TEST(SmoothRelu, ClampConfigValidation) {
  EXPECT_THROW((ClampConfig{0.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((ClampConfig{1.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((ClampConfig{0.2, 3.0}).validate());
}

TEST(SmoothRelu, UniformApproximationWithinBOverR) {
  for (const ClampConfig cfg : {kDefault, ClampConfig{0.2, 3.0}}) {
    for (int e = 0; e <= 20; ++e) {
      const double r = std::ldexp(1.0, e);
      for (int i = 0; i <= 40000; ++i) {
        const double x = -10.0 + 20.0 * i / 40000.0;
        ASSERT_LE(std::abs(smooth_relu(cfg, r, x) - relu(x)), cfg.upper / r) << "r=" << r << " x=" << x;
      }
      // The gap is largest inside the band, where it is at most x <= B/r.
      for (int i = 0; i <= 1000; ++i) {
        const double x = (cfg.lower + (cfg.upper - cfg.lower) * i / 1000.0) / r;
        ASSERT_LE(std::abs(smooth_relu(cfg, r, x) - relu(x)), cfg.upper / r);
      }
    }
  }
}

TEST(SmoothRelu, DerivativeReachesGateOnceBandPassed) {
  for (double x : {-5.0, -1e-3, -1e-9, 2e-8, 1e-3, 0.3, 7.0}) {
    for (int k = 0; k <= 8; ++k) {
      const double r = std::pow(10.0, k);
      if (x < 0.0 || kDefault.upper / r < x) {
        EXPECT_EQ(smooth_relu_derivative(kDefault, r, x), relu_left_derivative(x)) << x << " " << r;
        EXPECT_EQ(smooth_relu(kDefault, r, x), relu(x));
      }
    }
  }
}

TEST(SmoothRelu, DerivativeMatchesCentralDifferences) {
  CounterRng rng(41);
  for (int t = 0; t < 1000; ++t) {
    const double r = std::exp(std::log(1e4) * rng.uniform01());
    const double x = (-1.0 + 3.0 * rng.uniform01()) * 1.2 / r;
    const double h = 1e-6 / r;
    const double fd = (smooth_relu(kDefault, r, x + h) - smooth_relu(kDefault, r, x - h)) / (2.0 * h);
    const double an = smooth_relu_derivative(kDefault, r, x);
    ASSERT_NEAR(fd, an, std::max(1e-6 * std::max(std::abs(an), std::abs(fd)), 1e-9)) << r << " " << x;
  }
}

TEST(SmoothRelu, DerivativeBound) {
  EXPECT_DOUBLE_EQ(smooth_relu_derivative_bound(kDefault), 4.0);
  double sup = 0.0;
  for (int e = 0; e <= 20; e += 4) {
    const double r = std::ldexp(1.0, e);
    for (int i = -1000; i <= 3000; ++i) {
      sup = std::max(sup, std::abs(smooth_relu_derivative(kDefault, r, i / (1000.0 * r))));
    }
  }
  EXPECT_LE(sup, 4.0);
  EXPECT_GT(sup, 2.9);  // the derivative overshoots 1 inside the band
}

TEST(SmoothRelu, MonotoneInX) {
  for (double r : {1.0, 3.0, 100.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 5000; ++i) {
      const double y = smooth_relu(kDefault, r, -1.0 + 3.0 * i / (5000.0 * r));
      ASSERT_GE(y, prev);
      prev = y;
    }
  }
}

TEST(Smoothstep, EndpointsAndSymmetry) {
  EXPECT_EQ(smoothstep(-1.0), 0.0);
  EXPECT_EQ(smoothstep(0.0), 0.0);
  EXPECT_EQ(smoothstep(1.0), 1.0);
  EXPECT_EQ(smoothstep(2.0), 1.0);
  for (double t : {0.1, 0.25, 0.4}) EXPECT_NEAR(smoothstep(t) + smoothstep(1.0 - t), 1.0, 1e-15);
  EXPECT_EQ(smoothstep_derivative(0.0), 0.0);
  EXPECT_EQ(smoothstep_derivative(1.0), 0.0);
  EXPECT_DOUBLE_EQ(smoothstep_derivative(0.5), 1.5);
}

TEST(Relu, KinkConvention) {
  EXPECT_EQ(relu(0.0), 0.0);
  EXPECT_EQ(relu_left_derivative(0.0), 0.0);
  EXPECT_EQ(relu_left_derivative(1e-300), 1.0);
  EXPECT_EQ(relu(-2.0), 0.0);
  EXPECT_EQ(relu(2.0), 2.0);
}
