#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "relu_lyapunov/verification.hpp"

using namespace relu_lyapunov;

TEST(Risk, AffineNetworkByHand) {
  // N(x) = w x + b on the two-point measure {0, 1} with weights 1/2, target 0.
  const Architecture arch({1, 1});
  const ParamVector theta(std::vector<double>{2.0, -0.5});
  const DiscreteMeasure mu({{0.0}, {1.0}}, {0.5, 0.5}, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(risk_exact(arch, theta, mu, TargetSpec::constant({0.0})), 0.5 * 0.25 + 0.5 * 2.25);
  EXPECT_DOUBLE_EQ(risk_exact(arch, theta, mu, TargetSpec::constant({1.5})), 0.5 * 4.0 + 0.5 * 0.0);
}

TEST(Risk, ScalesLinearlyWithMass) {
  InstanceGenerator gen(21);
  for (int t = 0; t < 50; ++t) {
    const Architecture arch = gen.architecture(3, 1, 3);
    const ParamVector theta = gen.params(arch, 1.0);
    const DiscreteMeasure mu = gen.measure(arch.input_dim(), 4, -1.0, 1.0);
    const TargetSpec target = gen.smooth_target(arch.input_dim(), arch.output_dim());
    const double base = risk_exact(arch, theta, mu, target);
    EXPECT_GE(base, 0.0);
    for (double c : {0.0, 0.5, 3.0}) {
      EXPECT_NEAR(risk_exact(arch, theta, mu.scaled(c), target), c * base, 1e-13 * (1.0 + c * base));
    }
  }
}

TEST(Risk, SmoothRiskConvergesToExact) {
  InstanceGenerator gen(22);
  for (int t = 0; t < 30; ++t) {
    const Architecture arch = gen.architecture(3, 2, 3);
    const ParamVector theta = gen.params(arch, 1.0);
    const DiscreteMeasure mu = gen.measure(arch.input_dim(), 4, -1.0, 1.0);
    const TargetSpec target = TargetSpec::constant(gen.vector(arch.output_dim(), 1.0));
    const double exact = risk_exact(arch, theta, mu, target);
    const double far = risk_smooth(arch, theta, mu, target, 1e12);
    EXPECT_NEAR(far, exact, 1e-4 * (1.0 + exact));
  }
}

TEST(Risk, EmptyAndZeroMassMeasures) {
  const Architecture arch({1, 2, 1});
  const ParamVector theta(std::vector<double>(arch.param_count(), 1.0));
  const DiscreteMeasure empty({}, {}, 0.0, 1.0);
  EXPECT_EQ(risk_exact(arch, theta, empty, TargetSpec::constant({0.0})), 0.0);
  EXPECT_EQ(empty.mass(), 0.0);
  const DiscreteMeasure zero({{0.3}}, {0.0}, 0.0, 1.0);
  EXPECT_EQ(risk_exact(arch, theta, zero, TargetSpec::constant({0.0})), 0.0);
}

TEST(Measure, Validation) {
  EXPECT_THROW(DiscreteMeasure({{2.0}}, {1.0}, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(DiscreteMeasure({{0.5}}, {-1.0}, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(DiscreteMeasure({{0.5}}, {1.0, 2.0}, 0.0, 1.0), DimensionError);
  EXPECT_THROW(DiscreteMeasure({{0.5}, {0.5, 0.5}}, {1.0, 1.0}, 0.0, 1.0), DimensionError);
  EXPECT_THROW(DiscreteMeasure({}, {}, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure::uniform_grid(3, 0.0, 1.0).scaled(-1.0), std::domain_error);
}

TEST(Measure, DimensionMismatchWithNetwork) {
  const Architecture arch({2, 1});
  const DiscreteMeasure mu({{0.5}}, {1.0}, 0.0, 1.0);
  EXPECT_THROW(risk_exact(arch, ParamVector(3), mu, TargetSpec::constant({0.0})), DimensionError);
  EXPECT_THROW(risk_exact(arch, ParamVector(3), DiscreteMeasure({{0.5, 0.5}}, {1.0}, 0.0, 1.0),
                          TargetSpec::constant({0.0, 1.0})),
               DimensionError);
}

TEST(Measure, UniformGrid) {
  const DiscreteMeasure mu = DiscreteMeasure::uniform_grid(101, 0.0, 1.0);
  EXPECT_EQ(mu.size(), 101u);
  EXPECT_EQ(mu.point(0)[0], 0.0);
  EXPECT_EQ(mu.point(100)[0], 1.0);
  EXPECT_DOUBLE_EQ(mu.point(50)[0], 0.5);
  EXPECT_NEAR(mu.mass(), 1.0, 1e-15);
  EXPECT_NEAR(DiscreteMeasure::uniform_grid(7, -2.0, 3.0, 4.0).mass(), 4.0, 1e-15);
  EXPECT_EQ(mu.bound(), 1.0);
  EXPECT_EQ(DiscreteMeasure::uniform_grid(3, -3.0, 2.0).bound(), 3.0);
}

TEST(Measure, LoadsTextFile) {
  const std::string path = ::testing::TempDir() + "measure.txt";
  {
    std::ofstream out(path);
    out << "# x1 x2 weight\n0.1 0.2 0.5\n\n0.9 0.0 0.25  # trailing comment\n";
  }
  const DiscreteMeasure mu = DiscreteMeasure::load(path, 0.0, 1.0);
  ASSERT_EQ(mu.size(), 2u);
  EXPECT_EQ(mu.dimension(), 2u);
  EXPECT_EQ(mu.point(1)[0], 0.9);
  EXPECT_EQ(mu.weight(1), 0.25);
  EXPECT_DOUBLE_EQ(mu.mass(), 0.75);
  {
    std::ofstream out(path);
    out << "0.1 abc\n";
  }
  EXPECT_THROW(DiscreteMeasure::load(path, 0.0, 1.0), std::runtime_error);
  EXPECT_THROW(DiscreteMeasure::load(path + ".missing", 0.0, 1.0), std::runtime_error);
  std::remove(path.c_str());
}

TEST(EmpiricalRisk, EqualsRiskOfUniformBatchMeasure) {
  InstanceGenerator gen(23);
  const Architecture arch({2, 3, 1});
  const ParamVector theta = gen.params(arch, 1.0);
  std::vector<std::vector<double>> pts;
  for (int m = 0; m < 8; ++m) pts.push_back({gen.uniform(0, 1), gen.uniform(0, 1)});
  const Batch batch = Batch::from_points(pts);
  const DiscreteMeasure mu(pts, std::vector<double>(8, 1.0 / 8.0), 0.0, 1.0);
  const std::vector<double> xi{0.7};
  EXPECT_NEAR(empirical_risk(arch, theta, batch, xi), risk_exact(arch, theta, mu, TargetSpec::constant(xi)),
              1e-14);
  EXPECT_THROW(empirical_risk(arch, theta, Batch{}, xi), std::domain_error);
}

TEST(EmpiricalRisk, SampleRiskStandardError) {
  // Depth-one network N(x) = x with xi = 0: squared residuals x^2 on the sample {0, 1, 2, 3}.
  const Architecture arch({1, 1});
  const ParamVector theta(std::vector<double>{1.0, 0.0});
  const Batch sample = Batch::from_points({{0.0}, {1.0}, {2.0}, {3.0}});
  const McEstimate est = sample_risk(arch, theta, sample, std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(est.estimate, 3.5);
  // values 0, 1, 4, 9: unbiased variance 49/3, standard error sqrt(49/12).
  EXPECT_NEAR(est.std_error, std::sqrt(49.0 / 12.0), 1e-14);
}

TEST(Sampler, DeterministicAndInRange) {
  UniformSampler s1(-2.0, 3.0, 2, 99);
  UniformSampler s2(-2.0, 3.0, 2, 99);
  UniformSampler other = s1.split(1);
  Batch b1, b2, b3;
  s1.fill(b1, 1000);
  s2.fill(b2, 1000);
  other.fill(b3, 1000);
  EXPECT_EQ(b1.coords, b2.coords);
  EXPECT_NE(b1.coords, b3.coords);
  for (double c : b1.coords) {
    EXPECT_GE(c, -2.0);
    EXPECT_LT(c, 3.0);
  }
  EXPECT_EQ(s1.split(5).split(2).rng().key(), UniformSampler(-2.0, 3.0, 2, 99).split(5).split(2).rng().key());
}

TEST(Sampler, MeanAndVarianceOfUniform) {
  UniformSampler s(0.0, 1.0, 1, 5);
  detail::RunningMoments m;
  std::vector<double> x(1);
  for (int i = 0; i < 200000; ++i) {
    s.draw(x);
    m.add(x[0]);
  }
  EXPECT_NEAR(m.mean(), 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 200000));
  EXPECT_NEAR(m.variance(), 1.0 / 12.0, 2e-3);
}

TEST(PopulationRisk, UnbiasedMinibatchRisk) {
  const Architecture arch({1, 7, 1});
  const std::vector<double> xi{1.0};
  const ParamVector theta = initial_params(arch, 3);
  UniformSampler batches(0.0, 1.0, 1, 17);
  detail::RunningMoments means;
  Batch batch;
  for (int m = 0; m < 2000; ++m) {
    batches.fill(batch, 50);
    means.add(empirical_risk(arch, theta, batch, xi));
  }
  UniformSampler pop(0.0, 1.0, 1, 18);
  const McEstimate mc = population_risk_mc(arch, theta, pop, xi, 200000);
  const McEstimate emp = means.estimate();
  const double se = std::hypot(emp.std_error, mc.std_error);
  EXPECT_LE(std::abs(emp.estimate - mc.estimate), 4.0 * se);
}

TEST(PopulationRisk, Errors) {
  const Architecture arch({1, 2, 1});
  UniformSampler s(0.0, 1.0, 1, 1);
  const ParamVector theta(arch.param_count());
  EXPECT_THROW(population_risk_mc(arch, theta, s, std::vector<double>{0.0}, 1), std::domain_error);
  EXPECT_THROW(population_risk_mc(arch, theta, s, std::vector<double>{0.0, 1.0}, 10), DimensionError);
  UniformSampler s2(0.0, 1.0, 2, 1);
  EXPECT_THROW(population_risk_mc(arch, theta, s2, std::vector<double>{0.0}, 10), DimensionError);
}

TEST(CompensatedSum, RecoversLostLowOrderBits) {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-16);
  s.add(-1.0);
  EXPECT_NEAR(s.value(), 1e-13, 1e-25);  // a naive sum returns 0
}
