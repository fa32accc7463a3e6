#include <gtest/gtest.h>

#include <set>

#include "relu_lyapunov/arch.hpp"

using namespace relu_lyapunov;

namespace {

/// sum_{k=1}^{L} l_k (l_{k-1} + 1), written out independently of the class.
std::size_t closed_form_count(const std::vector<std::size_t>& w) {
  std::size_t d = 0;
  for (std::size_t k = 1; k < w.size(); ++k) d += w[k] * w[k - 1] + w[k];
  return d;
}

/// Every width vector with entries in 1..max_width and depth 1..max_depth.
std::vector<std::vector<std::size_t>> all_architectures(std::size_t max_width, std::size_t max_depth) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t depth = 1; depth <= max_depth; ++depth) {
    std::vector<std::size_t> w(depth + 1, 1);
    for (;;) {
      out.push_back(w);
      std::size_t p = 0;
      while (p < w.size() && w[p] == max_width) w[p++] = 1;
      if (p == w.size()) break;
      ++w[p];
    }
  }
  return out;
}

}  // namespace

TEST(Architecture, PresetParameterCounts) {
  EXPECT_EQ(Architecture({1, 7, 1}).param_count(), 22u);
  EXPECT_EQ(Architecture({1, 3, 7, 1}).param_count(), 42u);
}

TEST(Architecture, ShallowLayoutByHand) {
  const Architecture arch({1, 7, 1});
  for (std::size_t i = 1; i <= 7; ++i) {
    EXPECT_EQ(arch.weight_index(1, i, 1), i);
    EXPECT_EQ(arch.bias_index(1, i), 7 + i);
    EXPECT_EQ(arch.weight_index(2, 1, i), 14 + i);
  }
  EXPECT_EQ(arch.bias_index(2, 1), 22u);
  EXPECT_EQ(arch.offset(0), 0u);
  EXPECT_EQ(arch.offset(1), 14u);
  EXPECT_EQ(arch.offset(2), 22u);
}

TEST(Architecture, RowMajorWeightsWithinLayer) {
  const Architecture arch({2, 3, 2});
  // Layer 1 holds w_{1,1}, w_{1,2}, w_{2,1}, ... then the three biases.
  EXPECT_EQ(arch.weight_index(1, 1, 2), 2u);
  EXPECT_EQ(arch.weight_index(1, 2, 1), 3u);
  EXPECT_EQ(arch.bias_index(1, 3), 9u);
  EXPECT_EQ(arch.weight_index(2, 1, 1), 10u);
  EXPECT_EQ(arch.weight_index(2, 2, 3), 15u);
  EXPECT_EQ(arch.bias_index(2, 2), 17u);
}

TEST(Architecture, IndicesEnumerateEveryParameterOnce) {
  for (const auto& w : all_architectures(4, 4)) {
    const Architecture arch(w);
    ASSERT_EQ(arch.param_count(), closed_form_count(w));
    std::vector<int> hits(arch.param_count() + 1, 0);
    for (std::size_t k = 1; k <= arch.depth(); ++k) {
      for (std::size_t i = 1; i <= arch.width(k); ++i) {
        for (std::size_t j = 1; j <= arch.width(k - 1); ++j) ++hits.at(arch.weight_index(k, i, j));
        ++hits.at(arch.bias_index(k, i));
      }
    }
    EXPECT_EQ(hits[0], 0);
    for (std::size_t p = 1; p <= arch.param_count(); ++p) ASSERT_EQ(hits[p], 1) << arch.to_string();
  }
}

TEST(Architecture, ZeroBasedBasesAgreeWithOneBasedIndices) {
  const Architecture arch({3, 2, 4, 1});
  for (std::size_t k = 1; k <= arch.depth(); ++k) {
    EXPECT_EQ(arch.weight_base(k) + 1, arch.weight_index(k, 1, 1));
    EXPECT_EQ(arch.bias_base(k) + 1, arch.bias_index(k, 1));
  }
}

TEST(Architecture, OutOfRangeIndicesThrow) {
  const Architecture arch({1, 7, 1});
  EXPECT_THROW(arch.weight_index(0, 1, 1), std::out_of_range);
  EXPECT_THROW(arch.weight_index(3, 1, 1), std::out_of_range);
  EXPECT_THROW(arch.weight_index(1, 8, 1), std::out_of_range);
  EXPECT_THROW(arch.weight_index(1, 1, 2), std::out_of_range);
  EXPECT_THROW(arch.bias_index(2, 2), std::out_of_range);
  EXPECT_THROW(arch.bias_index(1, 0), std::out_of_range);
}

TEST(Architecture, RejectsDegenerateWidths) {
  EXPECT_THROW(Architecture({3}), std::invalid_argument);
  EXPECT_THROW(Architecture({1, 0, 1}), std::invalid_argument);
}

TEST(Architecture, ParseAndPrint) {
  const Architecture arch = Architecture::parse("1, 3,7 ,1");
  EXPECT_EQ(arch, Architecture({1, 3, 7, 1}));
  EXPECT_EQ(arch.to_string(), "1,3,7,1");
  EXPECT_EQ(arch.depth(), 3u);
  EXPECT_EQ(arch.max_width(), 7u);
  for (const char* bad : {"", "1", "1,,2", "1,x", "1,0", "1,-2", "2,3,"}) {
    EXPECT_THROW(Architecture::parse(bad), std::invalid_argument) << bad;
  }
}

TEST(Architecture, DepthOneCount) {
  // A single affine map R^3 -> R^2: 6 weights and 2 biases.
  EXPECT_EQ(Architecture({3, 2}).param_count(), 8u);
}

TEST(LayerBlocks, ExtractPackRoundTrip) {
  const Architecture arch({2, 3, 2});
  ParamVector theta(arch.param_count());
  for (std::size_t p = 1; p <= theta.size(); ++p) theta.at1(p) = static_cast<double>(p);
  const LayerBlock l2 = extract_layer(arch, theta, 2);
  EXPECT_EQ(l2.weights.rows, 2u);
  EXPECT_EQ(l2.weights.cols, 3u);
  EXPECT_EQ(l2.weights(1, 2), 15.0);
  EXPECT_EQ(l2.biases, (std::vector<double>{16.0, 17.0}));

  ParamVector zero(arch.param_count());
  const ParamVector rebuilt = pack_layer(arch, pack_layer(arch, zero, 1, extract_layer(arch, theta, 1)), 2, l2);
  EXPECT_EQ(rebuilt, theta);
}

TEST(LayerBlocks, ShapeErrors) {
  const Architecture arch({2, 3, 2});
  const ParamVector theta(arch.param_count());
  EXPECT_THROW(extract_layer(arch, ParamVector(5), 1), DimensionError);
  EXPECT_THROW(extract_layer(arch, theta, 3), std::out_of_range);
  EXPECT_THROW(pack_layer(arch, theta, 1, DenseMatrix(3, 3), std::vector<double>(3)), DimensionError);
  EXPECT_THROW(pack_layer(arch, theta, 1, DenseMatrix(3, 2), std::vector<double>(2)), DimensionError);
}

TEST(FlatVector, OneBasedAccessIsChecked) {
  ParamVector v(3);
  v.at1(1) = 4.0;
  EXPECT_EQ(v[0], 4.0);
  EXPECT_THROW(v.at1(0), std::out_of_range);
  EXPECT_THROW(v.at1(4), std::out_of_range);
}
