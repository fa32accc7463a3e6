#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "relu_lyapunov/errors.hpp"

namespace relu_lyapunov {

/// Layer widths (l_0, ..., l_L) of a fully-connected network together with the
/// flat parameter layout. Layer k occupies l_k * l_{k-1} weights (row-major,
/// row i = output neuron) followed by l_k biases, starting right after layer k-1.
///
/// Public indices are 1-based: layers 1..L, rows 1..l_k, columns 1..l_{k-1},
/// parameter positions 1..param_count().
class Architecture {
 public:
  Architecture() = default;

  explicit Architecture(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) {
      throw std::invalid_argument("architecture needs at least an input and an output width");
    }
    for (std::size_t w : widths_) {
      if (w == 0) throw std::invalid_argument("layer widths must be positive");
    }
    offsets_.assign(widths_.size(), 0);
    for (std::size_t k = 1; k < widths_.size(); ++k) {
      offsets_[k] = offsets_[k - 1] + widths_[k] * (widths_[k - 1] + 1);
    }
  }

  /// Parses the comma-separated token list "l0,l1,...,lL".
  static Architecture parse(std::string_view text) {
    std::vector<std::size_t> widths;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t comma = std::min(text.find(',', pos), text.size());
      std::string_view tok = text.substr(pos, comma - pos);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
      std::size_t value = 0;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (tok.empty() || ec != std::errc{} || end != tok.data() + tok.size() || value == 0) {
        throw std::invalid_argument("invalid architecture token '" + std::string(tok) +
                                    "' in '" + std::string(text) + "'");
      }
      widths.push_back(value);
      pos = comma + 1;
    }
    return Architecture(std::move(widths));
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t k = 0; k < widths_.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(widths_[k]);
    }
    return out;
  }

  std::size_t depth() const noexcept { return widths_.empty() ? 0 : widths_.size() - 1; }
  std::size_t width(std::size_t k) const { return widths_.at(k); }
  std::size_t input_dim() const noexcept { return widths_.front(); }
  std::size_t output_dim() const noexcept { return widths_.back(); }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }

  /// Number of parameters preceding layer k+1, i.e. sum_{n<=k} l_n (l_{n-1} + 1).
  std::size_t offset(std::size_t k) const { return offsets_.at(k); }
  std::size_t param_count() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  /// 1-based position of weight (i, j) of layer k.
  std::size_t weight_index(std::size_t k, std::size_t i, std::size_t j) const {
    check_layer(k);
    if (i < 1 || i > widths_[k] || j < 1 || j > widths_[k - 1]) {
      throw std::out_of_range("weight index (" + std::to_string(k) + "," + std::to_string(i) +
                              "," + std::to_string(j) + ") out of range");
    }
    return (i - 1) * widths_[k - 1] + j + offsets_[k - 1];
  }

  /// 1-based position of bias i of layer k.
  std::size_t bias_index(std::size_t k, std::size_t i) const {
    check_layer(k);
    if (i < 1 || i > widths_[k]) {
      throw std::out_of_range("bias index (" + std::to_string(k) + "," + std::to_string(i) +
                              ") out of range");
    }
    return widths_[k] * widths_[k - 1] + i + offsets_[k - 1];
  }

  // Unchecked 0-based storage offsets for inner loops.
  std::size_t weight_base(std::size_t k) const noexcept { return offsets_[k - 1]; }
  std::size_t bias_base(std::size_t k) const noexcept {
    return offsets_[k - 1] + widths_[k] * widths_[k - 1];
  }

  std::size_t max_width() const noexcept {
    std::size_t m = 0;
    for (std::size_t w : widths_) m = w > m ? w : m;
    return m;
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;

 private:
  void check_layer(std::size_t k) const {
    if (k < 1 || k > depth()) {
      throw std::out_of_range("layer " + std::to_string(k) + " out of range 1.." +
                              std::to_string(depth()));
    }
  }

  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
};

/// A flat vector of reals laid out like the parameter vector. The tag keeps
/// parameters and gradients from being mixed up by accident.
template <class Tag>
class FlatVector {
 public:
  FlatVector() = default;
  explicit FlatVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit FlatVector(std::vector<double> values) : values_(std::move(values)) {}
  FlatVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// 1-based access matching the index formulas.
  double& at1(std::size_t i) { return values_.at(i - 1); }
  double at1(std::size_t i) const { return values_.at(i - 1); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const FlatVector&, const FlatVector&) = default;

 private:
  std::vector<double> values_;
};

struct ParamTag {};
struct GradientTag {};
using ParamVector = FlatVector<ParamTag>;
using GradientVector = FlatVector<GradientTag>;

/// Row-major dense matrix, 0-based element access.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

struct LayerBlock {
  DenseMatrix weights;          // l_k x l_{k-1}
  std::vector<double> biases;   // l_k

  friend bool operator==(const LayerBlock&, const LayerBlock&) = default;
};

inline void require_params(const Architecture& arch, std::span<const double> theta) {
  if (theta.size() != arch.param_count()) {
    throw DimensionError("parameter vector has length " + std::to_string(theta.size()) +
                         ", architecture " + arch.to_string() + " needs " +
                         std::to_string(arch.param_count()));
  }
}

inline LayerBlock extract_layer(const Architecture& arch, const ParamVector& theta, std::size_t k) {
  require_params(arch, theta.span());
  if (k < 1 || k > arch.depth()) throw std::out_of_range("layer out of range");
  const std::size_t rows = arch.width(k);
  const std::size_t cols = arch.width(k - 1);
  LayerBlock block{DenseMatrix(rows, cols), std::vector<double>(rows)};
  for (std::size_t i = 1; i <= rows; ++i) {
    for (std::size_t j = 1; j <= cols; ++j) {
      block.weights(i - 1, j - 1) = theta.at1(arch.weight_index(k, i, j));
    }
    block.biases[i - 1] = theta.at1(arch.bias_index(k, i));
  }
  return block;
}

inline ParamVector pack_layer(const Architecture& arch, ParamVector theta, std::size_t k,
                              const DenseMatrix& weights, std::span<const double> biases) {
  require_params(arch, theta.span());
  if (k < 1 || k > arch.depth()) throw std::out_of_range("layer out of range");
  const std::size_t rows = arch.width(k);
  const std::size_t cols = arch.width(k - 1);
  if (weights.rows != rows || weights.cols != cols || weights.data.size() != rows * cols ||
      biases.size() != rows) {
    throw DimensionError("layer block shape does not match layer " + std::to_string(k));
  }
  for (std::size_t i = 1; i <= rows; ++i) {
    for (std::size_t j = 1; j <= cols; ++j) {
      theta.at1(arch.weight_index(k, i, j)) = weights(i - 1, j - 1);
    }
    theta.at1(arch.bias_index(k, i)) = biases[i - 1];
  }
  return theta;
}

inline ParamVector pack_layer(const Architecture& arch, ParamVector theta, std::size_t k,
                              const LayerBlock& block) {
  return pack_layer(arch, std::move(theta), k, block.weights, block.biases);
}

}  // namespace relu_lyapunov
