// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace condscope {

enum class DType { Float32, Float64 };

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::size_t dtype_size(DType dtype) noexcept;

/// Dense row-major array of float32 or float64 values.
///
/// Storage keeps the on-disk element type so that a read/write cycle is
/// bit-exact; numeric code consumes the widened view from `to_f64()`.
class Tensor {
 public:
  Tensor() : shape_{0}, data_(std::vector<double>{}) {}

  static Tensor f32(Shape shape, std::vector<float> data);
  static Tensor f64(Shape shape, std::vector<double> data);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return f64({rows, cols}, std::move(data));
  }
  static Tensor vector(std::vector<double> data) {
    const std::size_t n = data.size();
    return f64({n}, std::move(data));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return shape_numel(shape_); }
  DType dtype() const noexcept;

  /// Rows/cols of a rank-2 tensor; throws InvalidTensor for other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const float> f32_data() const;
  std::span<const double> f64_data() const;

  double at(std::size_t flat_index) const;
  double at(std::size_t row, std::size_t col) const;

  std::vector<double> to_f64() const;
  std::vector<double> row(std::size_t r) const;

  /// Same shape, dtype, and byte-identical payload.
  bool bit_equal(const Tensor& other) const noexcept;

 private:
  Tensor(Shape shape, std::variant<std::vector<float>, std::vector<double>> data);

  Shape shape_;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

}  // namespace condscope
