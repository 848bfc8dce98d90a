// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "condscope/tensor.hpp"

namespace condscope {

/// Row-major float64 matrix used by the projection kernels.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix from_tensor(const Tensor& t);
  Tensor to_tensor() const { return Tensor::matrix(rows, cols, data); }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// y = W x with one left-to-right accumulation per output.
std::vector<double> matvec(const Matrix& w, std::span<const double> x);

}  // namespace condscope
