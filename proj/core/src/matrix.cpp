// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/matrix.hpp"

#include <string>

#include "condscope/error.hpp"

namespace condscope {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw Error(Errc::ShapeMismatch, "matrix data does not match its shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_tensor(const Tensor& t) { return Matrix(t.rows(), t.cols(), t.to_f64()); }

std::vector<double> matvec(const Matrix& w, std::span<const double> x) {
  if (x.size() != w.cols) {
    throw Error(Errc::ShapeMismatch, "matrix has " + std::to_string(w.cols) + " columns, vector has " +
                                         std::to_string(x.size()));
  }
  std::vector<double> y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = w.data.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

}  // namespace condscope
