// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/tensor.hpp"

#include <cstring>
#include <functional>
#include <numeric>
#include <string>

#include "condscope/error.hpp"

namespace condscope {

std::size_t shape_numel(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t dtype_size(DType dtype) noexcept { return dtype == DType::Float32 ? 4 : 8; }

Tensor::Tensor(Shape shape, std::variant<std::vector<float>, std::vector<double>> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t stored = std::visit([](const auto& v) { return v.size(); }, data_);
  if (stored != shape_numel(shape_)) {
    throw Error(Errc::InvalidTensor, "shape holds " + std::to_string(shape_numel(shape_)) +
                                         " elements but data has " + std::to_string(stored));
  }
}

Tensor Tensor::f32(Shape shape, std::vector<float> data) {
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::f64(Shape shape, std::vector<double> data) {
  return Tensor(std::move(shape), std::move(data));
}

DType Tensor::dtype() const noexcept {
  return std::holds_alternative<std::vector<float>>(data_) ? DType::Float32 : DType::Float64;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw Error(Errc::InvalidTensor, "expected a rank-2 tensor");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw Error(Errc::InvalidTensor, "expected a rank-2 tensor");
  return shape_[1];
}

std::span<const float> Tensor::f32_data() const {
  if (dtype() != DType::Float32) throw Error(Errc::InvalidTensor, "tensor is not float32");
  return std::get<std::vector<float>>(data_);
}

std::span<const double> Tensor::f64_data() const {
  if (dtype() != DType::Float64) throw Error(Errc::InvalidTensor, "tensor is not float64");
  return std::get<std::vector<double>>(data_);
}

double Tensor::at(std::size_t flat_index) const {
  return std::visit([&](const auto& v) { return static_cast<double>(v.at(flat_index)); }, data_);
}

double Tensor::at(std::size_t row, std::size_t col) const { return at(row * cols() + col); }

std::vector<double> Tensor::to_f64() const {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, data_);
}

std::vector<double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  if (r >= rows()) throw Error(Errc::OutOfRange, "row " + std::to_string(r) + " out of range");
  std::vector<double> out(c);
  for (std::size_t j = 0; j < c; ++j) out[j] = at(r * c + j);
  return out;
}

bool Tensor::bit_equal(const Tensor& other) const noexcept {
  if (shape_ != other.shape_ || dtype() != other.dtype()) return false;
  return std::visit(
      [&](const auto& mine) {
        using V = std::decay_t<decltype(mine)>;
        const auto& theirs = std::get<V>(other.data_);
        return mine.empty() ||
               std::memcmp(mine.data(), theirs.data(), mine.size() * sizeof(mine[0])) == 0;
      },
      data_);
}

}  // namespace condscope
