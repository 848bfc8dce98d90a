// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

// Regenerates the files under fixtures/. Output is byte-stable.

#include <cmath>
#include <iostream>
#include <numeric>
#include <vector>

#include "condscope/io.hpp"
#include "condscope/rng.hpp"

namespace {

using condscope::Rng;
using condscope::Tensor;

constexpr std::size_t kSparseDim = 1152;
constexpr std::size_t kSparseSmall = 448;  // entries with |v| < 0.01

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(p[i], p[rng.below(i + 1)]);
  return p;
}

Tensor sparse1152() {
  Rng rng(1152, 448);
  const std::vector<std::size_t> pos = shuffled(kSparseDim, rng);
  std::vector<float> v(kSparseDim);
  for (std::size_t i = 0; i < kSparseDim; ++i) {
    // Magnitudes stay clear of 0.01 so float32 rounding cannot move them across it.
    const double mag = i < kSparseSmall ? rng.uniform(1e-4, 9e-3) : rng.uniform(1.1e-2, 1.0);
    const double sign = rng.below(2) ? 1.0 : -1.0;
    v[pos[i]] = static_cast<float>(sign * mag);
  }
  return Tensor::f32({1, kSparseDim}, std::move(v));
}

Tensor orthonormal8x16() {
  Rng rng(8, 16);
  const std::vector<std::size_t> cols = shuffled(16, rng);
  std::vector<float> v(8 * 16, 0.0f);
  for (std::size_t r = 0; r < 8; ++r) v[r * 16 + cols[r]] = rng.below(2) ? 1.0f : -1.0f;
  return Tensor::f32({8, 16}, std::move(v));
}

Tensor zero_row4x8() {
  Rng rng(4, 8);
  std::vector<double> v(4 * 8);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i / 8 == 2 ? 0.0 : rng.normal();
  return Tensor::f64({4, 8}, std::move(v));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  try {
    std::filesystem::create_directories(dir);
    condscope::write_npy(sparse1152(), dir / "sparse1152.npy");
    condscope::write_npy(orthonormal8x16(), dir / "orthonormal8x16.npy");
    condscope::write_npy(zero_row4x8(), dir / "zero_row4x8.npy");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
