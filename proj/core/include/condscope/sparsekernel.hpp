// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "condscope/matrix.hpp"

namespace condscope {

/// Coordinate-list sparse vector: ascending indices, no stored zeros.
struct SparseVec {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return indices.size(); }
  /// Throws BadParams if the layout invariants do not hold.
  void validate() const;
};

/// Keeps exactly the entries with |c_i| >= tau, so densify(sparsify(c, tau))
/// equals tail pruning at tau.
SparseVec sparsify(std::span<const double> c, double tau);

std::vector<double> densify(const SparseVec& s);

/// W s for row-major W (m x d). Each output accumulates the stored entries
/// in index order, which matches a dense left-to-right dot product over the
/// densified vector bit for bit.
std::vector<double> spmv(const Matrix& w, const SparseVec& s);

struct BenchReport {
  std::size_t d = 0;
  std::size_t out_dim = 0;
  double sparsity = 0.0;  // fraction of exact zeros in the input vector
  std::size_t nnz = 0;
  std::size_t iters = 0;
  std::size_t warmup_iters = 0;
  double dense_ns_per_op = 0.0;
  double sparse_ns_per_op = 0.0;
  double speedup = 0.0;  // dense / sparse
  double dense_checksum = 0.0;
  double sparse_checksum = 0.0;
  bool checksums_equal = false;
  int threads = 1;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Times dense matvec against spmv on the same random (W, c); c has
/// round(sparsity * d) zeros at random positions. Timings exclude warm-up.
/// Requires sparsity in [0, 1) and iters >= 100.
BenchReport bench(std::size_t d, std::size_t out_dim, double sparsity, std::size_t iters,
                  std::uint64_t seed);

}  // namespace condscope
