// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/sparsekernel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "condscope/error.hpp"
#include "condscope/rng.hpp"

namespace condscope {

void SparseVec::validate() const {
  if (indices.size() != values.size()) throw Error(Errc::BadParams, "indices/values length mismatch");
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= dim) throw Error(Errc::BadParams, "index out of range");
    if (j > 0 && indices[j] <= indices[j - 1]) throw Error(Errc::BadParams, "indices not strictly ascending");
    if (values[j] == 0.0) throw Error(Errc::BadParams, "stored zero value");
  }
}

SparseVec sparsify(std::span<const double> c, double tau) {
  if (!(tau > 0.0)) throw Error(Errc::NonPositiveTau, "tau must be > 0");
  SparseVec s;
  s.dim = c.size();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i]) >= tau) {
      s.indices.push_back(static_cast<std::uint32_t>(i));
      s.values.push_back(c[i]);
    }
  }
  return s;
}

std::vector<double> densify(const SparseVec& s) {
  std::vector<double> out(s.dim, 0.0);
  for (std::size_t j = 0; j < s.nnz(); ++j) out[s.indices[j]] = s.values[j];
  return out;
}

std::vector<double> spmv(const Matrix& w, const SparseVec& s) {
  if (s.dim != w.cols) {
    throw Error(Errc::DimMismatch, "sparse vector dim " + std::to_string(s.dim) + " vs matrix cols " +
                                       std::to_string(w.cols));
  }
  std::vector<double> y(w.rows, 0.0);
  const std::size_t nnz = s.nnz();
  const std::uint32_t* idx = s.indices.data();
  const double* val = s.values.data();
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = w.data.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < nnz; ++j) acc += row[idx[j]] * val[j];
    y[r] = acc;
  }
  return y;
}

nlohmann::json BenchReport::to_json() const {
  return {{"d", d},
          {"out_dim", out_dim},
          {"sparsity", sparsity},
          {"nnz", nnz},
          {"iters", iters},
          {"warmup_iters", warmup_iters},
          {"dense_ns_per_op", dense_ns_per_op},
          {"sparse_ns_per_op", sparse_ns_per_op},
          {"speedup", speedup},
          {"dense_checksum", dense_checksum},
          {"sparse_checksum", sparse_checksum},
          {"checksums_equal", checksums_equal},
          {"threads", threads},
          {"seed", seed}};
}

namespace {

double checksum(const std::vector<double>& y) { return std::accumulate(y.begin(), y.end(), 0.0); }

template <typename F>
double time_ns_per_op(F&& op, std::size_t iters, double& sink) {
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < iters; ++i) sink += op()[0];
  const auto stop = std::chrono::steady_clock::now();
  const double ns = std::chrono::duration<double, std::nano>(stop - start).count();
  return std::max(ns / static_cast<double>(iters), 1e-3);
}

}  // namespace

BenchReport bench(std::size_t d, std::size_t out_dim, double sparsity, std::size_t iters,
                  std::uint64_t seed) {
  if (d == 0 || out_dim == 0) throw Error(Errc::BadParams, "d and out_dim must be positive");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw Error(Errc::BadParams, "sparsity must be in [0, 1)");
  if (iters < 100) throw Error(Errc::BadParams, "iters must be >= 100");

  Rng rng(seed);
  Matrix w(out_dim, d);
  for (double& x : w.data) x = rng.normal();

  std::vector<double> c(d);
  for (double& x : c) {
    do {
      x = rng.normal();
    } while (x == 0.0);
  }
  const auto n_zero = static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(d)));
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = d - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  for (std::size_t i = 0; i < n_zero && i < d; ++i) c[perm[i]] = 0.0;

  // Every stored value is nonzero, so tau = smallest positive double keeps
  // exactly the nonzero entries.
  const SparseVec s = sparsify(c, std::numeric_limits<double>::denorm_min());

  BenchReport r;
  r.d = d;
  r.out_dim = out_dim;
  r.nnz = s.nnz();
  r.sparsity = 1.0 - static_cast<double>(r.nnz) / static_cast<double>(d);
  r.iters = iters;
  r.warmup_iters = std::max<std::size_t>(10, iters / 10);
  r.seed = seed;

  auto dense_op = [&] { return matvec(w, c); };
  auto sparse_op = [&] { return spmv(w, s); };

  double sink = 0.0;
  time_ns_per_op(dense_op, r.warmup_iters, sink);
  r.dense_ns_per_op = time_ns_per_op(dense_op, iters, sink);
  time_ns_per_op(sparse_op, r.warmup_iters, sink);
  r.sparse_ns_per_op = time_ns_per_op(sparse_op, iters, sink);
  r.speedup = r.dense_ns_per_op / r.sparse_ns_per_op;

  r.dense_checksum = checksum(dense_op());
  r.sparse_checksum = checksum(sparse_op());
  r.checksums_equal = r.dense_checksum == r.sparse_checksum;
  // Keeps the timed loops observable.
  if (std::isnan(sink)) r.checksums_equal = false;
  return r;
}

}  // namespace condscope
