// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>

#include "condscope/error.hpp"
#include "condscope/pruning.hpp"
#include "condscope/rng.hpp"
#include "condscope/sparsekernel.hpp"

namespace condscope {
namespace {

TEST(Sparsify, KeepsEntriesAtOrAboveTau) {
  const std::vector<double> c{0.5, -0.001, 0.01, 0.0, -2.0};
  const SparseVec s = sparsify(c, 0.01);
  EXPECT_EQ(s.indices, (std::vector<std::uint32_t>{0, 2, 4}));
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(densify(s), prune(c, PruneConfig::tail(0.01)));
  EXPECT_THROW(sparsify(c, 0.0), Error);
}

TEST(Sparsify, ValidateCatchesBrokenLayouts) {
  SparseVec s{4, {2, 1}, {1.0, 2.0}};
  EXPECT_THROW(s.validate(), Error);
  s = {4, {0, 4}, {1.0, 2.0}};
  EXPECT_THROW(s.validate(), Error);
  s = {4, {0}, {0.0}};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Spmv, MatchesDenseBitForBit) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(300), m = 1 + rng.below(50);
    Matrix w(m, d);
    for (double& x : w.data) x = rng.normal();
    std::vector<double> c(d);
    for (double& x : c) x = rng.normal();
    const SparseVec s = sparsify(c, rng.uniform(0.01, 2.0));
    const std::vector<double> dense = matvec(w, densify(s));
    const std::vector<double> sparse = spmv(w, s);
    ASSERT_EQ(dense.size(), sparse.size());
    EXPECT_EQ(std::memcmp(dense.data(), sparse.data(), dense.size() * sizeof(double)), 0);
  }
}

TEST(Spmv, DimensionMismatch) {
  const Matrix w(3, 4);
  try {
    spmv(w, SparseVec{5, {}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimMismatch);
  }
}

TEST(Bench, ReportsEqualChecksumsAndValidates) {
  const BenchReport r = bench(64, 32, 0.75, 100, 3);
  EXPECT_TRUE(r.checksums_equal);
  EXPECT_EQ(r.nnz, 16u);
  EXPECT_DOUBLE_EQ(r.sparsity, 0.75);
  EXPECT_GT(r.speedup, 0.0);
  EXPECT_EQ(r.threads, 1);
  EXPECT_THROW(bench(64, 32, 1.0, 100, 3), Error);
  EXPECT_THROW(bench(64, 32, 0.5, 99, 3), Error);
  const nlohmann::json j = r.to_json();
  for (const char* key : {"dense_ns_per_op", "sparse_ns_per_op", "speedup", "dense_checksum", "sparse_checksum"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

}  // namespace
}  // namespace condscope
