// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <limits>
#include <vector>

#include "condscope/matrix.hpp"
#include "condscope/metrics.hpp"
#include "condscope/pruning.hpp"
#include "condscope/rng.hpp"
#include "condscope/sparsekernel.hpp"

namespace {

using namespace condscope;

std::vector<double> random_vector(std::size_t d, double sparsity, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(d);
  for (double& x : v) x = rng.uniform() < sparsity ? 0.0 : rng.normal();
  return v;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix w(rows, cols);
  for (double& x : w.data) x = rng.normal();
  return w;
}

// Args: sparsity in percent.
void BM_DenseMatvec(benchmark::State& state) {
  const Matrix w = random_matrix(2304, 1152, 1);
  const auto c = random_vector(1152, static_cast<double>(state.range(0)) / 100.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matvec(w, c));
}
BENCHMARK(BM_DenseMatvec)->Arg(0)->Arg(90)->Arg(99);

void BM_Spmv(benchmark::State& state) {
  const Matrix w = random_matrix(2304, 1152, 1);
  const auto c = random_vector(1152, static_cast<double>(state.range(0)) / 100.0, 2);
  const SparseVec s = sparsify(c, std::numeric_limits<double>::denorm_min());
  for (auto _ : state) benchmark::DoNotOptimize(spmv(w, s));
}
BENCHMARK(BM_Spmv)->Arg(0)->Arg(90)->Arg(99);

void BM_ParticipationRatio(benchmark::State& state) {
  const auto v = random_vector(static_cast<std::size_t>(state.range(0)), 0.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(participation_ratio(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParticipationRatio)->Arg(64)->Arg(1152)->Arg(4096);

void BM_PruneTail(benchmark::State& state) {
  const auto v = random_vector(1152, 0.0, 4);
  const PruneConfig cfg = PruneConfig::tail(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(prune(v, cfg));
}
BENCHMARK(BM_PruneTail);

void BM_ZeroTopK(benchmark::State& state) {
  const auto v = random_vector(1152, 0.0, 5);
  const PruneConfig cfg = PruneConfig::zero_top_k(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(prune(v, cfg));
}
BENCHMARK(BM_ZeroTopK)->Arg(7)->Arg(115);

}  // namespace

BENCHMARK_MAIN();
