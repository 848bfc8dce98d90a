// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "condscope/adaln.hpp"
#include "condscope/error.hpp"
#include "condscope/pruning.hpp"
#include "condscope/rng.hpp"

namespace condscope {
namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& x : m.data) x = rng.normal();
  return m;
}

TEST(TimestepEmbedding, HandValues) {
  const std::vector<double> zero = embed_timestep(0.0, 8);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(zero[i], 0.0);
    EXPECT_EQ(zero[4 + i], 1.0);
  }
  const std::vector<double> e = embed_timestep(1.0, 4);
  EXPECT_DOUBLE_EQ(e[0], std::sin(1.0));
  EXPECT_DOUBLE_EQ(e[1], std::sin(1.0 / std::sqrt(10000.0)));
  EXPECT_DOUBLE_EQ(e[2], std::cos(1.0));
  EXPECT_DOUBLE_EQ(e[3], std::cos(1.0 / std::sqrt(10000.0)));
  EXPECT_DOUBLE_EQ(embed_timestep(3.5, 16)[0], std::sin(3.5));
  EXPECT_THROW(embed_timestep(1.0, 5), Error);
}

TEST(ConditionVector, Addition) {
  const ConditionVector c = condition_vector(std::vector<double>{1, 2}, std::vector<double>{0.5, -2});
  EXPECT_EQ(c.values, (std::vector<double>{1.5, 0}));
  EXPECT_EQ(condition_vector(std::vector<double>{0, 0}, std::vector<double>{3, 4}).values,
            (std::vector<double>{3, 4}));
  EXPECT_THROW(condition_vector(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(Modulation, ZeroAndIdentity) {
  Rng rng(31);
  const Matrix wg = random_matrix(rng, 5, 3), wb = random_matrix(rng, 5, 3);
  const ModulationParams z = modulation(std::vector<double>(3, 0.0), wg, wb);
  for (double x : z.gamma) EXPECT_EQ(x, 0.0);
  for (double x : z.beta) EXPECT_EQ(x, 0.0);
  const std::vector<double> c{0.3, -1.5, 2.0};
  EXPECT_EQ(modulation(c, Matrix::identity(3), Matrix::identity(3)).gamma, c);
  const Matrix gate(5, 3, 0.0);
  const ModulationParams with_gate = modulation(c, wg, wb, &gate);
  ASSERT_TRUE(with_gate.gate.has_value());
  for (double x : *with_gate.gate) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(modulation(std::vector<double>{1, 2}, wg, wb), Error);
}

TEST(Modulation, LinearityOverHeadTailSplit) {
  Rng rng(32);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + rng.below(64), w = 1 + rng.below(32);
    const Matrix wg = random_matrix(rng, w, d), wb = random_matrix(rng, w, d);
    std::vector<double> c(d);
    for (double& x : c) x = rng.normal() * std::exp(rng.normal());
    const double tau = rng.uniform(0.05, 1.5);
    const std::vector<double> head = prune(c, PruneConfig::tail(tau));
    std::vector<double> tail(d);
    for (std::size_t i = 0; i < d; ++i) tail[i] = c[i] - head[i];
    const ModulationParams full = modulation(c, wg, wb);
    const ModulationParams mh = modulation(head, wg, wb);
    const ModulationParams mt = modulation(tail, wg, wb);
    for (std::size_t i = 0; i < w; ++i) {
      double scale = 0.0;
      for (std::size_t j = 0; j < d; ++j) scale += std::abs(wg(i, j) * c[j]);
      EXPECT_NEAR(full.gamma[i], mh.gamma[i] + mt.gamma[i], 1e-12 * std::max(scale, 1e-300));
    }
  }
}

TEST(AdaLn, PlainNormalization) {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t w = 2 + rng.below(100);
    std::vector<double> h(w);
    for (double& x : h) x = 3.0 + rng.normal() * rng.uniform(0.1, 10.0);
    ModulationParams m{std::vector<double>(w, 1.0), std::vector<double>(w, 0.0), std::nullopt};
    const std::vector<double> out = adaln_forward(h, m);
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(w);
    double var = 0.0;
    for (double x : out) var += (x - mean) * (x - mean);
    var /= static_cast<double>(w);
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-4);

    std::vector<double> shifted = h;
    for (double& x : shifted) x += 42.0;
    const std::vector<double> out2 = adaln_forward(shifted, m);
    for (std::size_t i = 0; i < w; ++i) EXPECT_NEAR(out2[i], out[i], 1e-10);
  }
}

TEST(AdaLn, HandValueAndConstantInput) {
  const double eps = kAdaLnEpsilon;
  const ModulationParams m{{2, 2}, {1, 1}, std::nullopt};
  const std::vector<double> out = adaln_forward(std::vector<double>{1, 3}, m);
  EXPECT_NEAR(out[0], 1.0 - 2.0 / (1.0 + eps), 1e-15);
  EXPECT_NEAR(out[1], 1.0 + 2.0 / (1.0 + eps), 1e-15);
  const ModulationParams b{{5, 5, 5}, {0.25, -1, 7}, std::nullopt};
  EXPECT_EQ(adaln_forward(std::vector<double>{4, 4, 4}, b), (std::vector<double>{0.25, -1, 7}));
  EXPECT_THROW(adaln_forward(std::vector<double>{1, 2, 3}, m), Error);
}

}  // namespace
}  // namespace condscope
