// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "condscope/error.hpp"
#include "condscope/metrics.hpp"
#include "condscope/pruning.hpp"
#include "condscope/rng.hpp"

namespace condscope {
namespace {

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_vector(Rng& rng, std::size_t d, bool with_ties) {
  std::vector<double> v(d);
  for (double& x : v) {
    x = with_ties ? 0.5 * static_cast<double>(static_cast<int>(rng.below(7)) - 3) : rng.normal();
  }
  return v;
}

PruneConfig random_config(Rng& rng, std::size_t d) {
  switch (rng.below(4)) {
    case 0: return PruneConfig::tail(rng.uniform(0.01, 2.0));
    case 1: return PruneConfig::head(rng.uniform(0.01, 2.0));
    case 2: return PruneConfig::keep_top_k(1 + rng.below(d));
    default: return PruneConfig::zero_top_k(1 + rng.below(d));
  }
}

TEST(Prune, TailHandValue) {
  const std::vector<double> c{5.2, 0.003, -7.1, 0.04};
  EXPECT_EQ(prune(c, PruneConfig::tail(0.01)), (std::vector<double>{5.2, 0, -7.1, 0.04}));
  EXPECT_EQ(prune(c, PruneConfig::head(1.0)), (std::vector<double>{0, 0.003, 0, 0.04}));
}

TEST(Prune, KeepAllIsIdentity) {
  const std::vector<double> c{1, -2, 0.5, -0.0, 3};
  EXPECT_TRUE(bits_equal(prune(c, PruneConfig::keep_top_k(c.size())), c));
}

TEST(Prune, ConfigValidation) {
  EXPECT_THROW(PruneConfig::tail(0.0).validate(), Error);
  EXPECT_THROW(PruneConfig::tail(-1.0).validate(), Error);
  EXPECT_THROW(PruneConfig::keep_top_k(0).validate(), Error);
  EXPECT_THROW((PruneConfig{PruneMode::Tail, 0.1, 3}).validate(), Error);
  EXPECT_THROW((PruneConfig{PruneMode::KeepTopK, std::nullopt, std::nullopt}).validate(), Error);
  try {
    prune(std::vector<double>{1, 2}, PruneConfig::zero_top_k(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::KTooLarge);
  }
}

TEST(Prune, ModeNamesRoundTrip) {
  for (PruneMode m : {PruneMode::Tail, PruneMode::Head, PruneMode::KeepTopK, PruneMode::ZeroTopK}) {
    EXPECT_EQ(prune_mode_from_string(to_string(m)), m);
  }
  EXPECT_EQ(prune_mode_from_string("keep-top-k"), PruneMode::KeepTopK);
  EXPECT_THROW(prune_mode_from_string("middle"), Error);
  const PruneConfig cfg = PruneConfig::zero_top_k(6);
  const PruneConfig back = PruneConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.mode, cfg.mode);
  EXPECT_EQ(back.k, cfg.k);
}

TEST(Prune, TopKTieBreakPrefersLowerIndex) {
  const std::vector<double> c{1, -2, 2, 1, 2};
  EXPECT_EQ(top_k_indices(c, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(prune(c, PruneConfig::keep_top_k(4)), (std::vector<double>{1, -2, 2, 0, 2}));
}

TEST(PruneProperties, Idempotence) {
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + rng.below(64);
    const std::vector<double> c = random_vector(rng, d, trial % 2 == 0);
    const PruneConfig cfg = random_config(rng, d);
    const std::vector<double> once = prune(c, cfg);
    if (cfg.mode == PruneMode::ZeroTopK) {
      // A second zero_top_k removes the next k largest; only the zeroed set is stable.
      const std::vector<double> twice = prune(once, cfg);
      for (std::size_t i = 0; i < d; ++i) {
        if (once[i] == 0.0) EXPECT_EQ(twice[i], 0.0);
      }
      continue;
    }
    EXPECT_TRUE(bits_equal(prune(once, cfg), once));
  }
}

TEST(PruneProperties, TailPlusHeadIsExactPartition) {
  Rng rng(22);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::vector<double> c = random_vector(rng, 1 + rng.below(64), false);
    const double tau = rng.uniform(0.01, 2.0);
    if (!head_tail_split(c, tau).boundary.empty()) continue;
    const auto t = prune(c, PruneConfig::tail(tau));
    const auto h = prune(c, PruneConfig::head(tau));
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(t[i] + h[i], c[i]);
  }
}

TEST(PruneProperties, TopKComplementarity) {
  Rng rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + rng.below(64);
    const std::vector<double> c = random_vector(rng, d, trial % 2 == 0);
    const std::size_t k = 1 + rng.below(d);
    const auto keep = prune(c, PruneConfig::keep_top_k(k));
    const auto drop = prune(c, PruneConfig::zero_top_k(k));
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_EQ(keep[i] + drop[i], c[i]);
      EXPECT_TRUE(keep[i] == 0.0 || drop[i] == 0.0);
    }
  }
}

TEST(PruneProperties, SupportShrinksAndSurvivorsUntouched) {
  Rng rng(24);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + rng.below(64);
    std::vector<double> c = random_vector(rng, d, trial % 3 == 0);
    const PruneConfig cfg = random_config(rng, d);
    const auto p = prune(c, cfg);
    for (std::size_t i = 0; i < d; ++i) {
      if (c[i] == 0.0) EXPECT_EQ(p[i], 0.0);
      if (p[i] != 0.0) EXPECT_EQ(std::memcmp(&p[i], &c[i], sizeof(double)), 0);
    }
  }
}

TEST(Schedule, ShouldPruneIndexArithmetic) {
  for (std::size_t s = 0; s < 50; ++s) EXPECT_TRUE(should_prune(PruneSchedule::every_step(), s, 50));
  EXPECT_TRUE(should_prune(PruneSchedule::initial_only(), 0, 50));
  EXPECT_FALSE(should_prune(PruneSchedule::initial_only(), 1, 50));
  for (std::size_t s = 0; s < 50; ++s) EXPECT_EQ(should_prune(PruneSchedule::last_k_steps(5), s, 50), s >= 45);
  EXPECT_THROW(should_prune(PruneSchedule::every_step(), 50, 50), Error);
}

TEST(Schedule, ValidationAndDefaults) {
  EXPECT_THROW(PruneSchedule::last_k_steps(0).validate(50), Error);
  EXPECT_THROW(PruneSchedule::last_k_steps(51).validate(50), Error);
  EXPECT_NO_THROW(PruneSchedule::last_k_steps(50).validate(50));
  EXPECT_EQ(default_last_k(200), 20u);
  EXPECT_EQ(default_last_k(55), 6u);
  EXPECT_EQ(default_last_k(3), 1u);
  EXPECT_EQ(PruneSchedule::last_k_steps(7).label(), "lastk:7");
  const PruneSchedule back = PruneSchedule::from_json(PruneSchedule::last_k_steps(7).to_json());
  EXPECT_EQ(back.policy, SchedulePolicy::LastKSteps);
  EXPECT_EQ(back.k_steps, 7u);
}

TEST(RemovedCount, FormatAndZeroVector) {
  std::vector<double> c(1152, 1.0);
  for (std::size_t i = 0; i < 448; ++i) c[i * 2] = 0.001;
  const RemovedCount r = removed_count(c, PruneConfig::tail(0.01));
  EXPECT_EQ(r.removed, 448u);
  EXPECT_EQ(r.total, 1152u);
  EXPECT_EQ(r.table_format(), "448/1152 (38.89%)");
  EXPECT_EQ(removed_count(std::vector<double>(10, 0.0), PruneConfig::zero_top_k(3)).removed, 0u);
}

TEST(AutoThreshold, RemovesRequestedFraction) {
  Rng rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 10 + rng.below(200);
    const std::vector<double> c = random_vector(rng, d, false);
    const double frac = rng.uniform(0.05, 0.95);
    const double tau = tau_for_tail_fraction(c, frac);
    EXPECT_GT(tau, 0.0);
    const auto expected = static_cast<std::size_t>(std::llround(frac * static_cast<double>(d)));
    EXPECT_EQ(removed_count(c, PruneConfig::tail(tau)).removed, expected);
  }
}

}  // namespace
}  // namespace condscope
