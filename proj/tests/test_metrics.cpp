// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <set>

#include "condscope/error.hpp"
#include "condscope/metrics.hpp"
#include "condscope/rng.hpp"

namespace condscope {
namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

double pr_oracle(const std::vector<double>& v) {
  Big l1 = 0, l2 = 0;
  for (double x : v) {
    l1 += boost::multiprecision::abs(Big(x));
    l2 += Big(x) * Big(x);
  }
  return static_cast<double>(l1 * l1 / l2);
}

std::vector<double> random_vector(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  const int style = static_cast<int>(rng.below(3));
  for (double& x : v) {
    if (style == 0) x = rng.normal();
    if (style == 1) x = rng.normal() * std::exp(4.0 * rng.normal());  // heavy-tailed magnitudes
    if (style == 2) x = rng.uniform() < 0.9 ? 1e-3 * rng.normal() : 10.0 * rng.normal();
  }
  return v;
}

Errc error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::BadParams;
}

TEST(Cosine, HandValues) {
  const Tensor same = cosine_matrix(Tensor::matrix(2, 2, {3, 4, 3, 4}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(same.at(i), 1.0);
  const Tensor orth = cosine_matrix(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  EXPECT_EQ(orth.at(0, 1), 0.0);
  const Tensor diag = cosine_matrix(Tensor::matrix(2, 2, {1, 0, 1, 1}));
  EXPECT_NEAR(diag.at(0, 1), 0.70710678, 1e-8);
}

TEST(Cosine, SummaryOfIdentityAndOnes) {
  const CosineSummary id = cosine_summary(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  EXPECT_EQ(id.mean_offdiag, 0.0);
  const CosineSummary ones = cosine_summary(Tensor::matrix(4, 4, std::vector<double>(16, 1.0)));
  EXPECT_EQ(ones.mean_offdiag, 1.0);
  EXPECT_EQ(ones.min_offdiag, 1.0);
  EXPECT_EQ(ones.max_offdiag, 1.0);
  EXPECT_EQ(error_of([] { cosine_summary(Tensor::matrix(1, 1, {1})); }), Errc::TooSmall);
}

TEST(Cosine, ZeroRowIsNamed) {
  try {
    cosine_matrix(Tensor::matrix(3, 2, {1, 1, 0, 0, 2, 2}));
    FAIL();
  } catch (const ZeroNormRowError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(Cosine, MatrixPropertiesOnRandomInputs) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(10), d = 1 + rng.below(40);
    std::vector<double> e(n * d);
    for (double& x : e) x = rng.normal() * (rng.uniform() < 0.1 ? 1e6 : 1.0);
    const Tensor m = cosine_matrix(Tensor::matrix(n, d, e));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(m.at(i, i), 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(m.at(i, j), m.at(j, i), 1e-12);
        EXPECT_LE(std::abs(m.at(i, j)), 1.0 + 1e-12);
      }
    }
    const CosineSummary s = cosine_summary(m);
    EXPECT_LE(s.min_offdiag, s.mean_offdiag);
    EXPECT_LE(s.mean_offdiag, s.max_offdiag);
  }
}

TEST(ParticipationRatio, HandValues) {
  EXPECT_EQ(participation_ratio(std::vector<double>(1152, 0.25)), 1152.0);
  std::vector<double> one_hot(64, 0.0);
  one_hot[17] = -3.0;
  EXPECT_EQ(participation_ratio(one_hot), 1.0);
  EXPECT_NEAR(participation_ratio(std::vector<double>{3, -4}), 1.96, 1e-15);
  EXPECT_EQ(error_of([] { participation_ratio(std::vector<double>(5, 0.0)); }), Errc::AllZeroVector);
}

TEST(ParticipationRatio, MatchesExtendedPrecisionOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 8 + rng.below(2041);
    const std::vector<double> v = random_vector(rng, d);
    const double want = pr_oracle(v);
    EXPECT_NEAR(participation_ratio(v) / want, 1.0, 1e-9) << "d=" << d;
  }
}

TEST(ParticipationRatio, ScaleInvarianceAndBounds) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> v = random_vector(rng, 1 + rng.below(500));
    const double a = participation_ratio(v);
    const double scale = (rng.below(2) ? -1.0 : 1.0) * std::exp(10.0 * rng.normal());
    std::vector<double> w = v;
    for (double& x : w) x *= scale;
    EXPECT_NEAR(participation_ratio(w) / a, 1.0, 1e-12);
    EXPECT_GE(a, 1.0 - 1e-12);
    EXPECT_LE(a, static_cast<double>(v.size()) * (1.0 + 1e-12));
  }
}

TEST(Npr, TableArithmetic) {
  // Two-decimal display of the published figures.
  EXPECT_NEAR(100.0 * npr(120.69, 1152), 10.47, 0.01);
  EXPECT_NEAR(100.0 * npr(17.67, 1152), 1.53, 0.005);
  EXPECT_EQ(npr(1152, 1152), 1.0);
  EXPECT_EQ(npr(120.69, 1152), 120.69 / 1152.0);
  EXPECT_EQ(error_of([] { npr(0.5, 10); }), Errc::OutOfRange);
  EXPECT_EQ(error_of([] { npr(11, 10); }), Errc::OutOfRange);
}

TEST(Sparsity, TailAndHeadHandValues) {
  EXPECT_EQ(sparsity_tail(std::vector<double>(7, 0.0), 0.5), 1.0);
  EXPECT_DOUBLE_EQ(sparsity_tail(std::vector<double>{0.005, 0.5, 0.02}, 0.01), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(sparsity_head(std::vector<double>{0.005, -0.5, 0.02}, 0.01), 2.0 / 3.0);
  EXPECT_EQ(error_of([] { sparsity_tail(std::vector<double>{1}, 0.0); }), Errc::NonPositiveTau);
  EXPECT_EQ(error_of([] { sparsity_head(std::vector<double>{1}, -1.0); }), Errc::NonPositiveTau);
}

TEST(Sparsity, TailMonotoneInTau) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> v = random_vector(rng, 1 + rng.below(300));
    const double t1 = std::exp(rng.normal() * 3), t2 = t1 * (1.0 + rng.uniform());
    EXPECT_LE(sparsity_tail(v, t1), sparsity_tail(v, t2));
  }
}

TEST(HeadTail, HandSplitAndEquality) {
  const HeadTailSplit s = head_tail_split(std::vector<double>{5.0, 0.001, -6.0}, 1.0);
  EXPECT_EQ(s.head, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s.tail, (std::vector<std::size_t>{1}));
  EXPECT_TRUE(s.boundary.empty());
  const HeadTailSplit eq = head_tail_split(std::vector<double>{0.3, -0.3, 0.3}, 0.3);
  EXPECT_EQ(eq.boundary.size(), 3u);
  EXPECT_TRUE(eq.head.empty());
  EXPECT_TRUE(eq.tail.empty());
}

TEST(HeadTail, PartitionsIndices) {
  Rng rng(10);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng.below(200);
    std::vector<double> v(d);
    for (double& x : v) x = static_cast<double>(static_cast<int>(rng.below(9)) - 4) * 0.25;  // forces ties
    const double tau = 0.25 * static_cast<double>(1 + rng.below(4));
    const HeadTailSplit s = head_tail_split(v, tau);
    std::set<std::size_t> all;
    for (auto i : s.head) {
      EXPECT_GT(std::abs(v[i]), tau);
      all.insert(i);
    }
    for (auto i : s.tail) {
      EXPECT_LT(std::abs(v[i]), tau);
      all.insert(i);
    }
    for (auto i : s.boundary) {
      EXPECT_EQ(std::abs(v[i]), tau);
      all.insert(i);
    }
    EXPECT_EQ(all.size(), d);
    EXPECT_EQ(s.head.size() + s.tail.size() + s.boundary.size(), d);
  }
}

TEST(Variance, HandValues) {
  const VarianceProfile same = variance_per_dim(Tensor::matrix(3, 2, {1, 2, 1, 2, 1, 2}));
  EXPECT_EQ(same.per_dim, (std::vector<double>{0, 0}));
  const VarianceProfile v = variance_per_dim(Tensor::matrix(2, 2, {0, 0, 2, 0}));
  EXPECT_EQ(v.per_dim, (std::vector<double>{1, 0}));
  EXPECT_EQ(v.sorted, (std::vector<double>{1, 0}));
  EXPECT_EQ(v.order, (std::vector<std::size_t>{0, 1}));
}

TEST(Variance, SortedViewIsPermutation) {
  Rng rng(12);
  std::vector<double> e(9 * 30);
  for (double& x : e) x = rng.normal() * rng.uniform(0, 5);
  const VarianceProfile v = variance_per_dim(Tensor::matrix(9, 30, e));
  std::vector<double> a = v.per_dim, b = v.sorted;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  for (std::size_t k = 0; k < v.sorted.size(); ++k) EXPECT_EQ(v.sorted[k], v.per_dim[v.order[k]]);
  EXPECT_TRUE(std::is_sorted(v.sorted.rbegin(), v.sorted.rend()));
}

TEST(Histogram, HandBins) {
  const Histogram h = magnitude_histogram(std::vector<double>{0.005, 0.05, 0.5}, std::vector<double>{0.01, 0.1, 1});
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(h.underflow, 1u);
  EXPECT_EQ(h.overflow, 0u);
  const std::vector<double> edges = default_histogram_edges();
  EXPECT_EQ(edges, (std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1, 1, 10}));
  const Histogram last = magnitude_histogram(std::vector<double>{5.0}, edges);
  EXPECT_EQ(last.counts.back(), 1u);
  EXPECT_EQ(error_of([] { magnitude_histogram(std::vector<double>{1}, std::vector<double>{1, 1}); }), Errc::BadEdges);
}

TEST(Histogram, Conservation) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> v = random_vector(rng, 1 + rng.below(400));
    const Histogram h = magnitude_histogram(v, default_histogram_edges());
    std::size_t total = h.underflow + h.overflow;
    for (auto c : h.counts) total += c;
    EXPECT_EQ(total, v.size());
  }
}

TEST(Analysis, SingleRowOmitsCosine) {
  const AnalysisReport r = analyze_embeddings(Tensor::matrix(1, 4, {0.005, 1, -2, 0.5}), ConditionPart::Y);
  EXPECT_FALSE(r.cosine.has_value());
  EXPECT_DOUBLE_EQ(r.sparsity.tail_fraction_at.at(0.01), 0.25);
  const nlohmann::json j = r.to_json();
  EXPECT_TRUE(j["cosine"].is_null());
  EXPECT_TRUE(j.contains("cosine_omitted"));
}

TEST(Analysis, OrthonormalRows) {
  std::vector<double> e(4 * 4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) e[i * 4 + i] = 1.0;
  const AnalysisReport r = analyze_embeddings(Tensor::matrix(4, 4, e), ConditionPart::Y);
  ASSERT_TRUE(r.cosine.has_value());
  EXPECT_EQ(r.cosine->mean_offdiag, 0.0);
  ASSERT_TRUE(r.variance.has_value());
  for (double v : r.variance->per_dim) EXPECT_DOUBLE_EQ(v, 3.0 / 16.0);
  EXPECT_EQ(r.sparsity.npr, r.sparsity.pr / 4.0);
}

TEST(Analysis, ReportKeysAndExcludeRow) {
  AnalysisOptions opts;
  opts.taus = {0.01, 0.02};
  opts.exclude_row = 2;
  const AnalysisReport r =
      analyze_embeddings(Tensor::matrix(3, 2, {1, 0.001, 2, 0.015, 0, 0}), ConditionPart::YPlusT, opts);
  EXPECT_EQ(r.n_rows, 2u);
  const nlohmann::json j = r.to_json();
  EXPECT_TRUE(j["tail_fraction"].contains("0.01"));
  EXPECT_TRUE(j["tail_fraction"].contains("0.02"));
  EXPECT_EQ(j["kind"], "y+t");
  EXPECT_EQ(tau_key(0.01), "0.01");
}

TEST(Analysis, AddRowsBroadcasts) {
  const Tensor s = add_rows(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::matrix(1, 2, {10, 20}));
  EXPECT_EQ(s.to_f64(), (std::vector<double>{11, 22, 13, 24}));
  EXPECT_THROW(add_rows(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::matrix(1, 3, {1, 2, 3})), Error);
}

}  // namespace
}  // namespace condscope
