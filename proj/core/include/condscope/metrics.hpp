// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condscope/io.hpp"
#include "condscope/tensor.hpp"

namespace condscope {

/// Off-diagonal statistics of a cosine-similarity matrix.
struct CosineSummary {
  std::size_t n = 0;
  double mean_offdiag = 0.0;
  double min_offdiag = 0.0;
  double max_offdiag = 0.0;
};

/// Row-wise cosine similarity of an N x d matrix. Each entry is a single
/// left-to-right dot product, so results do not depend on scheduling.
/// Throws ZeroNormRowError naming the first zero row.
Tensor cosine_matrix(const Tensor& embeddings);

/// Statistics over strictly off-diagonal entries; N >= 2.
CosineSummary cosine_summary(const Tensor& cosine);

/// (sum |v_i|)^2 / sum v_i^2. Lies in [1, d] for any nonzero v.
double participation_ratio(std::span<const double> v);

/// alpha / d, with alpha required to lie in [1, d].
double npr(double alpha, std::size_t d);

/// Fraction of coordinates with |v_i| < tau (strict).
double sparsity_tail(std::span<const double> v, double tau);

/// Fraction of coordinates with |v_i| > tau (strict).
double sparsity_head(std::span<const double> v, double tau);

/// Partition of 0..d-1 by magnitude against tau. Each index list is sorted.
struct HeadTailSplit {
  double tau = 0.0;
  std::vector<std::size_t> head;      // |v_i| > tau
  std::vector<std::size_t> tail;      // |v_i| < tau
  std::vector<std::size_t> boundary;  // |v_i| == tau
};

HeadTailSplit head_tail_split(std::span<const double> v, double tau);

struct VarianceProfile {
  std::vector<double> per_dim;     // population variance of each column
  std::vector<double> sorted;      // descending
  std::vector<std::size_t> order;  // sorted[k] == per_dim[order[k]]
};

VarianceProfile variance_per_dim(const Tensor& embeddings);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;  // counts[k] covers [edges[k], edges[k+1])
  std::size_t underflow = 0;
  std::size_t overflow = 0;
};

/// Log-spaced edges 1e-4 .. 10.
std::vector<double> default_histogram_edges();

/// Histogram of |v_i| over half-open bins.
Histogram magnitude_histogram(std::span<const double> v, std::span<const double> edges);

/// Column means of |E| for an N x d matrix.
std::vector<double> mean_abs_rows(const Tensor& embeddings);

struct SparsityReport {
  std::size_t d = 0;
  double pr = 0.0;
  double npr = 0.0;
  std::map<double, double> tail_fraction_at;
  std::map<double, std::size_t> head_count_at;
};

SparsityReport sparsity_report(std::span<const double> v, std::span<const double> taus);

/// Which part of the conditioning signal a matrix holds.
enum class ConditionPart { Y, T, YPlusT };

std::string_view to_string(ConditionPart part) noexcept;
ConditionPart condition_part_from_string(std::string_view s);

enum class PrMode { MeanAbs, PerRow };

struct AnalysisOptions {
  std::vector<double> taus{0.01};
  std::vector<double> histogram_edges = default_histogram_edges();
  PrMode pr_mode = PrMode::MeanAbs;
  /// Drop this row before analysis (e.g. a null-class row in a class table).
  std::optional<std::size_t> exclude_row;
  std::size_t variance_top = 20;
};

struct AnalysisReport {
  ConditionPart part = ConditionPart::YPlusT;
  std::string source_kind;
  std::string model_name;
  std::size_t n_rows = 0;
  SparsityReport sparsity;
  std::optional<CosineSummary> cosine;
  std::optional<VarianceProfile> variance;
  std::vector<double> per_row_pr;  // only filled in PerRow mode
  Histogram histogram;
  std::size_t variance_top = 20;

  nlohmann::json to_json() const;
};

/// Composite metrics for a set of embeddings. PR/nPR, tail fractions and
/// the histogram are computed on the column means of |E| (one vector per
/// model); cosine and variance statistics need at least two rows and are
/// omitted otherwise.
AnalysisReport analyze_embeddings(const Tensor& embeddings, ConditionPart part,
                                  const AnalysisOptions& options = {});

AnalysisReport analyze_embedding_set(const EmbeddingSet& set, ConditionPart part,
                                     const AnalysisOptions& options = {});

/// Elementwise y + t for every row of `y`; `t` may have one row (broadcast)
/// or the same number of rows.
Tensor add_rows(const Tensor& y, const Tensor& t);

/// Formats a threshold as a report key, e.g. 0.01 -> "0.01".
std::string tau_key(double tau);

}  // namespace condscope
