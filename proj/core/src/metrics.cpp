// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "condscope/error.hpp"

namespace condscope {
namespace {

void require_positive_tau(double tau) {
  if (!(tau > 0.0)) throw Error(Errc::NonPositiveTau, "tau must be > 0, got " + std::to_string(tau));
}

}  // namespace

Tensor cosine_matrix(const Tensor& embeddings) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  const std::vector<double> e = embeddings.to_f64();

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) ss += e[i * d + k] * e[i * d + k];
    norms[i] = std::sqrt(ss);
    if (!(norms[i] > 0.0)) throw ZeroNormRowError(i);
  }

  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += e[i * d + k] * e[j * d + k];
      const double c = dot / (norms[i] * norms[j]);
      m[i * n + j] = c;
      m[j * n + i] = c;
    }
  }
  return Tensor::matrix(n, n, std::move(m));
}

CosineSummary cosine_summary(const Tensor& cosine) {
  const std::size_t n = cosine.rows();
  if (cosine.cols() != n) throw Error(Errc::ShapeMismatch, "cosine matrix must be square");
  if (n < 2) throw Error(Errc::TooSmall, "need at least 2 rows for off-diagonal statistics");

  CosineSummary s;
  s.n = n;
  s.min_offdiag = std::numeric_limits<double>::infinity();
  s.max_offdiag = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = cosine.at(i, j);
      sum += c;
      s.min_offdiag = std::min(s.min_offdiag, c);
      s.max_offdiag = std::max(s.max_offdiag, c);
    }
  }
  s.mean_offdiag = sum / static_cast<double>(n * (n - 1));
  // Summation rounding can nudge the mean just outside [min, max].
  s.mean_offdiag = std::clamp(s.mean_offdiag, s.min_offdiag, s.max_offdiag);
  return s;
}

double participation_ratio(std::span<const double> v) {
  double l1 = 0.0;
  double l2 = 0.0;
  for (double x : v) {
    const double a = std::abs(x);
    l1 += a;
    l2 += a * a;
  }
  if (!(l2 > 0.0)) throw Error(Errc::AllZeroVector, "participation ratio of an all-zero vector");
  return l1 * l1 / l2;
}

double npr(double alpha, std::size_t d) {
  constexpr double kSlack = 1e-9;
  const double dd = static_cast<double>(d);
  if (d == 0 || !(alpha >= 1.0 - kSlack) || !(alpha <= dd * (1.0 + kSlack))) {
    throw Error(Errc::OutOfRange, "alpha " + std::to_string(alpha) + " outside [1, " +
                                      std::to_string(d) + "]");
  }
  return alpha / dd;
}

double sparsity_tail(std::span<const double> v, double tau) {
  require_positive_tau(tau);
  if (v.empty()) return 0.0;
  const auto below = std::count_if(v.begin(), v.end(), [tau](double x) { return std::abs(x) < tau; });
  return static_cast<double>(below) / static_cast<double>(v.size());
}

double sparsity_head(std::span<const double> v, double tau) {
  require_positive_tau(tau);
  if (v.empty()) return 0.0;
  const auto above = std::count_if(v.begin(), v.end(), [tau](double x) { return std::abs(x) > tau; });
  return static_cast<double>(above) / static_cast<double>(v.size());
}

HeadTailSplit head_tail_split(std::span<const double> v, double tau) {
  require_positive_tau(tau);
  HeadTailSplit split;
  split.tau = tau;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > tau) split.head.push_back(i);
    else if (a < tau) split.tail.push_back(i);
    else split.boundary.push_back(i);
  }
  return split;
}

VarianceProfile variance_per_dim(const Tensor& embeddings) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (n < 2) throw Error(Errc::TooSmall, "variance needs at least 2 rows");
  const std::vector<double> e = embeddings.to_f64();

  VarianceProfile out;
  out.per_dim.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += e[i * d + k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = e[i * d + k] - mean;
      ss += dev * dev;
    }
    out.per_dim[k] = ss / static_cast<double>(n);
  }
  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return out.per_dim[a] > out.per_dim[b]; });
  out.sorted.reserve(d);
  for (std::size_t k : out.order) out.sorted.push_back(out.per_dim[k]);
  return out;
}

std::vector<double> default_histogram_edges() { return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}; }

Histogram magnitude_histogram(std::span<const double> v, std::span<const double> edges) {
  if (edges.size() < 2) throw Error(Errc::BadEdges, "need at least two bin edges");
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k] > edges[k - 1])) throw Error(Errc::BadEdges, "edges must be strictly ascending");
  }
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.counts.assign(edges.size() - 1, 0);
  for (double x : v) {
    const double a = std::abs(x);
    if (a < edges.front()) {
      ++h.underflow;
    } else if (a >= edges.back()) {
      ++h.overflow;
    } else {
      // First edge strictly greater than a closes the bin.
      const auto it = std::upper_bound(edges.begin(), edges.end(), a);
      ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  return h;
}

std::vector<double> mean_abs_rows(const Tensor& embeddings) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  std::vector<double> out(d, 0.0);
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) out[k] += std::abs(embeddings.at(i * d + k));
  }
  for (double& x : out) x /= static_cast<double>(n);
  return out;
}

SparsityReport sparsity_report(std::span<const double> v, std::span<const double> taus) {
  SparsityReport r;
  r.d = v.size();
  r.pr = participation_ratio(v);
  r.npr = npr(r.pr, r.d);
  for (double tau : taus) {
    r.tail_fraction_at[tau] = sparsity_tail(v, tau);
    r.head_count_at[tau] = head_tail_split(v, tau).head.size();
  }
  return r;
}

std::string_view to_string(ConditionPart part) noexcept {
  switch (part) {
    case ConditionPart::Y: return "y";
    case ConditionPart::T: return "t";
    case ConditionPart::YPlusT: return "y+t";
  }
  return "y+t";
}

ConditionPart condition_part_from_string(std::string_view s) {
  if (s == "y") return ConditionPart::Y;
  if (s == "t") return ConditionPart::T;
  if (s == "y+t") return ConditionPart::YPlusT;
  throw Error(Errc::BadConfig, "mode must be y, t or y+t");
}

std::string tau_key(double tau) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), tau);
  return std::string(buf, ptr);
}

Tensor add_rows(const Tensor& y, const Tensor& t) {
  const std::size_t n = y.rows();
  const std::size_t d = y.cols();
  if (t.cols() != d) throw Error(Errc::ShapeMismatch, "y and t widths differ");
  if (t.rows() != 1 && t.rows() != n) {
    throw Error(Errc::ShapeMismatch, "t must have 1 row or as many rows as y");
  }
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ti = t.rows() == 1 ? 0 : i;
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = y.at(i * d + k) + t.at(ti * d + k);
  }
  return Tensor::matrix(n, d, std::move(out));
}

AnalysisReport analyze_embeddings(const Tensor& embeddings, ConditionPart part,
                                  const AnalysisOptions& options) {
  Tensor e = embeddings;
  if (options.exclude_row) {
    const std::size_t skip = *options.exclude_row;
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    if (skip >= n) throw Error(Errc::OutOfRange, "excluded row " + std::to_string(skip) + " out of range");
    std::vector<double> kept;
    kept.reserve((n - 1) * d);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == skip) continue;
      for (std::size_t k = 0; k < d; ++k) kept.push_back(embeddings.at(i * d + k));
    }
    e = Tensor::matrix(n - 1, d, std::move(kept));
  }

  AnalysisReport r;
  r.part = part;
  r.n_rows = e.rows();
  r.variance_top = options.variance_top;
  if (r.n_rows == 0) throw Error(Errc::TooSmall, "embedding set has no rows");

  const std::vector<double> magnitude = mean_abs_rows(e);
  r.sparsity = sparsity_report(magnitude, options.taus);
  r.histogram = magnitude_histogram(magnitude, options.histogram_edges);
  if (options.pr_mode == PrMode::PerRow) {
    for (std::size_t i = 0; i < r.n_rows; ++i) r.per_row_pr.push_back(participation_ratio(e.row(i)));
  }
  if (r.n_rows >= 2) {
    r.cosine = cosine_summary(cosine_matrix(e));
    r.variance = variance_per_dim(e);
  }
  return r;
}

AnalysisReport analyze_embedding_set(const EmbeddingSet& set, ConditionPart part,
                                     const AnalysisOptions& options) {
  set.validate();
  AnalysisReport r = analyze_embeddings(set.matrix, part, options);
  r.source_kind = std::string(to_string(set.kind));
  r.model_name = set.meta.model_name;
  return r;
}

nlohmann::json AnalysisReport::to_json() const {
  nlohmann::json j;
  j["kind"] = std::string(to_string(part));
  j["d"] = sparsity.d;
  j["n_rows"] = n_rows;
  j["pr"] = sparsity.pr;
  j["npr"] = sparsity.npr;
  if (!source_kind.empty()) j["source_kind"] = source_kind;
  if (!model_name.empty()) j["model_name"] = model_name;

  if (cosine) {
    j["cosine"] = {{"mean", cosine->mean_offdiag}, {"min", cosine->min_offdiag}, {"max", cosine->max_offdiag}};
  } else {
    j["cosine"] = nullptr;
    j["cosine_omitted"] = "fewer than 2 rows";
  }
  nlohmann::json tail = nlohmann::json::object();
  for (const auto& [tau, frac] : sparsity.tail_fraction_at) tail[tau_key(tau)] = frac;
  nlohmann::json head = nlohmann::json::object();
  for (const auto& [tau, count] : sparsity.head_count_at) head[tau_key(tau)] = count;
  j["tail_fraction"] = tail;
  j["head_count"] = head;

  if (variance) {
    const std::size_t top = std::min(variance_top, variance->sorted.size());
    j["variance_top20"] = std::vector<double>(variance->sorted.begin(), variance->sorted.begin() + top);
    j["variance_top20_dims"] =
        std::vector<std::size_t>(variance->order.begin(), variance->order.begin() + top);
  } else {
    j["variance_top20"] = nlohmann::json::array();
  }
  if (!per_row_pr.empty()) j["per_row_pr"] = per_row_pr;
  j["histogram"] = {{"edges", histogram.edges},
                    {"counts", histogram.counts},
                    {"underflow", histogram.underflow},
                    {"overflow", histogram.overflow}};
  return j;
}

}  // namespace condscope
