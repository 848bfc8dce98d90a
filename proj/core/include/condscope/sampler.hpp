// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condscope/pruning.hpp"
#include "condscope/tensor.hpp"
#include "condscope/toydit.hpp"

namespace condscope {

/// Called once per reverse step with the condition before and after the hook.
using StepObserver = std::function<void(std::size_t step_index, int t, const std::vector<double>& c_raw,
                                        const std::vector<double>& c_used)>;

struct SampleOptions {
  std::optional<PruneConfig> prune;
  PruneSchedule schedule = PruneSchedule::every_step();
  /// Sample even when every gate is still zero.
  bool allow_untrained = false;
  StepObserver observer;
};

struct SampleRun {
  Tensor samples;  // n x 2, float64
  std::vector<int> labels;
  std::optional<PruneConfig> prune;
  std::optional<PruneSchedule> schedule;
  std::uint64_t seed = 0;

  void validate() const;
};

/// DDPM ancestral sampling of n chains for one class, t = T..1. Chain i owns
/// the stream (seed, label, i). Posterior variance beta_tilde; no noise on
/// the final step.
SampleRun ddpm_sample(const toy::ModelParams& params, int label, std::size_t n, const SampleOptions& options,
                      std::uint64_t seed);

/// n_per_class chains for every class, concatenated in label order.
SampleRun sample_all_classes(const toy::ModelParams& params, std::size_t n_per_class, const SampleOptions& options,
                             std::uint64_t seed);

struct MixtureEval {
  std::vector<double> per_class_mean_error;  // ||empirical mean - true mean||
  std::vector<double> per_class_cov_error;   // ||unbiased cov - sigma^2 I||_F
  double class_accuracy = 0.0;
  std::size_t n_samples = 0;

  double mean_error() const;  // average over classes
  double cov_error() const;
  nlohmann::json to_json() const;
};

/// Nearest-mean ties go to the lower class index. Every class needs >= 2 samples.
MixtureEval eval_mixture(const Tensor& samples, const std::vector<int>& labels, const toy::Mat& true_means,
                         double true_sigma);

struct NamedEval {
  std::string name;
  MixtureEval eval;
};

/// Per-variant deltas against the baseline (variant - baseline) plus the
/// mean-error ratio. Sample counts must match.
nlohmann::json compare_runs(const MixtureEval& baseline, const std::vector<NamedEval>& variants);

}  // namespace condscope
