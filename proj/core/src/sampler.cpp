// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/sampler.hpp"

#include <cmath>
#include <numeric>

#include "condscope/error.hpp"
#include "condscope/rng.hpp"

namespace condscope {

void SampleRun::validate() const {
  if (samples.rank() != 2 || samples.cols() != 2) throw Error(Errc::ShapeMismatch, "samples must be n x 2");
  if (labels.size() != samples.rows()) throw Error(Errc::LengthMismatch, "labels length must equal sample count");
}

SampleRun ddpm_sample(const toy::ModelParams& params, int label, std::size_t n, const SampleOptions& options,
                      std::uint64_t seed) {
  const toy::ToyConfig& cfg = params.config;
  if (label < 0 || label >= cfg.n_classes) throw Error(Errc::BadConfig, "label out of range");
  if (n == 0) throw Error(Errc::BadConfig, "n must be positive");
  if (!options.allow_untrained && params.gates_all_zero()) {
    throw Error(Errc::UntrainedParams, "every gate is zero; the model has not been trained");
  }
  const auto n_steps = static_cast<std::size_t>(cfg.n_timesteps);
  if (options.prune) {
    options.prune->validate();
    options.schedule.validate(n_steps);
  }
  const toy::DiffusionSchedule sched = toy::diffusion_schedule(cfg.n_timesteps, cfg.beta_min, cfg.beta_max);

  std::vector<Rng> chains;
  chains.reserve(n);
  const std::uint64_t label_seed = mix_seed(seed) ^ mix_seed(0x100000000ull + static_cast<std::uint64_t>(label));
  for (std::size_t i = 0; i < n; ++i) chains.emplace_back(label_seed, i);

  const auto cols = static_cast<Eigen::Index>(n);
  toy::Mat x(2, cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    Rng& rng = chains[static_cast<std::size_t>(i)];
    x(0, i) = rng.normal();
    x(1, i) = rng.normal();
  }

  for (std::size_t step = 0; step < n_steps; ++step) {
    const int t = cfg.n_timesteps - static_cast<int>(step);
    const toy::Mat c_col = toy::condition_batch(params, {label}, {t});
    const std::vector<double> c_raw(c_col.data(), c_col.data() + c_col.size());
    std::vector<double> c_used = c_raw;
    if (options.prune && should_prune(options.schedule, step, n_steps)) prune_in_place(c_used, *options.prune);
    if (options.observer) options.observer(step, t, c_raw, c_used);

    const Eigen::Map<const Eigen::VectorXd> c_vec(c_used.data(), static_cast<Eigen::Index>(c_used.size()));
    const toy::Mat cond = c_vec.replicate(1, cols);
    const toy::Mat eps_hat = toy::forward_with_condition(params, x, cond);

    const double beta = sched.beta_at(t);
    const double alpha = sched.alpha_at(t);
    const double ab = sched.alpha_bar_at(t);
    x = (x - (beta / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(alpha);
    if (t > 1) {
      const double ab_prev = sched.alpha_bar_at(t - 1);
      const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab));
      for (Eigen::Index i = 0; i < cols; ++i) {
        Rng& rng = chains[static_cast<std::size_t>(i)];
        x(0, i) += sigma * rng.normal();
        x(1, i) += sigma * rng.normal();
      }
    }
  }

  std::vector<double> flat(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    flat[2 * i] = x(0, static_cast<Eigen::Index>(i));
    flat[2 * i + 1] = x(1, static_cast<Eigen::Index>(i));
  }
  SampleRun run;
  run.samples = Tensor::matrix(n, 2, std::move(flat));
  run.labels.assign(n, label);
  run.prune = options.prune;
  if (options.prune) run.schedule = options.schedule;
  run.seed = seed;
  return run;
}

SampleRun sample_all_classes(const toy::ModelParams& params, std::size_t n_per_class, const SampleOptions& options,
                             std::uint64_t seed) {
  std::vector<double> flat;
  SampleRun all;
  for (int k = 0; k < params.config.n_classes; ++k) {
    SampleRun one = ddpm_sample(params, k, n_per_class, options, seed);
    const auto data = one.samples.f64_data();
    flat.insert(flat.end(), data.begin(), data.end());
    all.labels.insert(all.labels.end(), one.labels.begin(), one.labels.end());
  }
  all.samples = Tensor::matrix(all.labels.size(), 2, std::move(flat));
  all.prune = options.prune;
  if (options.prune) all.schedule = options.schedule;
  all.seed = seed;
  return all;
}

double MixtureEval::mean_error() const {
  return std::accumulate(per_class_mean_error.begin(), per_class_mean_error.end(), 0.0) /
         static_cast<double>(per_class_mean_error.size());
}

double MixtureEval::cov_error() const {
  return std::accumulate(per_class_cov_error.begin(), per_class_cov_error.end(), 0.0) /
         static_cast<double>(per_class_cov_error.size());
}

nlohmann::json MixtureEval::to_json() const {
  return {{"per_class_mean_error", per_class_mean_error},
          {"per_class_cov_error", per_class_cov_error},
          {"mean_error", mean_error()},
          {"cov_error", cov_error()},
          {"class_accuracy", class_accuracy},
          {"n_samples", n_samples}};
}

MixtureEval eval_mixture(const Tensor& samples, const std::vector<int>& labels, const toy::Mat& true_means,
                         double true_sigma) {
  if (samples.rank() != 2 || samples.cols() != 2 || true_means.cols() != 2) {
    throw Error(Errc::ShapeMismatch, "samples and means must have 2 columns");
  }
  if (labels.size() != samples.rows()) throw Error(Errc::LengthMismatch, "labels length must equal sample count");
  const auto k_classes = static_cast<std::size_t>(true_means.rows());
  const std::vector<double> xs = samples.to_f64();

  std::vector<std::size_t> count(k_classes, 0);
  std::vector<Eigen::Vector2d> sum(k_classes, Eigen::Vector2d::Zero());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k_classes) throw Error(Errc::BadClassCount, "label out of range");
    const Eigen::Vector2d p(xs[2 * i], xs[2 * i + 1]);
    ++count[static_cast<std::size_t>(y)];
    sum[static_cast<std::size_t>(y)] += p;
    std::size_t best = 0;
    double best_d = (p - true_means.row(0).transpose()).squaredNorm();
    for (std::size_t k = 1; k < k_classes; ++k) {
      const double dk = (p - true_means.row(static_cast<Eigen::Index>(k)).transpose()).squaredNorm();
      if (dk < best_d) {
        best_d = dk;
        best = k;
      }
    }
    if (best == static_cast<std::size_t>(y)) ++correct;
  }
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (count[k] < 2) {
      throw Error(Errc::EmptyClass, "class " + std::to_string(k) + " has " + std::to_string(count[k]) +
                                        " samples; need at least 2");
    }
  }

  std::vector<Eigen::Vector2d> mean(k_classes);
  for (std::size_t k = 0; k < k_classes; ++k) mean[k] = sum[k] / static_cast<double>(count[k]);
  std::vector<Eigen::Matrix2d> scatter(k_classes, Eigen::Matrix2d::Zero());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    const Eigen::Vector2d dev = Eigen::Vector2d(xs[2 * i], xs[2 * i + 1]) - mean[k];
    scatter[k] += dev * dev.transpose();
  }

  MixtureEval e;
  e.n_samples = labels.size();
  e.class_accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  const Eigen::Matrix2d target = true_sigma * true_sigma * Eigen::Matrix2d::Identity();
  for (std::size_t k = 0; k < k_classes; ++k) {
    e.per_class_mean_error.push_back((mean[k] - true_means.row(static_cast<Eigen::Index>(k)).transpose()).norm());
    const Eigen::Matrix2d cov = scatter[k] / static_cast<double>(count[k] - 1);
    e.per_class_cov_error.push_back((cov - target).norm());
  }
  return e;
}

nlohmann::json compare_runs(const MixtureEval& baseline, const std::vector<NamedEval>& variants) {
  nlohmann::json rows = nlohmann::json::array();
  for (const NamedEval& v : variants) {
    if (v.eval.n_samples != baseline.n_samples) {
      throw Error(Errc::CountMismatch, "variant '" + v.name + "' has " + std::to_string(v.eval.n_samples) +
                                           " samples, baseline has " + std::to_string(baseline.n_samples));
    }
    const double base_err = baseline.mean_error();
    rows.push_back({{"name", v.name},
                    {"class_accuracy", v.eval.class_accuracy},
                    {"mean_error", v.eval.mean_error()},
                    {"cov_error", v.eval.cov_error()},
                    {"delta_class_accuracy", v.eval.class_accuracy - baseline.class_accuracy},
                    {"delta_mean_error", v.eval.mean_error() - base_err},
                    {"delta_cov_error", v.eval.cov_error() - baseline.cov_error()},
                    {"mean_error_ratio", base_err > 0.0 ? nlohmann::json(v.eval.mean_error() / base_err)
                                                        : nlohmann::json(nullptr)}});
  }
  return {{"baseline", baseline.to_json()}, {"variants", rows}};
}

}  // namespace condscope
