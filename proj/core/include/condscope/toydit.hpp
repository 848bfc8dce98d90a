// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "condscope/error.hpp"
#include "condscope/rng.hpp"

namespace condscope::toy {

using Mat = Eigen::MatrixXd;

/// Hyper-parameters of the desk-scale AdaLN diffusion model.
struct ToyConfig {
  int n_classes = 8;
  int cond_dim = 64;
  int hidden_width = 64;
  int n_blocks = 3;
  int n_timesteps = 200;  // one of 50, 100, 200, 500
  double beta_min = 1e-4;
  double beta_max = 0.02;
  int train_steps = 20000;
  int batch = 256;
  double lr = 3e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied as p -= lr * wd * p
  std::uint64_t seed = 0;
  int monitor_every = 500;
  int freq_dim = 64;             // sinusoidal timestep features fed to the t-MLP
  double class_init_std = 0.3;   // class table ~ N(0, std^2)
  bool modulation_bias = false;  // optional bias on the gamma/beta/gate projections

  /// Throws BadConfig on any invalid field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ToyConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Data and forward process

struct MixtureSpec {
  int n_classes = 8;
  double radius = 5.0;
  double sigma = 0.3;

  /// Class k sits at angle 2*pi*k/n_classes on the circle.
  Eigen::Vector2d mean(int k) const;
  /// n_classes x 2.
  Mat means() const;
};

/// Deterministic sampler of (x0, label) pairs from the Gaussian mixture.
class MixtureSampler {
 public:
  MixtureSampler(int n_classes, std::uint64_t seed);

  const MixtureSpec& spec() const noexcept { return spec_; }

  /// Uniform label, then x0 ~ N(mean(label), sigma^2 I).
  std::pair<Eigen::Vector2d, int> draw();
  Eigen::Vector2d draw_from(int label);

 private:
  MixtureSpec spec_;
  Rng rng_;
};

/// Linear beta schedule for t = 1..T, stored 0-based (index t-1).
struct DiffusionSchedule {
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  int n_steps() const noexcept { return static_cast<int>(beta.size()); }
  double beta_at(int t) const { return beta.at(static_cast<std::size_t>(t - 1)); }
  double alpha_at(int t) const { return alpha.at(static_cast<std::size_t>(t - 1)); }
  double alpha_bar_at(int t) const { return alpha_bar.at(static_cast<std::size_t>(t - 1)); }
};

DiffusionSchedule diffusion_schedule(int n_timesteps, double beta_min, double beta_max);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, t in 1..T.
Eigen::Vector2d q_sample(const DiffusionSchedule& schedule, const Eigen::Vector2d& x0, int t,
                         const Eigen::Vector2d& eps);

// ---------------------------------------------------------------------------
// Model

struct BlockParams {
  Mat w_gamma, w_beta, w_gate;  // hidden x cond
  Mat b_gamma, b_beta, b_gate;  // hidden x 1, only when modulation_bias
  Mat mlp_w1, mlp_b1;           // 4*hidden x hidden, 4*hidden x 1
  Mat mlp_w2, mlp_b2;           // hidden x 4*hidden, hidden x 1
};

/// All trainable weights. Vectors are stored as n x 1 matrices so every
/// parameter has the same type.
struct ModelParams {
  ToyConfig config;
  Mat class_table;  // n_classes x cond
  Mat t_w1, t_b1;   // cond x freq, cond x 1
  Mat t_w2, t_b2;   // cond x cond, cond x 1
  Mat in_w, in_b;   // hidden x 2, hidden x 1
  Mat out_w, out_b; // 2 x hidden, 2 x 1
  std::vector<BlockParams> blocks;

  /// Visits every parameter with a stable name, in a fixed order.
  void for_each(const std::function<void(const std::string&, Mat&)>& f);
  void for_each(const std::function<void(const std::string&, const Mat&)>& f) const;

  std::size_t parameter_count() const;
  bool all_finite() const;
  /// True while every gate projection is still exactly zero.
  bool gates_all_zero() const;
};

/// Linear layers ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) (weights and biases),
/// class table ~ N(0, class_init_std^2), gate and modulation biases zero.
ModelParams init_params(const ToyConfig& config, std::uint64_t seed);

/// Zero-filled parameters with the same shapes (used for gradients).
ModelParams zeros_like(const ModelParams& p);

/// A batch laid out column-wise: x_t is 2 x B, labels/timesteps have B entries.
struct Batch {
  Mat x0;
  Mat eps;
  Mat x_t;
  std::vector<int> labels;
  std::vector<int> timesteps;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Sinusoidal features for each timestep: freq_dim x B.
Mat timestep_features(const std::vector<int>& timesteps, int freq_dim);

/// Condition vectors c = class_table[label] + t_mlp(t) as columns (cond x B).
Mat condition_batch(const ModelParams& p, const std::vector<int>& labels, const std::vector<int>& timesteps);

/// Condition vectors for every class at one timestep (n_classes x cond, one row per class).
Mat class_conditions(const ModelParams& p, int t);

/// Activations kept for the backward pass.
struct ForwardCache {
  Mat features, t_pre, t_act, cond;
  struct Block {
    Mat h_in, normed, centered, gamma, beta, gate, act_in, mlp_pre, mlp_act, mlp_out;
    Eigen::RowVectorXd sd, inv_denom;  // per column
  };
  std::vector<Block> blocks;
  Mat h_final;
};

/// Predicted noise (2 x B) given precomputed condition columns. `cache`
/// may be null when no backward pass follows.
Mat forward_with_condition(const ModelParams& p, const Mat& x_t, const Mat& cond, ForwardCache* cache = nullptr);

/// Predicted noise for a batch; c is computed once and stored in the cache.
Mat forward_eps(const ModelParams& p, const Mat& x_t, const std::vector<int>& timesteps,
                const std::vector<int>& labels, ForwardCache* cache = nullptr);

struct LossAndGrads {
  double loss = 0.0;
  ModelParams grads;
};

/// mean over the batch of ||eps_hat - eps||^2 and its exact gradient.
LossAndGrads loss_and_grads(const ModelParams& p, const Batch& batch);
double loss_only(const ModelParams& p, const Batch& batch);

/// Fills a batch: labels uniform, t uniform in 1..T, eps standard normal.
Batch draw_batch(MixtureSampler& data, Rng& rng, const DiffusionSchedule& schedule, int batch_size);

// ---------------------------------------------------------------------------
// Training

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double cosine = 0.0;  // mean off-diagonal cosine of c over classes at the reference timestep
  double npr = 0.0;     // nPR of mean |c| over classes at the reference timestep
};

using TrainingTrace = std::vector<TraceRow>;

/// Monitoring metrics at timestep t (default: T, the first sampling step).
TraceRow monitor(const ModelParams& p, int t);

struct TrainResult {
  ModelParams params;
  TrainingTrace trace;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int step, TrainingTrace trace)
      : Error(Errc::NonFiniteLoss, "non-finite loss at step " + std::to_string(step)),
        step_(step), trace_(std::move(trace)) {}
  int step() const noexcept { return step_; }
  const TrainingTrace& trace() const noexcept { return trace_; }

 private:
  int step_;
  TrainingTrace trace_;
};

using ProgressFn = std::function<void(const TraceRow&)>;

/// Adam on the full parameter set. A trace row is recorded before the first
/// update and after every `monitor_every` steps (plus the final step);
/// loss is evaluated on a fixed held-out batch.
TrainResult train(const ToyConfig& config, const ProgressFn& on_row = {});

std::string trace_to_csv(const TrainingTrace& trace);

// ---------------------------------------------------------------------------
// Checkpoints: a directory of NPY tensors (row-major float64) + manifest.json.

void save_checkpoint(const ModelParams& p, const std::filesystem::path& dir);
ModelParams load_checkpoint(const std::filesystem::path& dir);

}  // namespace condscope::toy
