// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/toydit.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "condscope/adaln.hpp"
#include "condscope/io.hpp"
#include "condscope/metrics.hpp"

namespace condscope::toy {
namespace {

// Stream ids derived from the config seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kMonitorDataStream = 3;
constexpr std::uint64_t kMonitorBatchStream = 4;

Mat silu(const Mat& z) { return (z.array() / (1.0 + (-z.array()).exp())).matrix(); }

Mat silu_grad(const Mat& z) {
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
  return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
}

Mat affine(const Mat& w, const Mat& x, const Mat& b) {
  Mat y = w * x;
  y.colwise() += b.col(0);
  return y;
}

Mat uniform_fill(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  Mat m(rows, cols);
  // Fill row-major so the draw order matches the on-disk layout.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

void linear_init(Rng& rng, Mat& w, Mat& b, Eigen::Index out, Eigen::Index in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  w = uniform_fill(rng, out, in, bound);
  b = uniform_fill(rng, out, 1, bound);
}

std::vector<Mat*> flat(ModelParams& p) {
  std::vector<Mat*> out;
  p.for_each([&](const std::string&, Mat& m) { out.push_back(&m); });
  return out;
}

TraceRow monitor_row(const ModelParams& p, const Batch& held_out, int step) {
  TraceRow row = monitor(p, p.config.n_timesteps);
  row.step = step;
  row.loss = loss_only(p, held_out);
  return row;
}

}  // namespace

// ---------------------------------------------------------------------------
// ToyConfig

void ToyConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(Errc::BadConfig, why); };
  if (n_classes < 2) fail("n_classes must be >= 2");
  if (cond_dim < 1 || hidden_width < 1 || n_blocks < 1) fail("dimensions must be positive");
  if (n_timesteps != 50 && n_timesteps != 100 && n_timesteps != 200 && n_timesteps != 500) {
    fail("n_timesteps must be one of 50, 100, 200, 500 (got " + std::to_string(n_timesteps) + ")");
  }
  if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) fail("need 0 < beta_min < beta_max < 1");
  if (train_steps < 0) fail("train_steps must be >= 0");
  if (batch < 1) fail("batch must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("adam decay rates must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (monitor_every < 1) fail("monitor_every must be positive");
  if (freq_dim < 2 || freq_dim % 2 != 0) fail("freq_dim must be even and >= 2");
  if (!(class_init_std >= 0.0)) fail("class_init_std must be >= 0");
}

nlohmann::json ToyConfig::to_json() const {
  return {{"n_classes", n_classes},
          {"cond_dim", cond_dim},
          {"hidden_width", hidden_width},
          {"n_blocks", n_blocks},
          {"n_timesteps", n_timesteps},
          {"beta_min", beta_min},
          {"beta_max", beta_max},
          {"train_steps", train_steps},
          {"batch", batch},
          {"lr", lr},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"weight_decay", weight_decay},
          {"seed", seed},
          {"monitor_every", monitor_every},
          {"freq_dim", freq_dim},
          {"class_init_std", class_init_std},
          {"modulation_bias", modulation_bias}};
}

ToyConfig ToyConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::BadConfig, "config must be a JSON object");
  ToyConfig c;
  const std::set<std::string> known = [&] {
    std::set<std::string> keys;
    const nlohmann::json defaults = c.to_json();
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error(Errc::BadConfig, "unknown config key '" + k + "'");
  }
  try {
    c.n_classes = j.value("n_classes", c.n_classes);
    c.cond_dim = j.value("cond_dim", c.cond_dim);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.n_blocks = j.value("n_blocks", c.n_blocks);
    c.n_timesteps = j.value("n_timesteps", c.n_timesteps);
    c.beta_min = j.value("beta_min", c.beta_min);
    c.beta_max = j.value("beta_max", c.beta_max);
    c.train_steps = j.value("train_steps", c.train_steps);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    c.monitor_every = j.value("monitor_every", c.monitor_every);
    c.freq_dim = j.value("freq_dim", c.freq_dim);
    c.class_init_std = j.value("class_init_std", c.class_init_std);
    c.modulation_bias = j.value("modulation_bias", c.modulation_bias);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadConfig, e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Data

Eigen::Vector2d MixtureSpec::mean(int k) const {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_classes);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

Mat MixtureSpec::means() const {
  Mat m(n_classes, 2);
  for (int k = 0; k < n_classes; ++k) m.row(k) = mean(k).transpose();
  return m;
}

MixtureSampler::MixtureSampler(int n_classes, std::uint64_t seed) : rng_(seed) {
  if (n_classes < 2) throw Error(Errc::BadClassCount, "need at least 2 classes");
  spec_.n_classes = n_classes;
}

Eigen::Vector2d MixtureSampler::draw_from(int label) {
  if (label < 0 || label >= spec_.n_classes) throw Error(Errc::BadClassCount, "label out of range");
  const double ex = rng_.normal();
  const double ey = rng_.normal();
  return spec_.mean(label) + spec_.sigma * Eigen::Vector2d(ex, ey);
}

std::pair<Eigen::Vector2d, int> MixtureSampler::draw() {
  const int label = static_cast<int>(rng_.below(static_cast<std::uint64_t>(spec_.n_classes)));
  return {draw_from(label), label};
}

DiffusionSchedule diffusion_schedule(int n_timesteps, double beta_min, double beta_max) {
  if (n_timesteps < 1 || !(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) {
    throw Error(Errc::BadSchedule, "need T >= 1 and 0 < beta_min < beta_max < 1");
  }
  DiffusionSchedule s;
  const auto n = static_cast<std::size_t>(n_timesteps);
  s.beta.resize(n);
  s.alpha.resize(n);
  s.alpha_bar.resize(n);
  double prod = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    s.beta[i] = beta_min + (beta_max - beta_min) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

Eigen::Vector2d q_sample(const DiffusionSchedule& schedule, const Eigen::Vector2d& x0, int t,
                         const Eigen::Vector2d& eps) {
  if (t < 1 || t > schedule.n_steps()) throw Error(Errc::BadTimestep, "t must be in 1..T");
  const double ab = schedule.alpha_bar_at(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

// ---------------------------------------------------------------------------
// Parameters

void ModelParams::for_each(const std::function<void(const std::string&, Mat&)>& f) {
  f("class_table", class_table);
  f("t_w1", t_w1);
  f("t_b1", t_b1);
  f("t_w2", t_w2);
  f("t_b2", t_b2);
  f("in_w", in_w);
  f("in_b", in_b);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i) + ".";
    BlockParams& b = blocks[i];
    f(prefix + "w_gamma", b.w_gamma);
    f(prefix + "w_beta", b.w_beta);
    f(prefix + "w_gate", b.w_gate);
    if (config.modulation_bias) {
      f(prefix + "b_gamma", b.b_gamma);
      f(prefix + "b_beta", b.b_beta);
      f(prefix + "b_gate", b.b_gate);
    }
    f(prefix + "mlp_w1", b.mlp_w1);
    f(prefix + "mlp_b1", b.mlp_b1);
    f(prefix + "mlp_w2", b.mlp_w2);
    f(prefix + "mlp_b2", b.mlp_b2);
  }
  f("out_w", out_w);
  f("out_b", out_b);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Mat&)>& f) const {
  const_cast<ModelParams*>(this)->for_each([&](const std::string& name, Mat& m) { f(name, m); });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Mat& m) { ok = ok && m.allFinite(); });
  return ok;
}

bool ModelParams::gates_all_zero() const {
  for (const auto& b : blocks) {
    if (!b.w_gate.isZero(0.0)) return false;
    if (config.modulation_bias && !b.b_gate.isZero(0.0)) return false;
  }
  return true;
}

ModelParams init_params(const ToyConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed, kInitStream);
  const Eigen::Index d = config.cond_dim;
  const Eigen::Index w = config.hidden_width;
  const Eigen::Index f = config.freq_dim;

  ModelParams p;
  p.config = config;
  p.class_table.resize(config.n_classes, d);
  for (Eigen::Index r = 0; r < p.class_table.rows(); ++r)
    for (Eigen::Index c = 0; c < d; ++c) p.class_table(r, c) = config.class_init_std * rng.normal();
  linear_init(rng, p.t_w1, p.t_b1, d, f);
  linear_init(rng, p.t_w2, p.t_b2, d, d);
  linear_init(rng, p.in_w, p.in_b, w, 2);
  p.blocks.resize(static_cast<std::size_t>(config.n_blocks));
  for (auto& b : p.blocks) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    b.w_gamma = uniform_fill(rng, w, d, bound);
    b.w_beta = uniform_fill(rng, w, d, bound);
    b.w_gate = Mat::Zero(w, d);
    if (config.modulation_bias) {
      b.b_gamma = Mat::Zero(w, 1);
      b.b_beta = Mat::Zero(w, 1);
      b.b_gate = Mat::Zero(w, 1);
    }
    linear_init(rng, b.mlp_w1, b.mlp_b1, 4 * w, w);
    linear_init(rng, b.mlp_w2, b.mlp_b2, w, 4 * w);
  }
  linear_init(rng, p.out_w, p.out_b, 2, w);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.for_each([](const std::string&, Mat& m) { m.setZero(); });
  return z;
}

// ---------------------------------------------------------------------------
// Forward

Mat timestep_features(const std::vector<int>& timesteps, int freq_dim) {
  Mat f(freq_dim, static_cast<Eigen::Index>(timesteps.size()));
  for (std::size_t b = 0; b < timesteps.size(); ++b) {
    const std::vector<double> e = embed_timestep(static_cast<double>(timesteps[b]), static_cast<std::size_t>(freq_dim));
    for (int k = 0; k < freq_dim; ++k) f(k, static_cast<Eigen::Index>(b)) = e[static_cast<std::size_t>(k)];
  }
  return f;
}

namespace {

Mat condition_columns(const ModelParams& p, const std::vector<int>& labels, const std::vector<int>& timesteps,
                      ForwardCache* cache) {
  if (labels.size() != timesteps.size()) throw Error(Errc::ShapeMismatch, "labels/timesteps length mismatch");
  Mat features = timestep_features(timesteps, p.config.freq_dim);
  Mat t_pre = affine(p.t_w1, features, p.t_b1);
  Mat t_act = silu(t_pre);
  Mat cond = affine(p.t_w2, t_act, p.t_b2);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] < 0 || labels[b] >= p.class_table.rows()) throw Error(Errc::ShapeMismatch, "label out of range");
    cond.col(static_cast<Eigen::Index>(b)) += p.class_table.row(labels[b]).transpose();
  }
  if (cache) {
    cache->features = std::move(features);
    cache->t_pre = std::move(t_pre);
    cache->t_act = std::move(t_act);
  }
  return cond;
}

}  // namespace

Mat condition_batch(const ModelParams& p, const std::vector<int>& labels, const std::vector<int>& timesteps) {
  return condition_columns(p, labels, timesteps, nullptr);
}

Mat class_conditions(const ModelParams& p, int t) {
  std::vector<int> labels(static_cast<std::size_t>(p.config.n_classes));
  for (int k = 0; k < p.config.n_classes; ++k) labels[static_cast<std::size_t>(k)] = k;
  const std::vector<int> ts(labels.size(), t);
  return condition_batch(p, labels, ts).transpose();
}

Mat forward_with_condition(const ModelParams& p, const Mat& x_t, const Mat& cond, ForwardCache* cache) {
  if (x_t.rows() != 2 || cond.rows() != p.config.cond_dim || cond.cols() != x_t.cols()) {
    throw Error(Errc::ShapeMismatch, "x_t must be 2 x B and cond cond_dim x B");
  }
  const bool bias = p.config.modulation_bias;
  const double inv_w = 1.0 / static_cast<double>(p.config.hidden_width);
  Mat h = affine(p.in_w, x_t, p.in_b);
  if (cache) cache->blocks.resize(p.blocks.size());

  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const BlockParams& bp = p.blocks[i];
    Mat gamma = bp.w_gamma * cond;
    Mat beta = bp.w_beta * cond;
    Mat gate = bp.w_gate * cond;
    if (bias) {
      gamma.colwise() += bp.b_gamma.col(0);
      beta.colwise() += bp.b_beta.col(0);
      gate.colwise() += bp.b_gate.col(0);
    }
    const Eigen::RowVectorXd mean = h.colwise().sum() * inv_w;
    Mat centered = h.rowwise() - mean;
    const Eigen::RowVectorXd sd = (centered.array().square().colwise().sum() * inv_w).sqrt().matrix();
    const Eigen::RowVectorXd inv_denom = (sd.array() + kAdaLnEpsilon).inverse().matrix();
    Mat normed = (centered.array().rowwise() * inv_denom.array()).matrix();
    Mat act_in = (gamma.array() * normed.array() + beta.array()).matrix();
    Mat mlp_pre = affine(bp.mlp_w1, act_in, bp.mlp_b1);
    Mat mlp_act = silu(mlp_pre);
    Mat mlp_out = affine(bp.mlp_w2, mlp_act, bp.mlp_b2);
    Mat h_next = h + (gate.array() * mlp_out.array()).matrix();

    if (cache) {
      auto& c = cache->blocks[i];
      c.h_in = std::move(h);
      c.centered = std::move(centered);
      c.sd = sd;
      c.inv_denom = inv_denom;
      c.normed = std::move(normed);
      c.gamma = std::move(gamma);
      c.beta = std::move(beta);
      c.gate = std::move(gate);
      c.act_in = std::move(act_in);
      c.mlp_pre = std::move(mlp_pre);
      c.mlp_act = std::move(mlp_act);
      c.mlp_out = std::move(mlp_out);
    }
    h = std::move(h_next);
  }
  Mat out = affine(p.out_w, h, p.out_b);
  if (cache) cache->h_final = std::move(h);
  return out;
}

Mat forward_eps(const ModelParams& p, const Mat& x_t, const std::vector<int>& timesteps,
                const std::vector<int>& labels, ForwardCache* cache) {
  Mat cond = condition_columns(p, labels, timesteps, cache);
  Mat out = forward_with_condition(p, x_t, cond, cache);
  if (cache) cache->cond = std::move(cond);
  return out;
}

// ---------------------------------------------------------------------------
// Loss and analytic gradients

double loss_only(const ModelParams& p, const Batch& batch) {
  const Mat pred = forward_eps(p, batch.x_t, batch.timesteps, batch.labels);
  return (pred - batch.eps).squaredNorm() / static_cast<double>(batch.size());
}

LossAndGrads loss_and_grads(const ModelParams& p, const Batch& batch) {
  ForwardCache cache;
  const Mat pred = forward_eps(p, batch.x_t, batch.timesteps, batch.labels, &cache);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const Mat resid = pred - batch.eps;

  LossAndGrads out;
  out.loss = resid.squaredNorm() * inv_b;
  out.grads = zeros_like(p);
  ModelParams& g = out.grads;
  const bool bias = p.config.modulation_bias;
  const double w = static_cast<double>(p.config.hidden_width);

  const Mat d_out = 2.0 * inv_b * resid;
  g.out_w = d_out * cache.h_final.transpose();
  g.out_b = d_out.rowwise().sum();
  Mat d_h = p.out_w.transpose() * d_out;
  Mat d_cond = Mat::Zero(cache.cond.rows(), cache.cond.cols());

  for (std::size_t ii = p.blocks.size(); ii-- > 0;) {
    const BlockParams& bp = p.blocks[ii];
    BlockParams& gb = g.blocks[ii];
    const auto& c = cache.blocks[ii];

    // h_next = h + gate * mlp_out
    const Mat d_gate = (d_h.array() * c.mlp_out.array()).matrix();
    const Mat d_mlp_out = (d_h.array() * c.gate.array()).matrix();

    gb.mlp_w2 = d_mlp_out * c.mlp_act.transpose();
    gb.mlp_b2 = d_mlp_out.rowwise().sum();
    const Mat d_mlp_pre = ((bp.mlp_w2.transpose() * d_mlp_out).array() * silu_grad(c.mlp_pre).array()).matrix();
    gb.mlp_w1 = d_mlp_pre * c.act_in.transpose();
    gb.mlp_b1 = d_mlp_pre.rowwise().sum();
    const Mat d_act = bp.mlp_w1.transpose() * d_mlp_pre;

    // act_in = gamma * normed + beta
    const Mat d_gamma = (d_act.array() * c.normed.array()).matrix();
    const Mat& d_beta = d_act;
    const Mat d_normed = (d_act.array() * c.gamma.array()).matrix();

    // normed = centered / (sd + eps), sd = sqrt(mean(centered^2))
    Mat d_centered = (d_normed.array().rowwise() * c.inv_denom.array()).matrix();
    const Eigen::RowVectorXd d_sd =
        -((d_normed.array() * c.centered.array()).colwise().sum() * c.inv_denom.array().square()).matrix();
    for (Eigen::Index col = 0; col < d_centered.cols(); ++col) {
      if (c.sd(col) > 0.0) d_centered.col(col) += (d_sd(col) / (w * c.sd(col))) * c.centered.col(col);
    }
    const Eigen::RowVectorXd d_centered_mean = d_centered.colwise().sum() / w;
    d_h += d_centered.rowwise() - d_centered_mean;

    gb.w_gamma = d_gamma * cache.cond.transpose();
    gb.w_beta = d_beta * cache.cond.transpose();
    gb.w_gate = d_gate * cache.cond.transpose();
    if (bias) {
      gb.b_gamma = d_gamma.rowwise().sum();
      gb.b_beta = d_beta.rowwise().sum();
      gb.b_gate = d_gate.rowwise().sum();
    }
    d_cond += bp.w_gamma.transpose() * d_gamma + bp.w_beta.transpose() * d_beta + bp.w_gate.transpose() * d_gate;
  }

  g.in_w = d_h * batch.x_t.transpose();
  g.in_b = d_h.rowwise().sum();

  for (std::size_t b = 0; b < batch.size(); ++b) {
    g.class_table.row(batch.labels[b]) += d_cond.col(static_cast<Eigen::Index>(b)).transpose();
  }
  g.t_w2 = d_cond * cache.t_act.transpose();
  g.t_b2 = d_cond.rowwise().sum();
  const Mat d_t_pre = ((p.t_w2.transpose() * d_cond).array() * silu_grad(cache.t_pre).array()).matrix();
  g.t_w1 = d_t_pre * cache.features.transpose();
  g.t_b1 = d_t_pre.rowwise().sum();
  return out;
}

Batch draw_batch(MixtureSampler& data, Rng& rng, const DiffusionSchedule& schedule, int batch_size) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(batch_size);
  b.x0.resize(2, n);
  b.eps.resize(2, n);
  b.x_t.resize(2, n);
  b.labels.resize(static_cast<std::size_t>(batch_size));
  b.timesteps.resize(static_cast<std::size_t>(batch_size));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [x0, label] = data.draw();
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.n_steps())));
    const Eigen::Vector2d eps(rng.normal(), rng.normal());
    b.x0.col(i) = x0;
    b.eps.col(i) = eps;
    b.x_t.col(i) = q_sample(schedule, x0, t, eps);
    b.labels[static_cast<std::size_t>(i)] = label;
    b.timesteps[static_cast<std::size_t>(i)] = t;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Training

TraceRow monitor(const ModelParams& p, int t) {
  const Mat c = class_conditions(p, t);
  std::vector<double> flat_rows(static_cast<std::size_t>(c.size()));
  for (Eigen::Index r = 0; r < c.rows(); ++r)
    for (Eigen::Index k = 0; k < c.cols(); ++k) flat_rows[static_cast<std::size_t>(r * c.cols() + k)] = c(r, k);
  const Tensor table = Tensor::matrix(static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(c.cols()),
                                      std::move(flat_rows));
  TraceRow row;
  row.cosine = cosine_summary(cosine_matrix(table)).mean_offdiag;
  const std::vector<double> magnitude = mean_abs_rows(table);
  row.npr = npr(participation_ratio(magnitude), magnitude.size());
  return row;
}

TrainResult train(const ToyConfig& config, const ProgressFn& on_row) {
  config.validate();
  const DiffusionSchedule schedule = diffusion_schedule(config.n_timesteps, config.beta_min, config.beta_max);
  MixtureSampler data(config.n_classes, mix_seed(config.seed) ^ mix_seed(kDataStream));
  Rng batch_rng(config.seed, kBatchStream);
  MixtureSampler held_out_data(config.n_classes, mix_seed(config.seed) ^ mix_seed(kMonitorDataStream));
  Rng held_out_rng(config.seed, kMonitorBatchStream);
  const Batch held_out = draw_batch(held_out_data, held_out_rng, schedule, config.batch);

  TrainResult result{init_params(config, config.seed), {}};
  ModelParams& params = result.params;
  ModelParams m1 = zeros_like(params);
  ModelParams m2 = zeros_like(params);
  const std::vector<Mat*> p_flat = flat(params);
  const std::vector<Mat*> m1_flat = flat(m1);
  const std::vector<Mat*> m2_flat = flat(m2);

  auto record = [&](int step) {
    const TraceRow row = monitor_row(params, held_out, step);
    result.trace.push_back(row);
    if (on_row) on_row(row);
    if (!std::isfinite(row.loss)) throw TrainingDiverged(step, result.trace);
  };
  record(0);

  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  double b1_pow = 1.0;
  double b2_pow = 1.0;
  for (int step = 1; step <= config.train_steps; ++step) {
    const Batch batch = draw_batch(data, batch_rng, schedule, config.batch);
    LossAndGrads lg = loss_and_grads(params, batch);
    if (!std::isfinite(lg.loss)) throw TrainingDiverged(step, result.trace);
    const std::vector<Mat*> g_flat = flat(lg.grads);

    b1_pow *= b1;
    b2_pow *= b2;
    const double step_size = config.lr / (1.0 - b1_pow);
    const double v_scale = 1.0 / std::sqrt(1.0 - b2_pow);
    for (std::size_t i = 0; i < p_flat.size(); ++i) {
      auto p = p_flat[i]->array();
      auto m = m1_flat[i]->array();
      auto v = m2_flat[i]->array();
      const auto g = g_flat[i]->array();
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.square();
      if (config.weight_decay > 0.0) p -= config.lr * config.weight_decay * p;
      p -= step_size * m / (v.sqrt() * v_scale + config.adam_eps);
    }
    if (step % config.monitor_every == 0 || step == config.train_steps) record(step);
  }
  return result;
}

std::string trace_to_csv(const TrainingTrace& trace) {
  std::string out = "step,loss,cosine,npr\n";
  char buf[160];
  for (const TraceRow& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.step, r.loss, r.cosine, r.npr);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kManifestFormat = "condscope-toy-checkpoint";

Tensor to_row_major_tensor(const Mat& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return Tensor::matrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(data));
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json entries = nlohmann::json::array();
  p.for_each([&](const std::string& name, const Mat& m) {
    const std::string file = name + ".npy";
    write_npy(to_row_major_tensor(m), dir / file);
    entries.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"file", file}});
  });
  const nlohmann::json manifest = {{"format", kManifestFormat},
                                   {"version", 1},
                                   {"config", p.config.to_json()},
                                   {"parameters", entries}};
  write_report(manifest, dir / "manifest.json");
}

ModelParams load_checkpoint(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_report(dir / "manifest.json");
  if (manifest.value("format", std::string()) != kManifestFormat) {
    throw Error(Errc::BadConfig, dir.string() + " is not a toy-model checkpoint");
  }
  const ToyConfig config = ToyConfig::from_json(manifest.at("config"));
  ModelParams p = init_params(config, 0);
  std::map<std::string, std::string> files;
  for (const auto& e : manifest.at("parameters")) files[e.at("name").get<std::string>()] = e.at("file").get<std::string>();

  p.for_each([&](const std::string& name, Mat& m) {
    const auto it = files.find(name);
    if (it == files.end()) throw Error(Errc::BadConfig, "checkpoint is missing " + name);
    const Tensor t = read_npy(dir / it->second);
    if (t.rank() != 2 || static_cast<Eigen::Index>(t.rows()) != m.rows() ||
        static_cast<Eigen::Index>(t.cols()) != m.cols()) {
      throw Error(Errc::ShapeMismatch, "parameter " + name + " has an unexpected shape");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.at(static_cast<std::size_t>(r * m.cols() + c));
  });
  return p;
}

}  // namespace condscope::toy
