// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/adaln.hpp"

#include <cmath>
#include <string>

#include "condscope/error.hpp"

namespace condscope {

std::vector<double> embed_timestep(double t, std::size_t dim) {
  if (dim < 2 || dim % 2 != 0) throw Error(Errc::OddDim, "timestep embedding width must be even and >= 2");
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq =
        std::exp(-std::log(kTimestepFrequencyBase) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::sin(t * freq);
    out[half + i] = std::cos(t * freq);
  }
  return out;
}

ConditionVector condition_vector(std::span<const double> y_emb, std::span<const double> t_emb) {
  if (y_emb.size() != t_emb.size()) {
    throw Error(Errc::LengthMismatch, "class embedding has " + std::to_string(y_emb.size()) +
                                          " entries, timestep embedding " + std::to_string(t_emb.size()));
  }
  ConditionVector c;
  c.values.resize(y_emb.size());
  for (std::size_t i = 0; i < y_emb.size(); ++i) c.values[i] = y_emb[i] + t_emb[i];
  return c;
}

ModulationParams modulation(std::span<const double> c, const Matrix& w_gamma, const Matrix& w_beta,
                            const Matrix* w_gate) {
  if (w_gamma.cols != c.size() || w_beta.cols != c.size() || (w_gate && w_gate->cols != c.size())) {
    throw Error(Errc::ShapeMismatch, "projection width does not match condition dimension");
  }
  if (w_beta.rows != w_gamma.rows || (w_gate && w_gate->rows != w_gamma.rows)) {
    throw Error(Errc::ShapeMismatch, "projections disagree on hidden width");
  }
  ModulationParams m;
  m.gamma = matvec(w_gamma, c);
  m.beta = matvec(w_beta, c);
  if (w_gate) m.gate = matvec(*w_gate, c);
  return m;
}

std::vector<double> adaln_forward(std::span<const double> h, const ModulationParams& m, double eps) {
  const std::size_t w = h.size();
  if (m.gamma.size() != w || m.beta.size() != w) {
    throw Error(Errc::WidthMismatch, "hidden width " + std::to_string(w) + " vs modulation width " +
                                         std::to_string(m.gamma.size()));
  }
  if (w == 0) return {};
  double mean = 0.0;
  for (double x : h) mean += x;
  mean /= static_cast<double>(w);
  double var = 0.0;
  for (double x : h) var += (x - mean) * (x - mean);
  var /= static_cast<double>(w);
  const double denom = std::sqrt(var) + eps;

  std::vector<double> out(w);
  for (std::size_t i = 0; i < w; ++i) out[i] = m.gamma[i] * ((h[i] - mean) / denom) + m.beta[i];
  return out;
}

}  // namespace condscope
