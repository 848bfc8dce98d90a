// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "condscope/matrix.hpp"

namespace condscope {

inline constexpr double kAdaLnEpsilon = 1e-5;
inline constexpr double kTimestepFrequencyBase = 10000.0;

/// Sinusoidal timestep embedding: sin(t * w_i) for the first half, cos for
/// the second, with w_i = base^(-i / (dim/2)).
std::vector<double> embed_timestep(double t, std::size_t dim);

struct ConditionVector {
  std::vector<double> values;
  std::optional<int> class_id;
  double timestep = 0.0;
};

/// c = y + t.
ConditionVector condition_vector(std::span<const double> y_emb, std::span<const double> t_emb);

struct ModulationParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::optional<std::vector<double>> gate;
};

/// gamma = W_gamma c, beta = W_beta c (and gate = W_gate c when given).
/// No bias: the map is linear in c.
ModulationParams modulation(std::span<const double> c, const Matrix& w_gamma, const Matrix& w_beta,
                            const Matrix* w_gate = nullptr);

/// gamma * (h - mean(h)) / (std(h) + eps) + beta, with the population
/// standard deviation over the feature axis.
std::vector<double> adaln_forward(std::span<const double> h, const ModulationParams& m,
                                  double eps = kAdaLnEpsilon);

}  // namespace condscope
