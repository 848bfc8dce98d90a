// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace condscope {

enum class PruneMode {
  Tail,      // zero |c_i| < tau
  Head,      // zero |c_i| > tau
  KeepTopK,  // zero everything except the k largest |c_i|
  ZeroTopK,  // zero the k largest |c_i|
};

std::string_view to_string(PruneMode mode) noexcept;
PruneMode prune_mode_from_string(std::string_view s);

/// Which coordinates of a condition vector to zero. Threshold modes carry
/// `tau`, top-k modes carry `k`; never both.
struct PruneConfig {
  PruneMode mode = PruneMode::Tail;
  std::optional<double> tau;
  std::optional<std::size_t> k;

  static PruneConfig tail(double tau) { return {PruneMode::Tail, tau, std::nullopt}; }
  static PruneConfig head(double tau) { return {PruneMode::Head, tau, std::nullopt}; }
  static PruneConfig keep_top_k(std::size_t k) { return {PruneMode::KeepTopK, std::nullopt, k}; }
  static PruneConfig zero_top_k(std::size_t k) { return {PruneMode::ZeroTopK, std::nullopt, k}; }

  /// Throws BadConfig if the parameters do not match the mode.
  void validate() const;

  nlohmann::json to_json() const;
  static PruneConfig from_json(const nlohmann::json& j);
};

enum class SchedulePolicy { EveryStep, InitialOnly, LastKSteps };

/// When along a reverse trajectory the pruning hook fires.
struct PruneSchedule {
  SchedulePolicy policy = SchedulePolicy::EveryStep;
  std::optional<std::size_t> k_steps;

  static PruneSchedule every_step() { return {SchedulePolicy::EveryStep, std::nullopt}; }
  static PruneSchedule initial_only() { return {SchedulePolicy::InitialOnly, std::nullopt}; }
  static PruneSchedule last_k_steps(std::size_t k) { return {SchedulePolicy::LastKSteps, k}; }

  void validate(std::size_t n_steps) const;
  std::string label() const;

  nlohmann::json to_json() const;
  static PruneSchedule from_json(const nlohmann::json& j);
};

/// ceil(0.1 * n_steps), at least 1.
std::size_t default_last_k(std::size_t n_steps);

/// Indices of the k largest |c_i|, ties resolved toward the lower index.
/// Returned in ascending index order.
std::vector<std::size_t> top_k_indices(std::span<const double> c, std::size_t k);

/// Applies the pruning operator. Surviving coordinates are copied untouched.
std::vector<double> prune(std::span<const double> c, const PruneConfig& cfg);
void prune_in_place(std::span<double> c, const PruneConfig& cfg);

/// step_index counts sampling steps from 0 (the first, noisiest step).
bool should_prune(const PruneSchedule& schedule, std::size_t step_index, std::size_t n_steps);

struct RemovedCount {
  std::size_t removed = 0;
  std::size_t total = 0;
  double fraction = 0.0;

  /// "removed/total (pct%)" with two decimals, e.g. "448/1152 (38.94%)".
  std::string table_format() const;
};

/// Entries that `prune` turns from nonzero into zero.
RemovedCount removed_count(std::span<const double> c, const PruneConfig& cfg);

/// Threshold that removes round(fraction * d) coordinates of `c` under the
/// strict tail rule: the midpoint between the last removed and first kept
/// magnitude. Always > 0.
double tau_for_tail_fraction(std::span<const double> c, double fraction);

}  // namespace condscope
