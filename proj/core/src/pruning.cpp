// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "condscope/error.hpp"

namespace condscope {

std::string_view to_string(PruneMode mode) noexcept {
  switch (mode) {
    case PruneMode::Tail: return "tail";
    case PruneMode::Head: return "head";
    case PruneMode::KeepTopK: return "keep_top_k";
    case PruneMode::ZeroTopK: return "zero_top_k";
  }
  return "tail";
}

PruneMode prune_mode_from_string(std::string_view s) {
  if (s == "tail") return PruneMode::Tail;
  if (s == "head") return PruneMode::Head;
  if (s == "keep_top_k" || s == "keep-top-k") return PruneMode::KeepTopK;
  if (s == "zero_top_k" || s == "zero-top-k") return PruneMode::ZeroTopK;
  throw Error(Errc::BadConfig, "unknown prune mode '" + std::string(s) + "'");
}

void PruneConfig::validate() const {
  const bool threshold_mode = mode == PruneMode::Tail || mode == PruneMode::Head;
  if (tau && k) throw Error(Errc::BadConfig, "tau and k are mutually exclusive");
  if (threshold_mode) {
    if (!tau) throw Error(Errc::BadConfig, std::string(to_string(mode)) + " mode needs tau");
    if (!(*tau > 0.0) || !std::isfinite(*tau)) throw Error(Errc::BadConfig, "tau must be finite and > 0");
  } else {
    if (!k) throw Error(Errc::BadConfig, std::string(to_string(mode)) + " mode needs k");
    if (*k == 0) throw Error(Errc::BadConfig, "k must be positive");
  }
}

nlohmann::json PruneConfig::to_json() const {
  nlohmann::json j = {{"mode", std::string(to_string(mode))}};
  if (tau) j["tau"] = *tau;
  if (k) j["k"] = *k;
  return j;
}

PruneConfig PruneConfig::from_json(const nlohmann::json& j) {
  PruneConfig cfg;
  cfg.mode = prune_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
  if (j.contains("k")) cfg.k = j["k"].get<std::size_t>();
  cfg.validate();
  return cfg;
}

void PruneSchedule::validate(std::size_t n_steps) const {
  if (policy != SchedulePolicy::LastKSteps) return;
  if (!k_steps || *k_steps == 0) throw Error(Errc::BadConfig, "last_k_steps needs k_steps >= 1");
  if (*k_steps > n_steps) {
    throw Error(Errc::BadConfig, "k_steps " + std::to_string(*k_steps) + " exceeds " +
                                     std::to_string(n_steps) + " steps");
  }
}

std::string PruneSchedule::label() const {
  switch (policy) {
    case SchedulePolicy::EveryStep: return "every";
    case SchedulePolicy::InitialOnly: return "initial";
    case SchedulePolicy::LastKSteps: return "lastk:" + std::to_string(k_steps.value_or(0));
  }
  return "every";
}

nlohmann::json PruneSchedule::to_json() const {
  nlohmann::json j;
  switch (policy) {
    case SchedulePolicy::EveryStep: j["policy"] = "every_step"; break;
    case SchedulePolicy::InitialOnly: j["policy"] = "initial_only"; break;
    case SchedulePolicy::LastKSteps: j["policy"] = "last_k_steps"; break;
  }
  if (k_steps) j["k_steps"] = *k_steps;
  return j;
}

PruneSchedule PruneSchedule::from_json(const nlohmann::json& j) {
  PruneSchedule s;
  const auto policy = j.at("policy").get<std::string>();
  if (policy == "every_step") s.policy = SchedulePolicy::EveryStep;
  else if (policy == "initial_only") s.policy = SchedulePolicy::InitialOnly;
  else if (policy == "last_k_steps") s.policy = SchedulePolicy::LastKSteps;
  else throw Error(Errc::BadConfig, "unknown schedule policy '" + policy + "'");
  if (j.contains("k_steps")) s.k_steps = j["k_steps"].get<std::size_t>();
  return s;
}

std::size_t default_last_k(std::size_t n_steps) {
  return std::max<std::size_t>(1, (n_steps + 9) / 10);
}

std::vector<std::size_t> top_k_indices(std::span<const double> c, std::size_t k) {
  if (k > c.size()) {
    throw Error(Errc::KTooLarge, "k=" + std::to_string(k) + " exceeds d=" + std::to_string(c.size()));
  }
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto by_magnitude = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(c[a]);
    const double mb = std::abs(c[b]);
    return ma != mb ? ma > mb : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), by_magnitude);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void prune_in_place(std::span<double> c, const PruneConfig& cfg) {
  cfg.validate();
  switch (cfg.mode) {
    case PruneMode::Tail: {
      const double tau = *cfg.tau;
      for (double& x : c) {
        if (std::abs(x) < tau) x = 0.0;
      }
      return;
    }
    case PruneMode::Head: {
      const double tau = *cfg.tau;
      for (double& x : c) {
        if (std::abs(x) > tau) x = 0.0;
      }
      return;
    }
    case PruneMode::KeepTopK: {
      const auto keep = top_k_indices(c, *cfg.k);
      std::size_t next = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (next < keep.size() && keep[next] == i) {
          ++next;
        } else {
          c[i] = 0.0;
        }
      }
      return;
    }
    case PruneMode::ZeroTopK: {
      for (std::size_t i : top_k_indices(c, *cfg.k)) c[i] = 0.0;
      return;
    }
  }
}

std::vector<double> prune(std::span<const double> c, const PruneConfig& cfg) {
  if (c.empty()) throw Error(Errc::BadConfig, "cannot prune an empty vector");
  std::vector<double> out(c.begin(), c.end());
  prune_in_place(out, cfg);
  return out;
}

bool should_prune(const PruneSchedule& schedule, std::size_t step_index, std::size_t n_steps) {
  if (step_index >= n_steps) {
    throw Error(Errc::OutOfRange, "step " + std::to_string(step_index) + " of " + std::to_string(n_steps));
  }
  schedule.validate(n_steps);
  switch (schedule.policy) {
    case SchedulePolicy::EveryStep: return true;
    case SchedulePolicy::InitialOnly: return step_index == 0;
    case SchedulePolicy::LastKSteps: return step_index >= n_steps - *schedule.k_steps;
  }
  return false;
}

std::string RemovedCount::table_format() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu/%zu (%.2f%%)", removed, total, 100.0 * fraction);
  return buf;
}

RemovedCount removed_count(std::span<const double> c, const PruneConfig& cfg) {
  const std::vector<double> pruned = prune(c, cfg);
  RemovedCount r;
  r.total = c.size();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0 && pruned[i] == 0.0) ++r.removed;
  }
  r.fraction = static_cast<double>(r.removed) / static_cast<double>(r.total);
  return r;
}

double tau_for_tail_fraction(std::span<const double> c, double fraction) {
  if (c.empty()) throw Error(Errc::BadConfig, "empty vector");
  if (!(fraction >= 0.0 && fraction < 1.0)) throw Error(Errc::BadConfig, "fraction must be in [0, 1)");
  std::vector<double> m(c.size());
  std::transform(c.begin(), c.end(), m.begin(), [](double x) { return std::abs(x); });
  std::sort(m.begin(), m.end());
  const auto r = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m.size())));
  double tau;
  if (r == 0) {
    tau = m.front() / 2.0;
  } else if (r >= m.size()) {
    tau = std::nextafter(m.back(), std::numeric_limits<double>::infinity());
  } else {
    tau = 0.5 * (m[r - 1] + m[r]);
  }
  return tau > 0.0 ? tau : std::numeric_limits<double>::min();
}

}  // namespace condscope
