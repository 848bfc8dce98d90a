// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace condscope {

enum class Errc {
  // tensor-io
  MagicMismatch,
  UnsupportedDtype,
  FortranOrderUnsupported,
  TruncatedPayload,
  MalformedHeader,
  IoFailure,
  NonFiniteValue,
  InvalidTensor,
  // metrics
  ZeroNormRow,
  TooSmall,
  AllZeroVector,
  OutOfRange,
  NonPositiveTau,
  BadEdges,
  // pruning
  BadConfig,
  KTooLarge,
  // adaln
  OddDim,
  LengthMismatch,
  ShapeMismatch,
  WidthMismatch,
  // toydit / sampler
  BadClassCount,
  BadSchedule,
  BadTimestep,
  NonFiniteLoss,
  UntrainedParams,
  EmptyClass,
  CountMismatch,
  // sparsekernel
  DimMismatch,
  BadParams,
};

std::string_view errc_name(Errc code) noexcept;

/// Every contract violation in the library surfaces as this exception; the
/// code identifies which one so callers (and the CLI exit-code mapping) can
/// branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// A ZeroNormRow error that also carries the offending row.
class ZeroNormRowError : public Error {
 public:
  explicit ZeroNormRowError(std::size_t row)
      : Error(Errc::ZeroNormRow, "row " + std::to_string(row) + " has zero norm"), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace condscope
