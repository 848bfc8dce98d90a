// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "condscope/error.hpp"

namespace condscope {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MagicMismatch: return "MagicMismatch";
    case Errc::UnsupportedDtype: return "UnsupportedDtype";
    case Errc::FortranOrderUnsupported: return "FortranOrderUnsupported";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::IoFailure: return "IoFailure";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::InvalidTensor: return "InvalidTensor";
    case Errc::ZeroNormRow: return "ZeroNormRow";
    case Errc::TooSmall: return "TooSmall";
    case Errc::AllZeroVector: return "AllZeroVector";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositiveTau: return "NonPositiveTau";
    case Errc::BadEdges: return "BadEdges";
    case Errc::BadConfig: return "BadConfig";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::OddDim: return "OddDim";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::BadClassCount: return "BadClassCount";
    case Errc::BadSchedule: return "BadSchedule";
    case Errc::BadTimestep: return "BadTimestep";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::UntrainedParams: return "UntrainedParams";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::BadParams: return "BadParams";
  }
  return "Unknown";
}

}  // namespace condscope
