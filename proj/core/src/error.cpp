#include "cellprob/error.hpp"

namespace cellprob {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConstantVolume: return "ConstantVolume";
    case ErrorCode::VolumeTooSmall: return "VolumeTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NonPositiveAleatoric: return "NonPositiveAleatoric";
    case ErrorCode::EmptySampleList: return "EmptySampleList";
    case ErrorCode::EmptyStructure: return "EmptyStructure";
    case ErrorCode::DegenerateESD: return "DegenerateESD";
    case ErrorCode::EmptyCells: return "EmptyCells";
    case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
    case ErrorCode::PackingInfeasible: return "PackingInfeasible";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

}  // namespace cellprob
