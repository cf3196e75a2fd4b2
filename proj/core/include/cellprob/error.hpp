#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cellprob {

/// Machine-readable failure categories. Every error raised by the library
/// carries one of these; the CLI reports the name in its error JSON.
enum class ErrorCode {
  InvalidArgument,
  ConstantVolume,
  VolumeTooSmall,
  ShapeMismatch,
  EmptyWindow,
  SingleClass,
  DimensionMismatch,
  NonFiniteLoss,
  NonPositiveAleatoric,
  EmptySampleList,
  EmptyStructure,
  DegenerateESD,
  EmptyCells,
  AllZeroDifferences,
  PackingInfeasible,
  Io,
  Format,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace cellprob
