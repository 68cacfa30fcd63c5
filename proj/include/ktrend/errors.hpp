#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ktrend {

enum class ErrorKind {
  MalformedRow,
  OrderViolation,
  RangeViolation,
  InvalidArgument,
  SeriesTooShort,
  ZeroWeightSum,
  DimensionMismatch,
  SingularResidual,
  InvalidParams,
  InsufficientHistory,
  EmptyLedger,
  InvalidSpace,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::OrderViolation: return "OrderViolation";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::ZeroWeightSum: return "ZeroWeightSum";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularResidual: return "SingularResidual";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::EmptyLedger: return "EmptyLedger";
    case ErrorKind::InvalidSpace: return "InvalidSpace";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ktrend
