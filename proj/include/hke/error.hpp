#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hke {

enum class ErrorKind {
  SpecInvalid,
  ConfigInvalid,
  QuadratureFailure,
  IntegrabilityViolation,
  RangeTooNarrow,
  OutOfRange,
  LowerIndexTooSmall,
  MissingTable,
  DimensionTooSmall,
  RegimeViolation,
  CheckpointMissing,
  HorizonTooShort,
  NotTransient,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SpecInvalid: return "SpecInvalid";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::IntegrabilityViolation: return "IntegrabilityViolation";
    case ErrorKind::RangeTooNarrow: return "RangeTooNarrow";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::LowerIndexTooSmall: return "LowerIndexTooSmall";
    case ErrorKind::MissingTable: return "MissingTable";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::RegimeViolation: return "RegimeViolation";
    case ErrorKind::CheckpointMissing: return "CheckpointMissing";
    case ErrorKind::HorizonTooShort: return "HorizonTooShort";
    case ErrorKind::NotTransient: return "NotTransient";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hke
