#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strokeml {

enum class ErrorKind {
  MissingColumn,
  UnparseableValue,
  EmptyFile,
  EmptyInput,
  UnknownLevel,
  InvalidBalance,
  NoMinoritySamples,
  MajoritySmallerThanMinority,
  TooFewRows,
  LengthMismatch,
  ZeroVariance,
  SingleClass,
  NotSymmetric,
  NoConvergence,
  SchemaMismatch,
  NonFiniteLoss,
  InvalidLabel,
  EmptyConfusion,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Expected failure of a library operation. `kind()` identifies the contract
/// that was violated; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnparseableValue: return "UnparseableValue";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UnknownLevel: return "UnknownLevel";
    case ErrorKind::InvalidBalance: return "InvalidBalance";
    case ErrorKind::NoMinoritySamples: return "NoMinoritySamples";
    case ErrorKind::MajoritySmallerThanMinority: return "MajoritySmallerThanMinority";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::EmptyConfusion: return "EmptyConfusion";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace strokeml
