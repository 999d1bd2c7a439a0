#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace namvp {

enum class ErrorKind {
  ZeroRow,
  DimensionMismatch,
  NonFinite,
  NonPositiveTemperature,
  UnbalancedMarginals,
  NumericalUnderflow,
  TooLarge,
  LabelOutOfRange,
  IndexMismatch,
  LengthMismatch,
  DomainError,
  ShapeMismatch,
  MissingTruth,
  RejectionFailure,
  InvalidConfig,
  IoError,
  BlobLengthMismatch,
  ValidationError,
  UnsupportedVersion,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Numerical failures map to a distinct CLI exit code.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::NumericalUnderflow || kind_ == ErrorKind::NonFinite;
  }

 private:
  ErrorKind kind_;
};

}  // namespace namvp
