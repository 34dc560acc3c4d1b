#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epac {

enum class ErrorKind {
  InvalidArgument,
  NonQuartic,
  NotConverged,
  UnboundedSpectrumRequest,
  TruncationTooSevere,
  NonConfiningPotential,
  AcceptanceOutOfRange,
  FitRejected,
  IntegrandNotLocalized,
  QOutOfRange,
  NonConvexAtOrigin,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every recoverable failure in the library is reported through this type;
/// `kind()` lets callers branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace epac
