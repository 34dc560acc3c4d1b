#include "epac/errors.hpp"

namespace epac {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonQuartic: return "NonQuartic";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::UnboundedSpectrumRequest: return "UnboundedSpectrumRequest";
    case ErrorKind::TruncationTooSevere: return "TruncationTooSevere";
    case ErrorKind::NonConfiningPotential: return "NonConfiningPotential";
    case ErrorKind::AcceptanceOutOfRange: return "AcceptanceOutOfRange";
    case ErrorKind::FitRejected: return "FitRejected";
    case ErrorKind::IntegrandNotLocalized: return "IntegrandNotLocalized";
    case ErrorKind::QOutOfRange: return "QOutOfRange";
    case ErrorKind::NonConvexAtOrigin: return "NonConvexAtOrigin";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace epac
