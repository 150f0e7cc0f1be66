#include "hypermix/error.hpp"

namespace hypermix {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotUnitNorm: return "NotUnitNorm";
    case ErrorCode::AntipodalInputs: return "AntipodalInputs";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UndefinedDirection: return "UndefinedDirection";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> row) {
  std::string out{to_string(code)};
  out += ": ";
  out += message;
  if (row) out += " (row " + std::to_string(*row) + ")";
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> row)
    : std::runtime_error(decorate(code, message, row)), code_(code), message_(message), row_(row) {}

}  // namespace hypermix
