#ifndef HYPERMIX_ERROR_HPP_
#define HYPERMIX_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hypermix {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  NotUnitNorm,
  AntipodalInputs,
  BatchTooSmall,
  KTooLarge,
  OutOfRange,
  UndefinedDirection,
  InvalidArgument,
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  TruncatedFile,
  TrailingData,
  NonFiniteValue,
  IoError,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as an Error. Row-wise batch
// operations attach the index of the first offending row.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> row = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  // The message without the code prefix and row suffix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<std::size_t> row_;
};

}  // namespace hypermix

#endif  // HYPERMIX_ERROR_HPP_
