#pragma once

#include <stdexcept>
#include <string>

namespace rutfinder {

/// Failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  InvalidArgument,  ///< caller broke a precondition
  Io,               ///< file could not be opened, read or written
  Format,           ///< file contents malformed or inconsistent
  EmptyMap,         ///< disparity map carries no valid pixel
  Degenerate,       ///< geometry or statistics too poor for the requested fit
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(stage.empty() ? message : stage + ": " + message),
        kind_(kind),
        stage_(std::move(stage)),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Pipeline stage that raised the error, empty outside the pipeline.
  const std::string& stage() const noexcept { return stage_; }

  /// Message without the stage prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string detail_;
};

/// Raised when the disparity transformation produces negative values; the
/// caller may retry with a larger offset.
class NegativeTransformError : public Error {
 public:
  NegativeTransformError(std::size_t count, double minimum);

  std::size_t count() const noexcept { return count_; }
  double minimum() const noexcept { return minimum_; }

 private:
  std::size_t count_;
  double minimum_;
};

}  // namespace rutfinder
