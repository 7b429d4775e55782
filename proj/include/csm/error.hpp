#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csm {

// Stable error classes. The integer values double as CLI exit codes and must
// not be renumbered.
enum class ErrorCode : int {
  kUsage = 1,
  kInvalidInput = 2,
  kInvalidLevel = 3,
  kDegenerateMarginal = 4,
  kInvalidRank = 5,
  kSingularConditioning = 6,
  kInvalidMode = 7,
  kLayoutMismatch = 8,
  kCorrespondenceError = 9,
  kMissingRecord = 10,
  kFormatError = 11,
  kInvalidConfig = 12,
  kInvalidTask = 13,
  kIoError = 14,
};

std::string_view error_class_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view class_name() const { return error_class_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string &message) {
  if (!condition) fail(code, message);
}

}  // namespace csm
