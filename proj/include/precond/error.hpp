#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace precond {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  kInvalidInput = 1,
  kWrongOutcome,
  kNoEvents,
  kEmptyScreen,
  kRank,
  kSchema,
  kDegenerateStep,
  kConvergence,
  kDegenerateCovariate,
  kInvalidClass,
  kSpec,
  kSingular,
  kSize,
  kIo,
  kInternal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace precond
