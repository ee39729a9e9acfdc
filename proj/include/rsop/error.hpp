#pragma once

#include <stdexcept>
#include <string>

namespace rsop {

enum class ErrorCode {
  kInvalidConfig,
  kInvalidTiming,
  kStageOutOfRange,
  kTooFewSamples,
  kDegenerateSnr,
  kEmptyGrid,
  kShortFrame,
  kInvalidSchedule,
  kConfigParse,
  kUnwritableOutput,
};

const char* to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rsop
