// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace avse {

enum class ErrorCode {
  kDimension,
  kConfig,
  kInputTooShort,
  kContract,
  kEvaluation,
  kDegenerateSource,
  kDegenerateReference,
  kScheduling,
  kAlignment,
  kFormat,
  kIo,
  kNonFinite,
};

const char *error_code_name(ErrorCode code);

// Every failure raised by the library carries a stable machine-readable code;
// the CLI prints it as "error: <code>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

}  // namespace avse
