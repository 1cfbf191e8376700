// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/error.h"

namespace avse {

const char *error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInputTooShort: return "input-too-short";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kDegenerateSource: return "degenerate-source";
    case ErrorCode::kDegenerateReference: return "degenerate-reference";
    case ErrorCode::kScheduling: return "scheduling";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNonFinite: return "non-finite";
  }
  return "unknown";
}

}  // namespace avse
