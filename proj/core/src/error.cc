// Copyright 2026 The ckd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ckd/error.h"

namespace ckd {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kNumericInstability: return "numeric-instability";
    case ErrorCode::kStaleGradient: return "stale-gradient";
    case ErrorCode::kSinkhornNotConverged: return "sinkhorn-not-converged";
    case ErrorCode::kDegenerateClass: return "degenerate-class";
    case ErrorCode::kDegenerateHead: return "degenerate-head";
    case ErrorCode::kTrainingDiverged: return "training-diverged";
    case ErrorCode::kInvalidConfiguration: return "invalid-configuration";
    case ErrorCode::kUndefinedCorrelation: return "undefined-correlation";
    case ErrorCode::kMalformedFile: return "malformed-file";
    case ErrorCode::kSchemaMismatch: return "schema-mismatch";
    case ErrorCode::kHashMismatch: return "hash-mismatch";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kDanglingReference: return "dangling-reference";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ckd
