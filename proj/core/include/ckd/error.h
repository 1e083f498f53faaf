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

#ifndef CKD_ERROR_H_
#define CKD_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ckd {

enum class ErrorCode {
  kInvalidInput,
  kNumericInstability,
  kStaleGradient,
  kSinkhornNotConverged,
  kDegenerateClass,
  kDegenerateHead,
  kTrainingDiverged,
  kInvalidConfiguration,
  kUndefinedCorrelation,
  kMalformedFile,
  kSchemaMismatch,
  kHashMismatch,
  kEmptyInput,
  kDuplicateId,
  kDanglingReference,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this type. The code is stable
// and intended for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace ckd

#endif  // CKD_ERROR_H_
