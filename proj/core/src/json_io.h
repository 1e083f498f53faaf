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

#ifndef CKD_SRC_JSON_IO_H_
#define CKD_SRC_JSON_IO_H_

#include <string>
#include <string_view>

#include "json.hpp"

#include "ckd/assess.h"
#include "ckd/distill.h"
#include "ckd/trainer.h"
#include "ckd/transport.h"

namespace ckd::internal {

using Json = nlohmann::json;

// Parses text, mapping syntax errors to kMalformedFile.
Json ParseJson(std::string_view text, std::string_view what);
// Pretty-printed canonical form with a trailing newline.
std::string DumpJson(const Json& j);

const Json& Field(const Json& j, std::string_view key);
double GetDouble(const Json& j, std::string_view key);
int GetInt(const Json& j, std::string_view key);
std::uint64_t GetUint64(const Json& j, std::string_view key);
bool GetBool(const Json& j, std::string_view key);
std::string GetString(const Json& j, std::string_view key);

// Checks "format" and "schema_version".
void CheckHeader(const Json& j, std::string_view format);
Json Header(std::string_view format);

Json MatrixToJson(const Matrix& m);  // {"rows", "cols", "data" row-major}
Matrix MatrixFromJson(const Json& j);
Json VectorToJson(const Vector& v);
Vector VectorFromJson(const Json& j);
Json LabelSetToJson(const LabelSet& labels);
LabelSet LabelSetFromJson(const Json& j);

Json ToJson(const OptimizerConfig& config);
Json ToJson(const DistillConfig& config);
Json ToJson(const AssessmentConfig& config);

// Overwrite only the keys present in `j`; unknown keys are rejected with
// kInvalidConfiguration.
void UpdateFromJson(const Json& j, OptimizerConfig& config);
void UpdateFromJson(const Json& j, DistillConfig& config);
void UpdateFromJson(const Json& j, AssessmentConfig& config);

}  // namespace ckd::internal

#endif  // CKD_SRC_JSON_IO_H_
