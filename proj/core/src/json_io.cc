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

#include "json_io.h"

#include <functional>
#include <map>

#include "ckd/error.h"
#include "ckd/store.h"

namespace ckd::internal {
namespace {

[[noreturn]] void Malformed(const std::string& message) {
  Fail(ErrorCode::kMalformedFile, message);
}

using Setter = std::function<void(const Json&)>;

void ApplySetters(const Json& j, const std::map<std::string, Setter>& setters,
                  std::string_view what) {
  if (!j.is_object()) {
    Fail(ErrorCode::kInvalidConfiguration, std::string(what) + " must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      Fail(ErrorCode::kInvalidConfiguration,
           "unknown key '" + key + "' in " + std::string(what));
    }
    it->second(value);
  }
}

double AsDouble(const Json& v, std::string_view key) {
  if (!v.is_number()) Malformed("field '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

int AsInt(const Json& v, std::string_view key) {
  if (!v.is_number_integer()) Malformed("field '" + std::string(key) + "' must be an integer");
  return v.get<int>();
}

std::uint64_t AsUint64(const Json& v, std::string_view key) {
  if (!v.is_number_unsigned()) {
    Malformed("field '" + std::string(key) + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string AsString(const Json& v, std::string_view key) {
  if (!v.is_string()) Malformed("field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

bool AsBool(const Json& v, std::string_view key) {
  if (!v.is_boolean()) Malformed("field '" + std::string(key) + "' must be a boolean");
  return v.get<bool>();
}

std::string_view DomainName(SinkhornDomain domain) {
  switch (domain) {
    case SinkhornDomain::kAuto: return "auto";
    case SinkhornDomain::kPlain: return "plain";
    case SinkhornDomain::kLog: return "log";
  }
  return "auto";
}

SinkhornDomain ParseDomain(std::string_view name) {
  if (name == "auto") return SinkhornDomain::kAuto;
  if (name == "plain") return SinkhornDomain::kPlain;
  if (name == "log") return SinkhornDomain::kLog;
  Fail(ErrorCode::kInvalidConfiguration, "unknown Sinkhorn domain '" + std::string(name) + "'");
}

std::string_view PolicyName(UnconvergedPolicy policy) {
  return policy == UnconvergedPolicy::kError ? "error" : "use-last-iterate";
}

UnconvergedPolicy ParsePolicy(std::string_view name) {
  if (name == "error") return UnconvergedPolicy::kError;
  if (name == "use-last-iterate") return UnconvergedPolicy::kUseLastIterate;
  Fail(ErrorCode::kInvalidConfiguration,
       "unknown unconverged policy '" + std::string(name) + "'");
}

}  // namespace

Json ParseJson(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    Malformed(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

const Json& Field(const Json& j, std::string_view key) {
  if (!j.is_object()) Malformed("expected a JSON object around '" + std::string(key) + "'");
  const auto it = j.find(key);
  if (it == j.end()) Malformed("missing field '" + std::string(key) + "'");
  return *it;
}

double GetDouble(const Json& j, std::string_view key) { return AsDouble(Field(j, key), key); }
int GetInt(const Json& j, std::string_view key) { return AsInt(Field(j, key), key); }
std::uint64_t GetUint64(const Json& j, std::string_view key) {
  return AsUint64(Field(j, key), key);
}
bool GetBool(const Json& j, std::string_view key) { return AsBool(Field(j, key), key); }
std::string GetString(const Json& j, std::string_view key) {
  return AsString(Field(j, key), key);
}

void CheckHeader(const Json& j, std::string_view format) {
  if (!j.is_object()) Malformed("top-level JSON value must be an object");
  if (GetString(j, "format") != format) {
    Malformed("expected a '" + std::string(format) + "' file");
  }
  const int version = GetInt(j, "schema_version");
  if (version != kSchemaVersion) {
    Fail(ErrorCode::kSchemaMismatch, "schema version " + std::to_string(version) +
                                         " is not supported (expected " +
                                         std::to_string(kSchemaVersion) + ")");
  }
}

Json Header(std::string_view format) {
  Json j = Json::object();
  j["format"] = format;
  j["schema_version"] = kSchemaVersion;
  return j;
}

Json MatrixToJson(const Matrix& m) {
  if (!m.allFinite()) Fail(ErrorCode::kInvalidInput, "cannot serialize non-finite values");
  Json data = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  Json j = Json::object();
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::move(data);
  return j;
}

Matrix MatrixFromJson(const Json& j) {
  const int rows = GetInt(j, "rows");
  const int cols = GetInt(j, "cols");
  const Json& data = Field(j, "data");
  if (rows < 0 || cols < 0) Malformed("negative matrix dimension");
  if (!data.is_array() ||
      data.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols)) {
    Malformed("matrix data length does not match rows x cols");
  }
  Matrix m(rows, cols);
  size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = AsDouble(data[k++], "data");
  }
  return m;
}

Json VectorToJson(const Vector& v) {
  if (!v.allFinite()) Fail(ErrorCode::kInvalidInput, "cannot serialize non-finite values");
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vector VectorFromJson(const Json& j) {
  if (!j.is_array()) Malformed("expected a numeric array");
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = AsDouble(j[i], "vector");
  return v;
}

Json LabelSetToJson(const LabelSet& labels) {
  Json j = Json::array();
  for (LabelId id : labels) j.push_back(id);
  return j;
}

LabelSet LabelSetFromJson(const Json& j) {
  if (!j.is_array()) Malformed("label_set must be an array");
  LabelSet labels;
  labels.reserve(j.size());
  for (const Json& v : j) labels.push_back(AsInt(v, "label_set"));
  return labels;
}

Json ToJson(const OptimizerConfig& config) {
  Json j = Json::object();
  j["learning_rate"] = config.learning_rate;
  j["momentum"] = config.momentum;
  j["weight_decay"] = config.weight_decay;
  j["batch_size"] = config.batch_size;
  j["epochs"] = config.epochs;
  j["lr_milestones"] = config.lr_milestones;
  j["lr_gamma"] = config.lr_gamma;
  j["seed"] = config.seed;
  return j;
}

Json ToJson(const DistillConfig& config) {
  Json j = Json::object();
  j["lambda"] = config.lambda;
  j["tau"] = config.tau;
  j["epsilon"] = config.epsilon;
  j["sinkhorn_tol"] = config.sinkhorn_tol;
  j["sinkhorn_max_iters"] = config.sinkhorn_max_iters;
  j["sinkhorn_domain"] = DomainName(config.sinkhorn_domain);
  j["scale_gradient_by_temperature"] = config.scale_gradient_by_temperature;
  j["optimizer"] = ToJson(config.optimizer);
  j["teacher_center_provenance"] = CenterProvenanceName(config.teacher_center_provenance);
  j["mode"] = DistillModeName(config.mode);
  j["unconverged_policy"] = PolicyName(config.unconverged_policy);
  return j;
}

Json ToJson(const AssessmentConfig& config) {
  Json j = Json::object();
  j["regime"] = AssessmentRegimeName(config.regime);
  j["tau"] = config.tau;
  j["couple_tau"] = config.couple_tau;
  j["metric_tau"] = config.metric_tau();
  j["epsilon"] = config.epsilon;
  j["sinkhorn_tol"] = config.sinkhorn_tol;
  j["sinkhorn_max_iters"] = config.sinkhorn_max_iters;
  j["sinkhorn_domain"] = DomainName(config.sinkhorn_domain);
  Json fictitious = Json::object();
  fictitious["learning_rate"] = config.fictitious.learning_rate;
  fictitious["l2"] = config.fictitious.l2;
  fictitious["max_iters"] = config.fictitious.max_iters;
  fictitious["grad_tol"] = config.fictitious.grad_tol;
  j["fictitious"] = std::move(fictitious);
  j["teacher_center_provenance"] = CenterProvenanceName(config.teacher_center_provenance);
  j["unconverged_policy"] = PolicyName(config.unconverged_policy);
  j["student_architecture"] = config.student_architecture;
  j["distill"] = ToJson(config.distill);
  j["seed"] = config.seed;
  return j;
}

void UpdateFromJson(const Json& j, OptimizerConfig& c) {
  ApplySetters(j,
               {
                   {"learning_rate",
                    [&](const Json& v) { c.learning_rate = AsDouble(v, "learning_rate"); }},
                   {"momentum", [&](const Json& v) { c.momentum = AsDouble(v, "momentum"); }},
                   {"weight_decay",
                    [&](const Json& v) { c.weight_decay = AsDouble(v, "weight_decay"); }},
                   {"batch_size", [&](const Json& v) { c.batch_size = AsInt(v, "batch_size"); }},
                   {"epochs", [&](const Json& v) { c.epochs = AsInt(v, "epochs"); }},
                   {"lr_milestones",
                    [&](const Json& v) {
                      if (!v.is_array()) Malformed("lr_milestones must be an array");
                      c.lr_milestones.clear();
                      for (const Json& m : v) c.lr_milestones.push_back(AsInt(m, "lr_milestones"));
                    }},
                   {"lr_gamma", [&](const Json& v) { c.lr_gamma = AsDouble(v, "lr_gamma"); }},
                   {"seed", [&](const Json& v) { c.seed = AsUint64(v, "seed"); }},
               },
               "optimizer config");
}

void UpdateFromJson(const Json& j, DistillConfig& c) {
  ApplySetters(
      j,
      {
          {"lambda", [&](const Json& v) { c.lambda = AsDouble(v, "lambda"); }},
          {"tau", [&](const Json& v) { c.tau = AsDouble(v, "tau"); }},
          {"epsilon", [&](const Json& v) { c.epsilon = AsDouble(v, "epsilon"); }},
          {"sinkhorn_tol", [&](const Json& v) { c.sinkhorn_tol = AsDouble(v, "sinkhorn_tol"); }},
          {"sinkhorn_max_iters",
           [&](const Json& v) { c.sinkhorn_max_iters = AsInt(v, "sinkhorn_max_iters"); }},
          {"sinkhorn_domain",
           [&](const Json& v) { c.sinkhorn_domain = ParseDomain(AsString(v, "sinkhorn_domain")); }},
          {"scale_gradient_by_temperature",
           [&](const Json& v) {
             c.scale_gradient_by_temperature = AsBool(v, "scale_gradient_by_temperature");
           }},
          {"optimizer", [&](const Json& v) { UpdateFromJson(v, c.optimizer); }},
          {"teacher_center_provenance",
           [&](const Json& v) {
             c.teacher_center_provenance =
                 ParseCenterProvenance(AsString(v, "teacher_center_provenance"));
           }},
          {"mode", [&](const Json& v) { c.mode = ParseDistillMode(AsString(v, "mode")); }},
          {"unconverged_policy",
           [&](const Json& v) {
             c.unconverged_policy = ParsePolicy(AsString(v, "unconverged_policy"));
           }},
      },
      "distill config");
}

void UpdateFromJson(const Json& j, AssessmentConfig& c) {
  ApplySetters(
      j,
      {
          {"regime",
           [&](const Json& v) { c.regime = ParseAssessmentRegime(AsString(v, "regime")); }},
          {"tau", [&](const Json& v) { c.tau = AsDouble(v, "tau"); }},
          {"couple_tau", [&](const Json& v) { c.couple_tau = AsBool(v, "couple_tau"); }},
          // Derived; accepted so that a saved snapshot can be read back.
          {"metric_tau", [](const Json&) {}},
          {"epsilon", [&](const Json& v) { c.epsilon = AsDouble(v, "epsilon"); }},
          {"sinkhorn_tol", [&](const Json& v) { c.sinkhorn_tol = AsDouble(v, "sinkhorn_tol"); }},
          {"sinkhorn_max_iters",
           [&](const Json& v) { c.sinkhorn_max_iters = AsInt(v, "sinkhorn_max_iters"); }},
          {"sinkhorn_domain",
           [&](const Json& v) { c.sinkhorn_domain = ParseDomain(AsString(v, "sinkhorn_domain")); }},
          {"fictitious",
           [&](const Json& v) {
             ApplySetters(
                 v,
                 {
                     {"learning_rate",
                      [&](const Json& x) {
                        c.fictitious.learning_rate = AsDouble(x, "learning_rate");
                      }},
                     {"l2", [&](const Json& x) { c.fictitious.l2 = AsDouble(x, "l2"); }},
                     {"max_iters",
                      [&](const Json& x) { c.fictitious.max_iters = AsInt(x, "max_iters"); }},
                     {"grad_tol",
                      [&](const Json& x) { c.fictitious.grad_tol = AsDouble(x, "grad_tol"); }},
                 },
                 "fictitious trainer config");
           }},
          {"teacher_center_provenance",
           [&](const Json& v) {
             c.teacher_center_provenance =
                 ParseCenterProvenance(AsString(v, "teacher_center_provenance"));
           }},
          {"unconverged_policy",
           [&](const Json& v) {
             c.unconverged_policy = ParsePolicy(AsString(v, "unconverged_policy"));
           }},
          {"student_architecture",
           [&](const Json& v) { c.student_architecture = AsString(v, "student_architecture"); }},
          {"distill", [&](const Json& v) { UpdateFromJson(v, c.distill); }},
          {"seed", [&](const Json& v) { c.seed = AsUint64(v, "seed"); }},
      },
      "assessment config");
}

}  // namespace ckd::internal
