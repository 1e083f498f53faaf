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

#include "ckd/store.h"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "ckd/error.h"
#include "json_io.h"

namespace ckd {

using internal::Field;
using internal::GetBool;
using internal::GetDouble;
using internal::GetInt;
using internal::GetString;
using internal::GetUint64;
using internal::Json;

namespace {

constexpr std::string_view kModelFormat = "ckd-model";
constexpr std::string_view kPoolFormat = "ckd-pool";
constexpr std::string_view kTasksFormat = "ckd-tasks";
constexpr std::string_view kManifestFormat = "ckd-manifest";
constexpr std::string_view kRunFormat = "ckd-run";

[[noreturn]] void Malformed(const std::string& message) {
  Fail(ErrorCode::kMalformedFile, message);
}

std::string FormatDouble(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string EscapeCsv(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// One record per line; quoted fields may contain commas and doubled quotes
// but not line breaks.
std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(Trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) Malformed("unterminated quoted CSV field");
  fields.emplace_back(Trim(current));
  return fields;
}

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = Trim(text.substr(start, end - start));
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool ParseDouble(std::string_view token, double& value) {
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
  return result.ec == std::errc() && result.ptr == token.data() + token.size() &&
         std::isfinite(value);
}

bool ParseInteger(std::string_view token, long long& value) {
  if (token.empty()) return false;
  const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
  return result.ec == std::errc() && result.ptr == token.data() + token.size();
}

Json ArchitectureToJson(const Architecture& arch) {
  Json j = Json::object();
  j["name"] = arch.Name();
  j["input_dim"] = arch.input_dim;
  j["feature_dim"] = arch.feature_dim;
  return j;
}

Architecture ArchitectureFromJson(const Json& j) {
  const std::string name = GetString(j, "name");
  const int input_dim = GetInt(j, "input_dim");
  const int feature_dim = GetInt(j, "feature_dim");
  if (input_dim <= 0 || feature_dim <= 0) Malformed("architecture dimensions must be positive");
  Architecture arch;
  try {
    arch = Architecture::Parse(name, input_dim);
  } catch (const Error& e) {
    Malformed(std::string("bad architecture: ") + e.what());
  }
  if (arch.feature_dim != feature_dim) {
    Malformed("feature_dim does not match architecture '" + name + "'");
  }
  return arch;
}

void CheckLabelSet(const LabelSet& labels, std::string_view what) {
  std::set<LabelId> seen;
  for (LabelId id : labels) {
    if (id < 0) Malformed(std::string(what) + " contains a negative label id");
    if (!seen.insert(id).second) Malformed(std::string(what) + " contains duplicate label ids");
  }
}

Json SummaryToJson(const ModelSummary& summary) {
  Json j = Json::object();
  j["id"] = summary.id;
  j["train_accuracy"] = summary.train_accuracy;
  j["test_accuracy"] = summary.test_accuracy;
  j["seed"] = summary.seed;
  j["task_id"] = summary.task_id;
  return j;
}

ModelSummary SummaryFromJson(const Json& j) {
  ModelSummary summary;
  summary.id = GetString(j, "id");
  summary.train_accuracy = GetDouble(j, "train_accuracy");
  summary.test_accuracy = GetDouble(j, "test_accuracy");
  summary.seed = GetUint64(j, "seed");
  summary.task_id = GetString(j, "task_id");
  return summary;
}

Json ModelToJson(const Classifier& model, const std::optional<ModelSummary>& summary) {
  Json j = internal::Header(kModelFormat);
  j["architecture"] = ArchitectureToJson(model.architecture());
  j["label_set"] = internal::LabelSetToJson(model.label_set());
  Json embedding = Json::object();
  embedding["weight"] = internal::MatrixToJson(model.embedding_weight());
  embedding["bias"] = internal::VectorToJson(model.embedding_bias());
  j["embedding"] = std::move(embedding);
  Json head = Json::object();
  head["weight"] = internal::MatrixToJson(model.head());
  head["bias"] = internal::VectorToJson(model.head_bias());
  j["head"] = std::move(head);
  if (model.stored_centers()) {
    const ClassCenters& centers = *model.stored_centers();
    Json c = Json::object();
    c["provenance"] = CenterProvenanceName(centers.provenance);
    c["label_set"] = internal::LabelSetToJson(centers.label_set);
    c["centers"] = internal::MatrixToJson(centers.centers);
    j["stored_centers"] = std::move(c);
  }
  if (summary) j["summary"] = SummaryToJson(*summary);
  return j;
}

StoredModel ModelFromJson(const Json& j) {
  internal::CheckHeader(j, kModelFormat);
  const Architecture arch = ArchitectureFromJson(Field(j, "architecture"));
  const LabelSet labels = internal::LabelSetFromJson(Field(j, "label_set"));
  CheckLabelSet(labels, "label_set");
  if (labels.empty()) Malformed("label_set is empty");
  const Json& embedding = Field(j, "embedding");
  const Json& head = Field(j, "head");
  Matrix embedding_weight = internal::MatrixFromJson(Field(embedding, "weight"));
  Vector embedding_bias = internal::VectorFromJson(Field(embedding, "bias"));
  Matrix head_weight = internal::MatrixFromJson(Field(head, "weight"));
  Vector head_bias = internal::VectorFromJson(Field(head, "bias"));

  const Index d = arch.feature_dim;
  const Index c = static_cast<Index>(labels.size());
  const bool identity = arch.embedding == Architecture::Embedding::kIdentity;
  const Index expect_w_rows = identity ? 0 : d;
  const Index expect_w_cols = identity ? 0 : arch.input_dim;
  if (embedding_weight.rows() != expect_w_rows || embedding_weight.cols() != expect_w_cols ||
      embedding_bias.size() != expect_w_rows) {
    Malformed("embedding dimensions do not match the architecture");
  }
  if (head_weight.rows() != d || head_weight.cols() != c) {
    Malformed("head dimensions do not match feature_dim x classes");
  }
  if (head_bias.size() != (arch.head_bias ? c : 0)) {
    Malformed("head bias length does not match the architecture");
  }

  std::optional<ClassCenters> centers;
  if (const auto it = j.find("stored_centers"); it != j.end()) {
    ClassCenters cc;
    try {
      cc.provenance = ParseCenterProvenance(GetString(*it, "provenance"));
    } catch (const Error& e) {
      Malformed(e.what());
    }
    cc.label_set = internal::LabelSetFromJson(Field(*it, "label_set"));
    cc.centers = internal::MatrixFromJson(Field(*it, "centers"));
    CheckLabelSet(cc.label_set, "stored center label_set");
    if (cc.centers.rows() != static_cast<Index>(cc.label_set.size()) ||
        cc.centers.cols() != d) {
      Malformed("stored centers do not match their label set and feature_dim");
    }
    centers = std::move(cc);
  }
  std::optional<ModelSummary> summary;
  if (const auto it = j.find("summary"); it != j.end()) summary = SummaryFromJson(*it);

  Classifier model(arch, labels, std::move(embedding_weight), std::move(embedding_bias),
                   std::move(head_weight), std::move(head_bias));
  model.set_stored_centers(std::move(centers));
  return StoredModel{std::move(model), std::move(summary)};
}

Json TaskToJson(const NamedTask& task) {
  Json j = Json::object();
  j["id"] = task.id;
  j["window_index"] = task.window_index;
  j["offset"] = task.offset;
  j["label_set"] = internal::LabelSetToJson(task.spec.label_set);
  j["train_per_class"] = task.spec.train_per_class;
  j["test_per_class"] = task.spec.test_per_class;
  j["seed"] = task.spec.seed;
  return j;
}

NamedTask TaskFromJson(const Json& j) {
  NamedTask task;
  task.id = GetString(j, "id");
  task.window_index = GetInt(j, "window_index");
  task.offset = GetInt(j, "offset");
  task.spec.label_set = internal::LabelSetFromJson(Field(j, "label_set"));
  CheckLabelSet(task.spec.label_set, "task label_set");
  task.spec.train_per_class = GetInt(j, "train_per_class");
  task.spec.test_per_class = GetInt(j, "test_per_class");
  if (task.spec.train_per_class < 0 || task.spec.test_per_class < 0) {
    Malformed("instances per class must be nonnegative");
  }
  task.spec.seed = GetUint64(j, "seed");
  return task;
}

Json EntryToJson(const ManifestEntry& e) {
  Json j = Json::object();
  j["id"] = e.id;
  j["model_path"] = e.model_path;
  j["label_set"] = internal::LabelSetToJson(e.label_set);
  j["architecture"] = e.architecture;
  j["train_accuracy"] = e.train_accuracy;
  j["test_accuracy"] = e.test_accuracy;
  j["seed"] = e.seed;
  j["sha256"] = e.sha256;
  return j;
}

ManifestEntry EntryFromJson(const Json& j) {
  ManifestEntry e;
  e.id = GetString(j, "id");
  e.model_path = GetString(j, "model_path");
  e.label_set = internal::LabelSetFromJson(Field(j, "label_set"));
  e.architecture = GetString(j, "architecture");
  e.train_accuracy = GetDouble(j, "train_accuracy");
  e.test_accuracy = GetDouble(j, "test_accuracy");
  e.seed = GetUint64(j, "seed");
  e.sha256 = GetString(j, "sha256");
  return e;
}

}  // namespace

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    Fail(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string FileSha256(const std::filesystem::path& path) { return Sha256Hex(ReadFile(path)); }

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) Fail(ErrorCode::kIo, "error reading '" + path.string() + "'");
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) Fail(ErrorCode::kIo, "cannot create '" + path.parent_path().string() + "'");
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIo, "error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot move '" + tmp.string() + "' into place");
}

std::string SerializeModel(const Classifier& model, const std::optional<ModelSummary>& summary) {
  return internal::DumpJson(ModelToJson(model, summary));
}

StoredModel ParseModel(std::string_view text) {
  return ModelFromJson(internal::ParseJson(text, "model file"));
}

void SaveModel(const std::filesystem::path& path, const Classifier& model,
               const std::optional<ModelSummary>& summary) {
  WriteFile(path, SerializeModel(model, summary));
}

StoredModel LoadModel(const std::filesystem::path& path,
                      std::optional<std::string_view> expected_sha256) {
  const std::string text = ReadFile(path);
  if (expected_sha256 && Sha256Hex(text) != *expected_sha256) {
    Fail(ErrorCode::kHashMismatch, "content hash of '" + path.string() + "' has changed");
  }
  return ParseModel(text);
}

std::string SerializePool(const ClassPool& pool) {
  Json j = internal::Header(kPoolFormat);
  j["num_classes"] = pool.num_classes();
  j["dim"] = pool.dim();
  j["spread"] = pool.spread;
  j["covariance_scale"] = pool.covariance_scale;
  j["seed"] = pool.seed;
  j["permutation"] = pool.permutation;
  j["prototypes"] = internal::MatrixToJson(pool.prototypes);
  return internal::DumpJson(j);
}

ClassPool ParsePool(std::string_view text) {
  const Json j = internal::ParseJson(text, "pool file");
  internal::CheckHeader(j, kPoolFormat);
  ClassPool pool;
  const int p = GetInt(j, "num_classes");
  const int d = GetInt(j, "dim");
  pool.spread = GetDouble(j, "spread");
  pool.covariance_scale = GetDouble(j, "covariance_scale");
  pool.seed = GetUint64(j, "seed");
  const Json& perm = Field(j, "permutation");
  if (!perm.is_array()) Malformed("permutation must be an array");
  for (const Json& v : perm) {
    if (!v.is_number_integer()) Malformed("permutation entries must be integers");
    pool.permutation.push_back(v.get<int>());
  }
  std::vector<int> sorted = pool.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
    if (sorted[i] != i) Malformed("permutation is not a permutation of the class ids");
  }
  if (p < 2 || d < 1 || static_cast<int>(sorted.size()) != p) {
    Malformed("pool dimensions are inconsistent");
  }
  if (pool.spread < 0.0 || pool.covariance_scale < 0.0) Malformed("negative pool scale");
  pool.prototypes = internal::MatrixFromJson(Field(j, "prototypes"));
  if (pool.prototypes.rows() != p || pool.prototypes.cols() != d) {
    Malformed("prototype matrix is not num_classes x dim");
  }
  return pool;
}

void SavePool(const std::filesystem::path& path, const ClassPool& pool) {
  WriteFile(path, SerializePool(pool));
}

ClassPool LoadPool(const std::filesystem::path& path) { return ParsePool(ReadFile(path)); }

const NamedTask& TaskSpecSet::Find(std::string_view id) const {
  for (const NamedTask& task : tasks) {
    if (task.id == id) return task;
  }
  Fail(ErrorCode::kInvalidInput, "no task with id '" + std::string(id) + "'");
}

std::string SerializeTaskSpecs(const TaskSpecSet& specs) {
  Json j = internal::Header(kTasksFormat);
  Json pool = Json::object();
  pool["path"] = specs.pool_path;
  pool["sha256"] = specs.pool_sha256;
  j["pool"] = std::move(pool);
  j["window_size"] = specs.window_size;
  j["step"] = specs.step;
  Json tasks = Json::array();
  for (const NamedTask& task : specs.tasks) tasks.push_back(TaskToJson(task));
  j["tasks"] = std::move(tasks);
  return internal::DumpJson(j);
}

TaskSpecSet ParseTaskSpecs(std::string_view text) {
  const Json j = internal::ParseJson(text, "task-spec file");
  internal::CheckHeader(j, kTasksFormat);
  TaskSpecSet specs;
  const Json& pool = Field(j, "pool");
  specs.pool_path = GetString(pool, "path");
  specs.pool_sha256 = GetString(pool, "sha256");
  specs.window_size = GetInt(j, "window_size");
  specs.step = GetInt(j, "step");
  const Json& tasks = Field(j, "tasks");
  if (!tasks.is_array()) Malformed("tasks must be an array");
  std::set<std::string> ids;
  for (const Json& t : tasks) {
    specs.tasks.push_back(TaskFromJson(t));
    if (!ids.insert(specs.tasks.back().id).second) {
      Fail(ErrorCode::kDuplicateId, "duplicate task id '" + specs.tasks.back().id + "'");
    }
  }
  return specs;
}

void SaveTaskSpecs(const std::filesystem::path& path, const TaskSpecSet& specs) {
  WriteFile(path, SerializeTaskSpecs(specs));
}

TaskSpecSet LoadTaskSpecs(const std::filesystem::path& path) {
  return ParseTaskSpecs(ReadFile(path));
}

std::string DatasetToCsv(const LabeledDataset& data) {
  data.Validate();
  std::string out;
  for (Index c = 0; c < data.dim(); ++c) out += "f" + std::to_string(c) + ",";
  out += "label\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index c = 0; c < data.dim(); ++c) {
      out += FormatDouble(data.instances(i, c));
      out += ',';
    }
    out += std::to_string(data.label_set[static_cast<size_t>(data.labels[i])]);
    out += '\n';
  }
  return out;
}

void ExportDatasetCsv(const std::filesystem::path& path, const LabeledDataset& data) {
  WriteFile(path, DatasetToCsv(data));
}

IngestedDataset ParseDatasetCsv(std::string_view text, std::string_view label_column) {
  const std::vector<std::string_view> lines = Lines(text);
  if (lines.empty()) Fail(ErrorCode::kEmptyInput, "dataset CSV is empty");
  const std::vector<std::string> header = SplitCsvLine(lines[0]);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    Malformed("no label column named '" + std::string(label_column) + "' in the header");
  }
  const size_t label_col = static_cast<size_t>(label_it - header.begin());
  if (lines.size() == 1) Fail(ErrorCode::kEmptyInput, "dataset CSV has no rows");

  const Index n = static_cast<Index>(lines.size() - 1);
  const Index d = static_cast<Index>(header.size() - 1);
  IngestedDataset out;
  out.data.instances.resize(n, d);
  out.data.labels.reserve(static_cast<size_t>(n));
  std::vector<std::string> tokens;
  for (Index i = 0; i < n; ++i) {
    const std::vector<std::string> fields = SplitCsvLine(lines[static_cast<size_t>(i) + 1]);
    if (fields.size() != header.size()) {
      Malformed("row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                " fields, header has " + std::to_string(header.size()));
    }
    Index c = 0;
    for (size_t f = 0; f < fields.size(); ++f) {
      if (f == label_col) continue;
      double value = 0.0;
      if (!ParseDouble(fields[f], value)) {
        Malformed("row " + std::to_string(i + 1) + ", column '" + header[f] +
                  "': not a finite number");
      }
      out.data.instances(i, c++) = value;
    }
    const std::string& token = fields[label_col];
    if (token.empty()) Malformed("row " + std::to_string(i + 1) + " has an empty label");
    auto it = std::find(out.label_names.begin(), out.label_names.end(), token);
    if (it == out.label_names.end()) {
      out.label_names.push_back(token);
      it = out.label_names.end() - 1;
    }
    out.data.labels.push_back(static_cast<int>(it - out.label_names.begin()));
  }
  bool integral = true;
  LabelSet ids;
  for (const std::string& name : out.label_names) {
    long long value = 0;
    if (!ParseInteger(name, value) || value < 0 || value > INT32_MAX) {
      integral = false;
      break;
    }
    ids.push_back(static_cast<LabelId>(value));
  }
  if (integral && std::set<LabelId>(ids.begin(), ids.end()).size() == ids.size()) {
    out.data.label_set = std::move(ids);
  } else {
    out.data.label_set.resize(out.label_names.size());
    for (size_t k = 0; k < out.label_names.size(); ++k) {
      out.data.label_set[k] = static_cast<LabelId>(k);
    }
  }
  return out;
}

IngestedDataset IngestDatasetCsv(const std::filesystem::path& path,
                                 std::string_view label_column) {
  return ParseDatasetCsv(ReadFile(path), label_column);
}

std::string TraceToCsv(const std::vector<EpochStats>& trace) {
  std::string out = "epoch,ce_loss,distill_loss,train_acc\n";
  for (const EpochStats& e : trace) {
    out += std::to_string(e.epoch) + "," + FormatDouble(e.ce_loss) + "," +
           FormatDouble(e.aux_loss) + "," + FormatDouble(e.train_accuracy) + "\n";
  }
  return out;
}

std::string SerializeRun(const DistillRun& run, std::string_view teacher_id,
                         std::string_view task_id) {
  Json j = internal::Header(kRunFormat);
  j["teacher_id"] = teacher_id;
  j["task_id"] = task_id;
  j["seed"] = run.seed;
  j["config"] = internal::ToJson(run.config);
  j["final_train_accuracy"] = run.final_train_accuracy;
  j["test_accuracy"] = run.test_accuracy;
  j["unconverged_solves"] = run.unconverged_solves;
  j["cost"] = run.cost ? internal::MatrixToJson(run.cost->entries()) : Json(nullptr);
  Json trace = Json::array();
  for (const EpochStats& e : run.trace) {
    Json row = Json::object();
    row["epoch"] = e.epoch;
    row["loss"] = e.loss;
    row["ce_loss"] = e.ce_loss;
    row["distill_loss"] = e.aux_loss;
    row["weighted_distill_loss"] = e.weighted_aux_loss;
    row["train_accuracy"] = e.train_accuracy;
    trace.push_back(std::move(row));
  }
  j["trace"] = std::move(trace);
  j["student"] = ModelToJson(run.student, std::nullopt);
  return internal::DumpJson(j);
}

std::string ReportToCsv(const AssessmentReport& report, bool include_timing) {
  std::set<std::string> external;
  for (const AssessmentRow& row : report.rows) {
    for (const auto& [name, value] : row.external) external.insert(name);
  }
  std::string out = "teacher_id,regime,metric,rank,converged,seconds,ground_truth_acc,error";
  for (const std::string& name : external) out += "," + EscapeCsv(name);
  out += '\n';
  const std::string regime(AssessmentRegimeName(report.regime));
  for (const AssessmentRow& row : report.rows) {
    out += EscapeCsv(row.teacher_id) + "," + regime + ",";
    out += row.ok() ? FormatDouble(row.metric) : "";
    out += ",";
    out += row.ok() ? std::to_string(row.rank) : "";
    out += ",";
    out += row.converged ? "true" : "false";
    out += ",";
    if (include_timing) out += FormatDouble(row.seconds);
    out += ",";
    if (row.ground_truth) out += FormatDouble(*row.ground_truth);
    out += "," + EscapeCsv(row.error);
    for (const std::string& name : external) {
      out += ",";
      const auto it = row.external.find(name);
      if (it != row.external.end()) out += FormatDouble(it->second);
    }
    out += '\n';
  }
  return out;
}

AssessmentReport ParseReportCsv(std::string_view text) {
  const std::vector<std::string_view> lines = Lines(text);
  if (lines.empty()) Fail(ErrorCode::kEmptyInput, "report CSV is empty");
  const std::vector<std::string> header = SplitCsvLine(lines[0]);
  static const std::vector<std::string> kFixed = {"teacher_id", "regime", "metric",
                                                  "rank", "converged", "seconds",
                                                  "ground_truth_acc", "error"};
  if (header.size() < kFixed.size() ||
      !std::equal(kFixed.begin(), kFixed.end(), header.begin())) {
    Malformed("report CSV header does not start with the standard columns");
  }
  const auto number = [](const std::string& field, size_t row, std::string_view column) {
    double value = 0.0;
    if (!ParseDouble(field, value)) {
      Malformed("report row " + std::to_string(row) + ", column '" + std::string(column) +
                "': not a number");
    }
    return value;
  };
  AssessmentReport report;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = SplitCsvLine(lines[i]);
    if (f.size() != header.size()) {
      Malformed("report row " + std::to_string(i) + " does not match the header width");
    }
    AssessmentRow row;
    row.teacher_id = f[0];
    try {
      report.regime = ParseAssessmentRegime(f[1]);
    } catch (const Error& e) {
      Malformed(e.what());
    }
    if (!f[2].empty()) row.metric = number(f[2], i, "metric");
    if (!f[3].empty()) row.rank = static_cast<int>(number(f[3], i, "rank"));
    if (f[4] != "true" && f[4] != "false") Malformed("converged must be true or false");
    row.converged = f[4] == "true";
    if (!f[5].empty()) row.seconds = number(f[5], i, "seconds");
    if (!f[6].empty()) row.ground_truth = number(f[6], i, "ground_truth_acc");
    row.error = f[7];
    if (row.ok() && f[2].empty()) Malformed("report row " + std::to_string(i) + " lacks a metric");
    for (size_t k = kFixed.size(); k < f.size(); ++k) {
      if (!f[k].empty()) row.external[header[k]] = number(f[k], i, header[k]);
    }
    report.rows.push_back(std::move(row));
  }
  report.config.regime = report.regime;
  return report;
}

std::map<std::string, std::map<std::string, double>> ParseExternalMetricsCsv(
    std::string_view text) {
  const std::vector<std::string_view> lines = Lines(text);
  if (lines.empty()) Fail(ErrorCode::kEmptyInput, "external metric CSV is empty");
  const std::vector<std::string> header = SplitCsvLine(lines[0]);
  const auto id_it = std::find(header.begin(), header.end(), "teacher_id");
  if (id_it == header.end()) Malformed("external metric CSV needs a teacher_id column");
  const size_t id_col = static_cast<size_t>(id_it - header.begin());
  std::map<std::string, std::map<std::string, double>> out;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> fields = SplitCsvLine(lines[i]);
    if (fields.size() != header.size()) {
      Malformed("row " + std::to_string(i) + " does not match the header width");
    }
    auto& metrics = out[fields[id_col]];
    for (size_t f = 0; f < fields.size(); ++f) {
      if (f == id_col || fields[f].empty()) continue;
      double value = 0.0;
      if (!ParseDouble(fields[f], value)) {
        Malformed("row " + std::to_string(i) + ", column '" + header[f] + "': not a number");
      }
      metrics[header[f]] = value;
    }
  }
  return out;
}

void AttachExternalMetrics(AssessmentReport& report,
                           const std::map<std::string, std::map<std::string, double>>& metrics) {
  for (AssessmentRow& row : report.rows) {
    const auto it = metrics.find(row.teacher_id);
    if (it == metrics.end()) continue;
    for (const auto& [name, value] : it->second) row.external[name] = value;
  }
}

RepositoryManifest BuildManifest(const std::filesystem::path& dir, std::string_view pool_path,
                                 std::string_view pool_sha256) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    Fail(ErrorCode::kIo, "'" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::directory_iterator(dir)) {
    const std::string name = item.path().filename().string();
    if (item.is_regular_file() && name.size() > kModelSuffix.size() &&
        name.ends_with(kModelSuffix)) {
      files.push_back(item.path());
    }
  }
  std::sort(files.begin(), files.end());

  RepositoryManifest manifest;
  manifest.pool_path = pool_path;
  manifest.pool_sha256 = pool_sha256;
  std::set<std::string> ids;
  for (const std::filesystem::path& file : files) {
    const std::string text = ReadFile(file);
    const StoredModel stored = ParseModel(text);
    const std::string filename = file.filename().string();
    ManifestEntry entry;
    entry.id = stored.summary && !stored.summary->id.empty()
                   ? stored.summary->id
                   : filename.substr(0, filename.size() - kModelSuffix.size());
    if (!ids.insert(entry.id).second) {
      Fail(ErrorCode::kDuplicateId, "teacher id '" + entry.id + "' appears twice");
    }
    entry.model_path = filename;
    entry.label_set = stored.model.label_set();
    entry.architecture = stored.model.architecture().Name();
    if (stored.summary) {
      entry.train_accuracy = stored.summary->train_accuracy;
      entry.test_accuracy = stored.summary->test_accuracy;
      entry.seed = stored.summary->seed;
    }
    entry.sha256 = Sha256Hex(text);
    manifest.entries.push_back(std::move(entry));
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  return manifest;
}

std::string SerializeManifest(const RepositoryManifest& manifest) {
  Json j = internal::Header(kManifestFormat);
  j["version"] = manifest.version;
  j["complete"] = manifest.complete;
  Json pool = Json::object();
  pool["path"] = manifest.pool_path;
  pool["sha256"] = manifest.pool_sha256;
  j["pool"] = std::move(pool);
  Json entries = Json::array();
  for (const ManifestEntry& e : manifest.entries) entries.push_back(EntryToJson(e));
  j["entries"] = std::move(entries);
  return internal::DumpJson(j);
}

RepositoryManifest ParseManifest(std::string_view text) {
  const Json j = internal::ParseJson(text, "manifest");
  internal::CheckHeader(j, kManifestFormat);
  RepositoryManifest manifest;
  manifest.version = GetString(j, "version");
  manifest.complete = GetBool(j, "complete");
  const Json& pool = Field(j, "pool");
  manifest.pool_path = GetString(pool, "path");
  manifest.pool_sha256 = GetString(pool, "sha256");
  const Json& entries = Field(j, "entries");
  if (!entries.is_array()) Malformed("entries must be an array");
  std::set<std::string> ids;
  for (const Json& e : entries) {
    manifest.entries.push_back(EntryFromJson(e));
    if (!ids.insert(manifest.entries.back().id).second) {
      Fail(ErrorCode::kDuplicateId,
           "teacher id '" + manifest.entries.back().id + "' appears twice");
    }
  }
  return manifest;
}

void SaveManifest(const std::filesystem::path& dir, const RepositoryManifest& manifest) {
  WriteFile(dir / kManifestFileName, SerializeManifest(manifest));
}

RepositoryManifest LoadManifest(const std::filesystem::path& dir) {
  return ParseManifest(ReadFile(dir / kManifestFileName));
}

std::vector<ManifestIssue> VerifyManifest(const std::filesystem::path& dir,
                                          const RepositoryManifest& manifest) {
  std::vector<ManifestIssue> issues;
  for (const ManifestEntry& e : manifest.entries) {
    const std::filesystem::path path = dir / e.model_path;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      issues.push_back({e.id, ManifestIssue::Kind::kMissing});
    } else if (FileSha256(path) != e.sha256) {
      issues.push_back({e.id, ManifestIssue::Kind::kHashMismatch});
    }
  }
  return issues;
}

std::vector<RepositoryEntry> LoadRepository(const std::filesystem::path& dir) {
  const RepositoryManifest manifest = LoadManifest(dir);
  std::vector<RepositoryEntry> repository;
  for (const ManifestEntry& e : manifest.entries) {
    const std::filesystem::path path = dir / e.model_path;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      Fail(ErrorCode::kDanglingReference,
           "manifest entry '" + e.id + "' points to missing file '" + e.model_path + "'");
    }
    StoredModel stored = LoadModel(path, e.sha256);
    if (stored.model.label_set() != e.label_set) {
      Malformed("label set of '" + e.id + "' disagrees with the manifest");
    }
    repository.push_back(RepositoryEntry{e.id, std::move(stored.model)});
  }
  return repository;
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::FILE* file = std::fopen(path_.c_str(), "wx");
  if (file == nullptr) {
    Fail(ErrorCode::kIo, "'" + dir.string() + "' is locked by another writer (" +
                             path_.string() + ")");
  }
  std::fclose(file);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace ckd
