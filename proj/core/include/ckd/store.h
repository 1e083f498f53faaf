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

#ifndef CKD_STORE_H_
#define CKD_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ckd/assess.h"
#include "ckd/classifier.h"
#include "ckd/distill.h"
#include "ckd/synth.h"

namespace ckd {

inline constexpr int kSchemaVersion = 1;

// SHA-256 as 64 lowercase hex digits.
std::string Sha256Hex(std::string_view bytes);
std::string FileSha256(const std::filesystem::path& path);

std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

// Training summary carried inside a teacher's model file.
struct ModelSummary {
  std::string id;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::string task_id;
};

struct StoredModel {
  Classifier model;
  std::optional<ModelSummary> summary;
};

// Canonical JSON: sorted keys, shortest round-trip decimal doubles, trailing
// newline. Equal objects serialize to equal bytes.
std::string SerializeModel(const Classifier& model,
                           const std::optional<ModelSummary>& summary = {});
// Throws kMalformedFile or kSchemaMismatch; all dimensions are checked before
// the classifier is constructed.
StoredModel ParseModel(std::string_view text);
void SaveModel(const std::filesystem::path& path, const Classifier& model,
               const std::optional<ModelSummary>& summary = {});
// Throws kHashMismatch when `expected_sha256` is given and differs.
StoredModel LoadModel(const std::filesystem::path& path,
                      std::optional<std::string_view> expected_sha256 = {});

std::string SerializePool(const ClassPool& pool);
ClassPool ParsePool(std::string_view text);
void SavePool(const std::filesystem::path& path, const ClassPool& pool);
ClassPool LoadPool(const std::filesystem::path& path);

struct NamedTask {
  std::string id;
  int window_index = 0;
  int offset = 0;
  TaskSpec spec;
};

struct TaskSpecSet {
  std::string pool_path;
  std::string pool_sha256;
  int window_size = 0;
  int step = 0;
  std::vector<NamedTask> tasks;

  const NamedTask& Find(std::string_view id) const;
};

std::string SerializeTaskSpecs(const TaskSpecSet& specs);
TaskSpecSet ParseTaskSpecs(std::string_view text);
void SaveTaskSpecs(const std::filesystem::path& path, const TaskSpecSet& specs);
TaskSpecSet LoadTaskSpecs(const std::filesystem::path& path);

// Dataset CSV: header f0..f{D-1},label; one row per instance; the label column
// holds global class ids.
std::string DatasetToCsv(const LabeledDataset& data);
void ExportDatasetCsv(const std::filesystem::path& path, const LabeledDataset& data);

struct IngestedDataset {
  LabeledDataset data;
  // Original label token of each label index, in first-appearance order.
  std::vector<std::string> label_names;
};

// Parses a rectangular numeric CSV with a header row. The label column is
// named by `label_column`. Label indices follow first appearance; the global
// ids are the tokens themselves when they are all integers, else the indices.
IngestedDataset ParseDatasetCsv(std::string_view text, std::string_view label_column = "label");
IngestedDataset IngestDatasetCsv(const std::filesystem::path& path,
                                 std::string_view label_column = "label");

// Columns: epoch,ce_loss,distill_loss,train_acc.
std::string TraceToCsv(const std::vector<EpochStats>& trace);

std::string SerializeRun(const DistillRun& run, std::string_view teacher_id,
                         std::string_view task_id);

// Parses a report written by ReportToCsv (regime, rows, ground truth and
// external columns).
AssessmentReport ParseReportCsv(std::string_view text);

// Columns: teacher_id,regime,metric,rank,converged,seconds,ground_truth_acc,
// error, then one column per external metric (sorted by name). `seconds` and
// absent values are written as empty fields when `include_timing` is false.
std::string ReportToCsv(const AssessmentReport& report, bool include_timing);

// External metric CSV: a teacher_id column plus any numeric columns.
std::map<std::string, std::map<std::string, double>> ParseExternalMetricsCsv(
    std::string_view text);
void AttachExternalMetrics(AssessmentReport& report,
                           const std::map<std::string, std::map<std::string, double>>& metrics);

struct ManifestEntry {
  std::string id;
  std::string model_path;  // relative to the manifest directory
  LabelSet label_set;
  std::string architecture;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::string sha256;
};

struct RepositoryManifest {
  std::string version = "1";
  std::string pool_path;
  std::string pool_sha256;
  // False when some teachers failed to train and are missing.
  bool complete = true;
  std::vector<ManifestEntry> entries;  // sorted by id
};

inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr std::string_view kModelSuffix = ".model.json";

// Scans `dir` for *.model.json files. The teacher id is the stored summary id
// or the file stem. Throws kDuplicateId.
RepositoryManifest BuildManifest(const std::filesystem::path& dir,
                                 std::string_view pool_path = {},
                                 std::string_view pool_sha256 = {});

std::string SerializeManifest(const RepositoryManifest& manifest);
RepositoryManifest ParseManifest(std::string_view text);
void SaveManifest(const std::filesystem::path& dir, const RepositoryManifest& manifest);
RepositoryManifest LoadManifest(const std::filesystem::path& dir);

struct ManifestIssue {
  enum class Kind { kMissing, kHashMismatch };
  std::string id;
  Kind kind = Kind::kMissing;
};

// Recomputes every entry's hash; one issue per drifted or missing entry.
std::vector<ManifestIssue> VerifyManifest(const std::filesystem::path& dir,
                                          const RepositoryManifest& manifest);

// Loads every model listed in the manifest, checking hashes (kHashMismatch,
// kDanglingReference).
std::vector<RepositoryEntry> LoadRepository(const std::filesystem::path& dir);

// Advisory single-writer lock: creates `<dir>/.lock` exclusively and removes it
// on destruction. Throws kIo if the lock is held.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace ckd

#endif  // CKD_STORE_H_
