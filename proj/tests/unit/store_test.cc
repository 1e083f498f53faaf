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

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "ckd/centers.h"
#include "ckd/error.h"
#include "ckd/store.h"
#include "ckd/synth.h"

namespace ckd {
namespace {

namespace fs = std::filesystem;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidInput;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("ckd-store-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Classifier SampleModel(std::uint64_t seed, bool with_centers) {
  Classifier model = Classifier::Create(Architecture::Parse("mlp5", 4), {3, 9, 1}, seed);
  if (with_centers) {
    ClassCenters centers = HeadWeightCenters(model);
    model.set_stored_centers(centers);
  }
  return model;
}

Matrix RandomInputs(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

TEST(Sha256Test, KnownDigests) {
  EXPECT_EQ(Sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ModelStoreTest, RoundTripIsBitwise) {
  TempDir dir;
  const Classifier model = SampleModel(5, true);
  const ModelSummary summary{"teacher-3", 0.75, 0.625, 17, "teacher-w3"};
  SaveModel(dir.path() / "a.model.json", model, summary);
  const StoredModel loaded = LoadModel(dir.path() / "a.model.json");
  const Matrix x = RandomInputs(50, 4, 2);
  const Matrix a = model.Logits(x);
  const Matrix b = loaded.model.Logits(x);
  ASSERT_EQ(a.rows(), b.rows());
  for (Index i = 0; i < a.size(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
  EXPECT_EQ(loaded.model.Parameters(), model.Parameters());
  EXPECT_EQ(loaded.model.label_set(), model.label_set());
  EXPECT_EQ(loaded.model.architecture().Name(), "mlp5");
  ASSERT_TRUE(loaded.model.stored_centers().has_value());
  EXPECT_EQ(loaded.model.stored_centers()->centers, model.stored_centers()->centers);
  ASSERT_TRUE(loaded.summary.has_value());
  EXPECT_EQ(loaded.summary->id, "teacher-3");
  EXPECT_EQ(loaded.summary->test_accuracy, 0.625);
  EXPECT_EQ(loaded.summary->seed, 17u);
}

TEST(ModelStoreTest, SavesAreByteIdentical) {
  TempDir dir;
  const Classifier model = SampleModel(8, false);
  SaveModel(dir.path() / "a.model.json", model);
  SaveModel(dir.path() / "b.model.json", SampleModel(8, false));
  EXPECT_EQ(ReadFile(dir.path() / "a.model.json"), ReadFile(dir.path() / "b.model.json"));
  const std::string reserialized = SerializeModel(ParseModel(SerializeModel(model)).model);
  EXPECT_EQ(reserialized, SerializeModel(model));
}

TEST(ModelStoreTest, ExtremeValuesSurvive) {
  Classifier model = SampleModel(2, false);
  Vector params = model.Parameters();
  params[0] = 1e-310;
  params[1] = -1.7976931348623157e308;
  params[2] = 0.1;
  model.SetParameters(params);
  EXPECT_EQ(ParseModel(SerializeModel(model)).model.Parameters(), params);
}

TEST(ModelStoreTest, MalformedInputsAreRejected) {
  const std::string text = SerializeModel(SampleModel(1, true));
  EXPECT_EQ(CodeOf([&] { ParseModel(text.substr(0, text.size() / 2)); }),
            ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([&] { ParseModel(""); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([&] { ParsePool(text); }), ErrorCode::kMalformedFile);

  std::string future = text;
  const size_t at = future.find("\"schema_version\": 1");
  ASSERT_NE(at, std::string::npos);
  future.replace(at, 19, "\"schema_version\": 2");
  EXPECT_EQ(CodeOf([&] { ParseModel(future); }), ErrorCode::kSchemaMismatch);

  std::string no_head = text;
  no_head.replace(no_head.find("\"head\""), 6, "\"hexd\"");
  EXPECT_EQ(CodeOf([&] { ParseModel(no_head); }), ErrorCode::kMalformedFile);
}

TEST(ModelStoreTest, KeyOrderDoesNotMatter) {
  const Classifier model = SampleModel(4, false);
  const std::string reordered = R"({
    "head": )" + std::string("HEAD") + R"(,
    "label_set": [3, 9, 1],
    "embedding": EMB,
    "architecture": ARCH,
    "schema_version": 1,
    "format": FORMAT
  })";
  // Splice the fields of a canonical serialization in reverse order.
  const std::string canonical = SerializeModel(model);
  auto field = [&](const std::string& key) {
    const size_t start = canonical.find("\"" + key + "\": ") + key.size() + 4;
    int depth = 0;
    size_t end = start;
    for (; end < canonical.size(); ++end) {
      const char ch = canonical[end];
      if (ch == '{' || ch == '[') ++depth;
      if (ch == '}' || ch == ']') --depth;
      if (depth == 0 && (ch == ',' || ch == '\n') && end > start) break;
      if (depth < 0) break;
    }
    return canonical.substr(start, end - start);
  };
  std::string text = reordered;
  for (const auto& [token, key] : std::vector<std::pair<std::string, std::string>>{
           {"HEAD", "head"}, {"EMB", "embedding"}, {"ARCH", "architecture"},
           {"FORMAT", "format"}}) {
    text.replace(text.find(token), token.size(), field(key));
  }
  EXPECT_EQ(ParseModel(text).model.Parameters(), model.Parameters());
}

TEST(ModelStoreTest, HashMismatchIsDetected) {
  TempDir dir;
  const fs::path path = dir.path() / "m.model.json";
  SaveModel(path, SampleModel(3, false));
  const std::string hash = FileSha256(path);
  EXPECT_NO_THROW(LoadModel(path, hash));
  std::string bytes = ReadFile(path);
  bytes += "\n";
  WriteFile(path, bytes);
  EXPECT_EQ(CodeOf([&] { LoadModel(path, hash); }), ErrorCode::kHashMismatch);
  EXPECT_EQ(CodeOf([&] { LoadModel(dir.path() / "missing.json"); }), ErrorCode::kIo);
}

TEST(PoolStoreTest, RoundTrip) {
  const ClassPool pool = MakePool(12, 5, 1.5, 0.5, 99);
  const ClassPool back = ParsePool(SerializePool(pool));
  EXPECT_EQ(back.prototypes, pool.prototypes);
  EXPECT_EQ(back.permutation, pool.permutation);
  EXPECT_EQ(back.spread, pool.spread);
  EXPECT_EQ(back.covariance_scale, pool.covariance_scale);
  EXPECT_EQ(back.seed, pool.seed);
  EXPECT_EQ(SerializePool(back), SerializePool(pool));
}

TEST(TaskStoreTest, RoundTripAndDuplicates) {
  TaskSpecSet specs;
  specs.pool_path = "pool.json";
  specs.pool_sha256 = std::string(64, 'a');
  specs.window_size = 5;
  specs.step = 2;
  specs.tasks.push_back({"teacher-w0", 0, 0, TaskSpec{{4, 2, 7}, 10, 5, 31}});
  specs.tasks.push_back({"student-w1", 1, 2, TaskSpec{{7, 8}, 3, 0, 32}});
  const TaskSpecSet back = ParseTaskSpecs(SerializeTaskSpecs(specs));
  ASSERT_EQ(back.tasks.size(), 2u);
  EXPECT_EQ(back.Find("student-w1").spec.label_set, (LabelSet{7, 8}));
  EXPECT_EQ(back.Find("teacher-w0").spec.seed, 31u);
  EXPECT_EQ(back.pool_sha256, specs.pool_sha256);
  EXPECT_EQ(back.step, 2);
  EXPECT_EQ(CodeOf([&] { back.Find("nope"); }), ErrorCode::kInvalidInput);

  specs.tasks.push_back(specs.tasks[0]);
  EXPECT_EQ(CodeOf([&] { ParseTaskSpecs(SerializeTaskSpecs(specs)); }),
            ErrorCode::kDuplicateId);
}

TEST(DatasetCsvTest, ToyIngest) {
  const IngestedDataset in = ParseDatasetCsv("x,label,y\n1.5,cat,2\n-3,dog,0.25\n4,cat,1e2\n");
  EXPECT_EQ(in.data.size(), 3);
  EXPECT_EQ(in.data.dim(), 2);
  EXPECT_EQ(in.label_names, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(in.data.label_set, (LabelSet{0, 1}));
  EXPECT_EQ(in.data.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(in.data.instances(2, 1), 100.0);
  EXPECT_EQ(in.data.instances(1, 0), -3.0);

  const IngestedDataset ids = ParseDatasetCsv("f,label\n0,12\n1,5\n2,12\n");
  EXPECT_EQ(ids.data.label_set, (LabelSet{12, 5}));
  EXPECT_EQ(ids.data.labels, (std::vector<int>{0, 1, 0}));

  const IngestedDataset named = ParseDatasetCsv("a,cls\n1,0\n", "cls");
  EXPECT_EQ(named.data.size(), 1);
}

TEST(DatasetCsvTest, BadInputs) {
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv(""); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv("x,label\n"); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv("x,y\n1,2\n"); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv("x,label\n1,a\n2\n"); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv("x,label\nfoo,a\n"); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv("x,label\nnan,a\n"); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([] { ParseDatasetCsv("x,label\n1,\n"); }), ErrorCode::kMalformedFile);
}

TEST(DatasetCsvTest, ExportIngestRoundTrip) {
  const ClassPool pool = MakePool(10, 7, 2.0, 1.0, 3);
  const TaskData data = SampleDataset(pool, TaskSpec{{1, 4, 6, 8}, 250, 0, 12});
  ASSERT_EQ(data.train.size(), 1000);
  TempDir dir;
  ExportDatasetCsv(dir.path() / "d.csv", data.train);
  const IngestedDataset back = IngestDatasetCsv(dir.path() / "d.csv");
  EXPECT_EQ(back.data.instances, data.train.instances);
  std::vector<LabelId> original, ingested;
  for (size_t i = 0; i < data.train.labels.size(); ++i) {
    original.push_back(data.train.label_set[data.train.labels[i]]);
    ingested.push_back(back.data.label_set[back.data.labels[i]]);
  }
  EXPECT_EQ(ingested, original);
}

class RepositoryTest : public ::testing::Test {
 protected:
  void WriteModels(int count) {
    for (int i = 0; i < count; ++i) {
      const std::string id = "teacher-" + std::to_string(i);
      SaveModel(dir_.path() / (id + std::string(kModelSuffix)), SampleModel(100 + i, true),
                ModelSummary{id, 0.5, 0.4 + 0.01 * i, 100u + i, "teacher-w" + std::to_string(i)});
    }
  }

  TempDir dir_;
};

TEST_F(RepositoryTest, EmptyDirectoryGivesEmptyManifest) {
  const RepositoryManifest manifest = BuildManifest(dir_.path());
  EXPECT_TRUE(manifest.entries.empty());
  SaveManifest(dir_.path(), manifest);
  EXPECT_TRUE(LoadRepository(dir_.path()).empty());
  EXPECT_EQ(CodeOf([&] { BuildManifest(dir_.path() / "absent"); }), ErrorCode::kIo);
}

TEST_F(RepositoryTest, TenModelsRoundTrip) {
  WriteModels(10);
  WriteFile(dir_.path() / "notes.txt", "ignored");
  RepositoryManifest manifest = BuildManifest(dir_.path(), "pool.json", "abc");
  ASSERT_EQ(manifest.entries.size(), 10u);
  EXPECT_EQ(manifest.entries[3].id, "teacher-3");
  EXPECT_EQ(manifest.entries[3].architecture, "mlp5");
  EXPECT_DOUBLE_EQ(manifest.entries[3].test_accuracy, 0.43);
  manifest.complete = false;
  SaveManifest(dir_.path(), manifest);
  const RepositoryManifest back = LoadManifest(dir_.path());
  EXPECT_FALSE(back.complete);
  EXPECT_EQ(back.pool_sha256, "abc");
  EXPECT_EQ(SerializeManifest(back), SerializeManifest(manifest));
  EXPECT_TRUE(VerifyManifest(dir_.path(), back).empty());

  const std::vector<RepositoryEntry> repo = LoadRepository(dir_.path());
  ASSERT_EQ(repo.size(), 10u);
  EXPECT_EQ(repo[7].id, "teacher-7");
  EXPECT_EQ(repo[7].model.Parameters(), SampleModel(107, true).Parameters());
}

TEST_F(RepositoryTest, ModifiedAndMissingFilesAreFlagged) {
  WriteModels(3);
  SaveManifest(dir_.path(), BuildManifest(dir_.path()));
  SaveModel(dir_.path() / "teacher-1.model.json", SampleModel(555, true),
            ModelSummary{"teacher-1", 0.5, 0.41, 101, "teacher-w1"});
  fs::remove(dir_.path() / "teacher-2.model.json");
  const std::vector<ManifestIssue> issues = VerifyManifest(dir_.path(), LoadManifest(dir_.path()));
  ASSERT_EQ(issues.size(), 2u);
  EXPECT_EQ(issues[0].id, "teacher-1");
  EXPECT_EQ(issues[0].kind, ManifestIssue::Kind::kHashMismatch);
  EXPECT_EQ(issues[1].id, "teacher-2");
  EXPECT_EQ(issues[1].kind, ManifestIssue::Kind::kMissing);
  EXPECT_EQ(CodeOf([&] { LoadRepository(dir_.path()); }), ErrorCode::kHashMismatch);
  WriteModels(2);
  EXPECT_EQ(CodeOf([&] { LoadRepository(dir_.path()); }), ErrorCode::kDanglingReference);
}

TEST_F(RepositoryTest, DuplicateIdsAreRejected) {
  WriteModels(2);
  SaveModel(dir_.path() / "copy.model.json", SampleModel(9, false),
            ModelSummary{"teacher-0", 0, 0, 0, ""});
  EXPECT_EQ(CodeOf([&] { BuildManifest(dir_.path()); }), ErrorCode::kDuplicateId);
}

TEST_F(RepositoryTest, LockIsExclusive) {
  {
    DirectoryLock lock(dir_.path());
    EXPECT_TRUE(fs::exists(dir_.path() / ".lock"));
    EXPECT_EQ(CodeOf([&] { DirectoryLock second(dir_.path()); }), ErrorCode::kIo);
  }
  EXPECT_FALSE(fs::exists(dir_.path() / ".lock"));
  EXPECT_NO_THROW(DirectoryLock again(dir_.path()));
}

TEST(ReportCsvTest, RoundTripWithExternalMetrics) {
  AssessmentReport report;
  report.regime = AssessmentRegime::kApproxII;
  for (int i = 0; i < 3; ++i) {
    AssessmentRow row;
    row.teacher_id = "t" + std::to_string(i);
    row.metric = 0.1 * (3 - i) + 1.0 / 3.0;
    row.rank = 3 - i;
    row.seconds = 0.25;
    if (i == 1) row.ground_truth = 0.875;
    report.rows.push_back(row);
  }
  report.rows[2].error = "invalid-input: bad, \"quoted\"";
  report.rows[2].rank = 0;
  report.rows[2].converged = false;
  AttachExternalMetrics(report,
                        ParseExternalMetricsCsv("teacher_id,leep,logme\nt0,-1.5,\nt1,2,3\n"));
  EXPECT_EQ(report.rows[0].external.at("leep"), -1.5);
  EXPECT_EQ(report.rows[0].external.count("logme"), 0u);

  const AssessmentReport back = ParseReportCsv(ReportToCsv(report, true));
  EXPECT_EQ(back.regime, AssessmentRegime::kApproxII);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.rows[0].metric, report.rows[0].metric);
  EXPECT_EQ(back.rows[1].rank, 2);
  EXPECT_EQ(back.rows[1].ground_truth, 0.875);
  EXPECT_FALSE(back.rows[0].ground_truth.has_value());
  EXPECT_EQ(back.rows[2].error, report.rows[2].error);
  EXPECT_FALSE(back.rows[2].converged);
  EXPECT_EQ(back.rows[1].external.at("logme"), 3.0);
  EXPECT_EQ(ReportToCsv(back, true), ReportToCsv(report, true));

  const AssessmentReport untimed = ParseReportCsv(ReportToCsv(report, false));
  EXPECT_EQ(untimed.rows[0].seconds, 0.0);
  EXPECT_EQ(CodeOf([] { ParseReportCsv("id,metric\n"); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(CodeOf([] { ParseExternalMetricsCsv("name,x\na,1\n"); }), ErrorCode::kMalformedFile);
}

}  // namespace
}  // namespace ckd
