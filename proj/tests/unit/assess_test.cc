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

#include <algorithm>
#include <cmath>
#include <random>

#include "ckd/assess.h"
#include "ckd/centers.h"
#include "ckd/error.h"
#include "ckd/sinkhorn.h"
#include "ckd/softmax.h"
#include "ckd/synth.h"
#include "ckd/trainer.h"

namespace ckd {
namespace {

AssessmentConfig TestConfig(AssessmentRegime regime) {
  AssessmentConfig config;
  config.regime = regime;
  config.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
  config.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  config.sinkhorn_max_iters = 300;
  config.distill.lambda = 1.0;
  config.distill.optimizer.epochs = 5;
  config.distill.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
  config.distill.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  config.distill.sinkhorn_max_iters = 100;
  config.seed = 3;
  return config;
}

class AssessFixture : public ::testing::Test {
 protected:
  static constexpr int kWindows = 3;

  void SetUp() override {
    pool_ = MakePool(30, 6, 2.0, 1.0, 21);
    const auto windows = SlidingWindows(pool_, 5, 5);
    for (int w = 0; w < kWindows; ++w) {
      const TaskData teacher_data =
          SampleDataset(pool_, TaskSpec{windows[w].label_set, 60, 0, 100u + w});
      OptimizerConfig opt;
      opt.epochs = 25;
      opt.seed = 7u + w;
      Classifier teacher =
          TrainSupervised(Classifier::Create(Architecture::Parse("mlp8", 6),
                                             windows[w].label_set, 11u + w),
                          teacher_data.train, opt)
              .model;
      teacher.set_stored_centers(EmpiricalCenters(teacher, teacher_data.train));
      repo_.push_back({"t" + std::to_string(w), teacher});
      students_.push_back(SampleDataset(pool_, TaskSpec{windows[w].label_set, 20, 20, 200u + w}));
    }
  }

  ClassPool pool_;
  std::vector<RepositoryEntry> repo_;
  std::vector<TaskData> students_;
};

// Softmax cross-entropy plus (l2 / 2)(|W|^2 + |b|^2), gradient by explicit loops.
void NaiveHeadGradient(const Matrix& f, const std::vector<int>& y, const Matrix& w,
                       const Vector& b, double l2, Matrix& gw, Vector& gb) {
  const Index n = f.rows(), d = f.cols(), c = w.cols();
  gw = l2 * w;
  gb = l2 * b;
  for (Index i = 0; i < n; ++i) {
    std::vector<double> z(static_cast<size_t>(c));
    double top = -1e300;
    for (Index k = 0; k < c; ++k) {
      z[k] = b[k];
      for (Index j = 0; j < d; ++j) z[k] += f(i, j) * w(j, k);
      top = std::max(top, z[k]);
    }
    double sum = 0.0;
    for (Index k = 0; k < c; ++k) sum += std::exp(z[k] - top);
    for (Index k = 0; k < c; ++k) {
      const double r = std::exp(z[k] - top) / sum - (k == y[i] ? 1.0 : 0.0);
      for (Index j = 0; j < d; ++j) gw(j, k) += r * f(i, j) / n;
      gb[k] += r / n;
    }
  }
}

TEST_F(AssessFixture, FictitiousHeadIsStationary) {
  const LabeledDataset& data = students_[0].train;
  FictitiousTrainerConfig config;
  const FictitiousStudent fit = FitFictitiousStudent(repo_[1].model, data, config);
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.gradient_norm, config.grad_tol);
  Matrix gw;
  Vector gb;
  NaiveHeadGradient(repo_[1].model.Embed(data.instances), data.labels, fit.model.head(),
                    fit.model.head_bias(), config.l2, gw, gb);
  EXPECT_LT(std::sqrt(gw.squaredNorm() + gb.squaredNorm()), 1e-5);
  EXPECT_EQ(fit.model.label_set(), data.label_set);
  EXPECT_EQ(fit.model.input_dim(), repo_[1].model.feature_dim());

  const FictitiousStudent again = FitFictitiousStudent(repo_[1].model, data, config);
  EXPECT_EQ(again.model.Parameters(), fit.model.Parameters());
}

TEST(FictitiousHeadTest, SeparableBlobsAndStrongRegularization) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Matrix x(200, 2);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const double s = i % 2 ? 1.0 : -1.0;
    x(i, 0) = 2 * s + normal(rng);
    x(i, 1) = 2 * s + normal(rng);
    y.push_back(i % 2);
  }
  const FictitiousStudent fit = FitFictitiousHead(x, y, {0, 1}, FictitiousTrainerConfig());
  const std::vector<int> predicted = PredictIndices(fit.model, x);
  int correct = 0;
  for (int i = 0; i < 200; ++i) correct += predicted[i] == y[i];
  EXPECT_GE(correct, 190);

  FictitiousTrainerConfig heavy;
  heavy.l2 = 1e6;
  const FictitiousStudent flat = FitFictitiousHead(x, y, {0, 1}, heavy);
  EXPECT_LT(flat.model.head().cwiseAbs().maxCoeff(), 1e-5);
  const Matrix p = TemperedSoftmaxRows(flat.model.Logits(x), 1.0);
  EXPECT_LT((p.array() - 0.5).abs().maxCoeff(), 1e-4);

  EXPECT_THROW(FitFictitiousHead(Matrix(0, 2), {}, {0, 1}, FictitiousTrainerConfig()), Error);
  EXPECT_THROW(FitFictitiousHead(x, std::vector<int>(200, 2), {0, 1}, FictitiousTrainerConfig()),
               Error);
}

TEST_F(AssessFixture, SingleInstanceMetricIsThatInstanceDistance) {
  LabeledDataset one;
  one.instances = students_[2].train.instances.topRows(1);
  one.label_set = {students_[2].train.label_set[students_[2].train.labels[0]]};
  one.labels = {0};
  AssessmentConfig config = TestConfig(AssessmentRegime::kApproxI);
  config.sinkhorn_tol = 1e-12;
  config.sinkhorn_max_iters = 100000;
  config.unconverged_policy = UnconvergedPolicy::kError;
  const Classifier& teacher = repo_[0].model;
  const Classifier surrogate =
      Classifier::Create(Architecture::Parse("linear", 6), one.label_set, 5);
  const MetricValue value = AssessTeacher(teacher, Surrogate{surrogate, false}, one, config);
  const CostMatrix cost =
      BuildCostMatrix(*teacher.stored_centers(), EmpiricalCenters(teacher, one));
  const Vector x = one.instances.row(0).transpose();
  const double expected =
      SinkhornDistance(TemperedSoftmax(teacher.Logits(x), config.metric_tau()),
                       TemperedSoftmax(surrogate.Logits(x), config.metric_tau()), cost,
                       config.sinkhorn());
  EXPECT_NEAR(value.value, expected, 1e-12);
}

TEST(AssessTeacherTest, ConstantCostUniformPredictionsClosedForm) {
  // Identity teacher with a zero head predicts uniformly; every stored center
  // sits at q and every student class center at r, so M is constant |q - r|.
  const int d = 3;
  for (int classes : {2, 4}) {
    LabelSet labels;
    for (int c = 0; c < classes; ++c) labels.push_back(c);
    Classifier teacher(Architecture::Parse("linear", d), labels, Matrix(), Vector(),
                       Matrix::Zero(d, classes), Vector());
    ClassCenters stored;
    stored.centers = Matrix::Zero(classes, d);
    stored.label_set = labels;
    teacher.set_stored_centers(stored);

    LabeledDataset data;
    data.instances = Matrix::Zero(6, d);
    data.instances.col(0).setConstant(2.0);
    data.label_set = {7, 8, 9};
    data.labels = {0, 1, 2, 0, 1, 2};
    const Classifier surrogate(Architecture::Parse("linear", d), data.label_set, Matrix(),
                               Vector(), Matrix::Zero(d, 3), Vector());
    AssessmentConfig config = TestConfig(AssessmentRegime::kApproxI);
    config.sinkhorn_tol = 1e-13;
    config.unconverged_policy = UnconvergedPolicy::kError;
    const double value =
        AssessTeacher(teacher, Surrogate{surrogate, false}, data, config).value;
    const double cells = 3.0 * classes;
    EXPECT_NEAR(value, 2.0 - config.epsilon * (std::log(cells) + 1.0), 1e-10);
  }
}

TEST_F(AssessFixture, SelfAssessmentBeatsDisjointSurrogate) {
  AssessmentConfig config = TestConfig(AssessmentRegime::kApproxI);
  const Classifier& teacher = repo_[0].model;
  const double self =
      AssessTeacher(teacher, Surrogate{teacher, false}, students_[0].train, config).value;
  const Classifier disjoint = TrainPlainStudent(students_[2].train, config);
  const double other =
      AssessTeacher(teacher, Surrogate{disjoint, false}, students_[2].train, config).value;
  EXPECT_LT(self, other);
}

TEST_F(AssessFixture, MetricIsPermutationEquivariant) {
  AssessmentConfig config = TestConfig(AssessmentRegime::kApproxI);
  config.sinkhorn_tol = 1e-12;
  config.sinkhorn_max_iters = 100000;
  config.unconverged_policy = UnconvergedPolicy::kError;
  std::vector<Index> picked;
  std::vector<int> seen(5, 0);
  for (Index i = 0; i < students_[1].train.size(); ++i) {
    if (seen[students_[1].train.labels[i]]++ < 2) picked.push_back(i);
  }
  const LabeledDataset data = students_[1].train.Subset(picked);
  const Classifier surrogate = TrainPlainStudent(students_[1].train, config);
  const Classifier& teacher = repo_[1].model;
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  LabelSet labels;
  Matrix head(teacher.head().rows(), 5);
  ClassCenters centers = *teacher.stored_centers();
  for (int k = 0; k < 5; ++k) {
    labels.push_back(teacher.label_set()[perm[k]]);
    head.col(k) = teacher.head().col(perm[k]);
    centers.centers.row(k) = teacher.stored_centers()->centers.row(perm[k]);
  }
  centers.label_set = labels;
  Classifier permuted(teacher.architecture(), labels, teacher.embedding_weight(),
                      teacher.embedding_bias(), head, teacher.head_bias());
  permuted.set_stored_centers(centers);
  const double a = AssessTeacher(teacher, Surrogate{surrogate, false}, data, config).value;
  const double b = AssessTeacher(permuted, Surrogate{surrogate, false}, data, config).value;
  EXPECT_NEAR(a, b, 1e-10);
}

TEST_F(AssessFixture, ApproxIIPicksSameWindowTeacher) {
  for (int target = 0; target < kWindows; ++target) {
    const AssessmentReport report =
        AssessRepository(repo_, students_[target].train, TestConfig(AssessmentRegime::kApproxII));
    ASSERT_NE(report.Best(), nullptr);
    EXPECT_EQ(report.Best()->teacher_id, "t" + std::to_string(target));
    for (const AssessmentRow& row : report.rows) {
      EXPECT_TRUE(row.ok());
      EXPECT_GE(row.metric, report.Best()->metric);
    }
  }
}

TEST_F(AssessFixture, ReportIsOrderIndependentAndRanksArePermutation) {
  const AssessmentConfig config = TestConfig(AssessmentRegime::kApproxII);
  const AssessmentReport forward = AssessRepository(repo_, students_[1].train, config);
  std::vector<RepositoryEntry> reversed(repo_.rbegin(), repo_.rend());
  const AssessmentReport backward = AssessRepository(reversed, students_[1].train, config);
  std::vector<int> ranks;
  for (const AssessmentRow& row : forward.rows) {
    const AssessmentRow* other = backward.Find(row.teacher_id);
    ASSERT_NE(other, nullptr);
    EXPECT_EQ(row.metric, other->metric);
    EXPECT_EQ(row.rank, other->rank);
    ranks.push_back(row.rank);
  }
  std::sort(ranks.begin(), ranks.end());
  EXPECT_EQ(ranks, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(forward.rows[0].teacher_id, "t0");
}

TEST_F(AssessFixture, FailuresAreRecordedPerRow) {
  std::vector<RepositoryEntry> repo = repo_;
  repo.push_back(
      {"bad", Classifier::Create(Architecture::Parse("linear", 4), {0, 1}, 1)});
  const AssessmentReport report =
      AssessRepository(repo, students_[0].train, TestConfig(AssessmentRegime::kApproxII));
  const AssessmentRow* bad = report.Find("bad");
  ASSERT_NE(bad, nullptr);
  EXPECT_FALSE(bad->ok());
  EXPECT_EQ(bad->rank, 0);
  EXPECT_EQ(bad->error.rfind("invalid-input", 0), 0u);
  EXPECT_EQ(report.Best()->teacher_id, "t0");

  repo.push_back(repo_[0]);
  try {
    AssessRepository(repo, students_[0].train, TestConfig(AssessmentRegime::kApproxII));
    FAIL() << "duplicate id accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
  }
  EXPECT_THROW(AssessRepository({}, students_[0].train, TestConfig(AssessmentRegime::kApproxII)),
               Error);
}

TEST_F(AssessFixture, SingleTeacherIsRankOne) {
  const std::vector<RepositoryEntry> one = {repo_[2]};
  const AssessmentReport report =
      AssessRepository(one, students_[0].train, TestConfig(AssessmentRegime::kApproxI));
  EXPECT_EQ(report.Best()->teacher_id, "t2");
  EXPECT_FALSE(report.correlation.has_value());
}

TEST_F(AssessFixture, VanillaRegimeDistillsEveryTeacher) {
  int logged = 0;
  const AssessmentReport report = AssessRepository(
      repo_, students_[1].train, TestConfig(AssessmentRegime::kVanilla), std::nullopt,
      &students_[1].test, [&](const AssessmentRow& row) {
        ++logged;
        EXPECT_TRUE(row.ground_truth.has_value());
      });
  EXPECT_EQ(logged, kWindows);
  EXPECT_EQ(report.regime, AssessmentRegime::kVanilla);
  ASSERT_TRUE(report.correlation.has_value());
  std::vector<double> metric, truth;
  for (const AssessmentRow& row : report.rows) {
    metric.push_back(row.metric);
    truth.push_back(*row.ground_truth);
  }
  EXPECT_NEAR(report.correlation->pearson, MetricCorrelation(metric, truth).pearson, 1e-15);
}

TEST_F(AssessFixture, ApproxIUsesTheProvidedStudent) {
  const AssessmentConfig config = TestConfig(AssessmentRegime::kApproxI);
  const Classifier student = TrainPlainStudent(students_[0].train, config);
  const AssessmentReport a = AssessRepository(repo_, students_[0].train, config, student);
  const AssessmentReport b = AssessRepository(repo_, students_[0].train, config);
  for (size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].metric, b.rows[i].metric);
  const Classifier wrong = TrainPlainStudent(students_[1].train, config);
  EXPECT_THROW(AssessRepository(repo_, students_[0].train, config, wrong), Error);
}

TEST(RankRowsTest, TiesBrokenById) {
  std::vector<AssessmentRow> rows(4);
  rows[0].teacher_id = "b";
  rows[0].metric = 1.0;
  rows[1].teacher_id = "a";
  rows[1].metric = 1.0;
  rows[2].teacher_id = "c";
  rows[2].metric = 0.5;
  rows[3].teacher_id = "d";
  rows[3].error = "boom";
  RankRows(rows);
  EXPECT_EQ(rows[2].rank, 1);
  EXPECT_EQ(rows[1].rank, 2);
  EXPECT_EQ(rows[0].rank, 3);
  EXPECT_EQ(rows[3].rank, 0);
}

TEST(AttachGroundTruthTest, NeedsThreePoints) {
  AssessmentReport report;
  for (int i = 0; i < 3; ++i) {
    AssessmentRow row;
    row.teacher_id = "t" + std::to_string(i);
    row.metric = i;
    report.rows.push_back(row);
  }
  AttachGroundTruth(report, {{"t0", 0.9}, {"t1", 0.8}});
  EXPECT_FALSE(report.correlation.has_value());
  EXPECT_TRUE(report.rows[0].ground_truth.has_value());
  AttachGroundTruth(report, {{"t0", 0.9}, {"t1", 0.8}, {"t2", 0.7}});
  ASSERT_TRUE(report.correlation.has_value());
  EXPECT_NEAR(report.correlation->pearson, 1.0, 1e-12);
  AttachGroundTruth(report, {{"t0", 0.5}, {"t1", 0.5}, {"t2", 0.5}});
  EXPECT_FALSE(report.correlation.has_value());
}

TEST(KlBetweenStudentsTest, ZeroForEqualAndEntropyGapForUniform) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Matrix x(8, 3);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = normal(rng);
  }
  const Classifier a = Classifier::Create(Architecture::Parse("linear", 3), {0, 1, 2, 3}, 1);
  EXPECT_NEAR(KlBetweenStudents(a, a, x, 3.0), 0.0, 1e-15);
  const Classifier uniform(Architecture::Parse("linear", 3), {0, 1, 2, 3}, Matrix(), Vector(),
                           Matrix::Zero(3, 4), Vector());
  double expected = 0.0;
  const Matrix logits = a.Logits(x);
  for (int i = 0; i < 8; ++i) {
    double z = 0.0;
    for (int c = 0; c < 4; ++c) z += std::exp(logits(i, c) / 3.0);
    double neg_entropy = 0.0;
    for (int c = 0; c < 4; ++c) {
      const double p = std::exp(logits(i, c) / 3.0) / z;
      neg_entropy += p * std::log(p);
    }
    expected += neg_entropy + std::log(4.0);
  }
  EXPECT_NEAR(KlBetweenStudents(a, uniform, x, 3.0), expected / 8, 1e-12);
  const Classifier other = Classifier::Create(Architecture::Parse("linear", 3), {0, 1, 2, 5}, 1);
  EXPECT_THROW(KlBetweenStudents(a, other, x, 3.0), Error);
}

TEST(AssessmentRegimeTest, NamesRoundTrip) {
  for (AssessmentRegime r :
       {AssessmentRegime::kVanilla, AssessmentRegime::kApproxI, AssessmentRegime::kApproxII}) {
    EXPECT_EQ(ParseAssessmentRegime(AssessmentRegimeName(r)), r);
  }
  EXPECT_EQ(ParseAssessmentRegime("approx2"), AssessmentRegime::kApproxII);
  EXPECT_THROW(ParseAssessmentRegime("approx-III"), Error);
}

}  // namespace
}  // namespace ckd
