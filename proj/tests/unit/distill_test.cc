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

#include <cmath>
#include <random>

#include "ckd/centers.h"
#include "ckd/distill.h"
#include "ckd/error.h"
#include "ckd/sinkhorn.h"
#include "ckd/softmax.h"
#include "ckd/synth.h"
#include "support/oracles.h"

namespace ckd {
namespace {

Matrix RandomLogits(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = 2.0 * normal(rng);
  }
  return m;
}

DistillConfig TightConfig(double lambda) {
  DistillConfig config;
  config.lambda = lambda;
  config.sinkhorn_tol = 1e-13;
  config.sinkhorn_max_iters = 200000;
  return config;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected ckd::Error";
  return ErrorCode::kIo;
}

Classifier TrainTeacherOn(const LabeledDataset& train) {
  OptimizerConfig opt;
  opt.epochs = 20;
  opt.seed = 4;
  Classifier teacher =
      TrainSupervised(Classifier::Create(Architecture::Parse("mlp8", 6), train.label_set, 5),
                      train, opt)
          .model;
  teacher.set_stored_centers(EmpiricalCenters(teacher, train));
  return teacher;
}

struct Fixture {
  ClassPool pool = MakePool(40, 6, 2.0, 1.0, 3);
  std::vector<TaskWindow> windows = SlidingWindows(pool, 5, 5);
  TaskData same = SampleDataset(pool, TaskSpec{windows[0].label_set, 20, 10, 1});
  TaskData far = SampleDataset(pool, TaskSpec{windows[4].label_set, 20, 10, 2});
  Classifier teacher = TrainTeacherOn(same.train);
};

TEST(DistillLossTest, ZeroLambdaIsCrossEntropy) {
  std::mt19937_64 rng(1);
  const Matrix s = RandomLogits(4, 3, rng);
  const Matrix t = RandomLogits(4, 5, rng);
  const std::vector<int> labels = {0, 2, 1, 1};
  const CostMatrix cost(testing::RandomCost(5, 3, rng));
  const DistillLossResult r = DistillLoss(s, t, labels, cost, TightConfig(0.0));
  const BatchLoss ce = CrossEntropyLoss(s, labels);
  EXPECT_EQ(r.loss, ce.loss);
  EXPECT_EQ(r.dlogits, ce.dlogits);
  EXPECT_EQ(r.distill_loss, 0.0);
}

TEST(DistillLossTest, SingleClassIsConstant) {
  Matrix s(1, 1), t(1, 1);
  s << 0.3;
  t << -2.0;
  const std::vector<int> labels = {0};
  const CostMatrix cost(Matrix::Constant(1, 1, 0.7));
  const DistillConfig config = TightConfig(10.0);
  const DistillLossResult r = DistillLoss(s, t, labels, cost, config);
  EXPECT_NEAR(r.distill_loss, 0.7 - config.epsilon, 1e-15);
  EXPECT_NEAR(r.dlogits(0, 0), 0.0, 1e-15);
}

TEST(DistillLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Matrix s = RandomLogits(3, 4, rng);
  const Matrix t = RandomLogits(3, 5, rng);
  const std::vector<int> labels = {3, 0, 1};
  const CostMatrix cost(testing::RandomCost(5, 4, rng));
  for (bool scale : {true, false}) {
    DistillConfig config = TightConfig(2.0);
    config.scale_gradient_by_temperature = scale;
    const DistillLossResult r = DistillLoss(s, t, labels, cost, config);
    const double h = 1e-5;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        Matrix plus = s, minus = s;
        plus(i, j) += h;
        minus(i, j) -= h;
        const double fd = (DistillLoss(plus, t, labels, cost, config).loss -
                           DistillLoss(minus, t, labels, cost, config).loss) /
                          (2 * h);
        if (scale) {
          EXPECT_LT(std::abs(r.dlogits(i, j) - fd), 1e-4 * std::max(std::abs(fd), 1e-3));
        }
      }
    }
    // Without the 1/tau factor the Sinkhorn part of the gradient is tau times larger.
    if (!scale) {
      DistillConfig scaled = config;
      scaled.scale_gradient_by_temperature = true;
      const Matrix ce = CrossEntropyLoss(s, labels).dlogits;
      const Matrix a = r.dlogits - ce;
      const Matrix b = DistillLoss(s, t, labels, cost, scaled).dlogits - ce;
      EXPECT_LT((a - config.tau * b).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(DistillLossTest, SelfDistillationUsesSinkhornOfEqualMarginals) {
  std::mt19937_64 rng(3);
  const Matrix logits = RandomLogits(2, 4, rng);
  const std::vector<int> labels = {1, 2};
  Matrix m = testing::RandomCost(4, 4, rng);
  m = (m + m.transpose()).eval();
  m.diagonal().setZero();
  const CostMatrix cost(m);
  const DistillConfig config = TightConfig(1.0);
  const DistillLossResult r = DistillLoss(logits, logits, labels, cost, config);
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    const ProbabilityVector p = TemperedSoftmax(logits.row(i).transpose(), config.tau);
    expected += SinkhornDistance(p, p, cost, config.sinkhorn());
    const SinkhornSolution sol = SolveSinkhorn(p, p, cost, config.sinkhorn());
    const Vector g = GradientWrtLogits(sol, p, config.tau);
    const Vector ce = CrossEntropyLoss(logits, labels).dlogits.row(i).transpose();
    EXPECT_LT((r.dlogits.row(i).transpose() - ce - 0.5 * g).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_NEAR(r.distill_loss, expected / 2, 1e-12);
}

TEST(DistillLossTest, UnconvergedPolicy) {
  std::mt19937_64 rng(4);
  const Matrix s = RandomLogits(2, 6, rng);
  const Matrix t = RandomLogits(2, 6, rng);
  const std::vector<int> labels = {0, 1};
  const CostMatrix cost(testing::RandomCost(6, 6, rng, 5.0));
  DistillConfig config;
  config.sinkhorn_max_iters = 1;
  EXPECT_EQ(CodeOf([&] { DistillLoss(s, t, labels, cost, config); }),
            ErrorCode::kSinkhornNotConverged);
  config.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  const DistillLossResult r = DistillLoss(s, t, labels, cost, config);
  EXPECT_EQ(r.unconverged, 2);
  EXPECT_TRUE(r.dlogits.allFinite());
}

TEST(DistillLossTest, RejectsMismatchedCost) {
  std::mt19937_64 rng(5);
  const Matrix s = RandomLogits(2, 3, rng);
  const std::vector<int> labels = {0, 1};
  EXPECT_EQ(CodeOf([&] {
              DistillLoss(s, s, labels, CostMatrix(Matrix::Ones(2, 3)), TightConfig(1.0));
            }),
            ErrorCode::kInvalidInput);
}

TEST(KlBaselineTest, EqualPredictionsGiveZero) {
  std::mt19937_64 rng(6);
  const Matrix s = RandomLogits(3, 4, rng);
  const std::vector<int> labels = {0, 1, 2};
  const DistillLossResult r = KlBaselineLoss(s, s, labels, {1, 2, 3, 4}, {1, 2, 3, 4},
                                             TightConfig(10.0));
  EXPECT_NEAR(r.distill_loss, 0.0, 1e-15);
  EXPECT_LT((r.dlogits - CrossEntropyLoss(s, labels).dlogits).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KlBaselineTest, MatchesDirectSumAndFiniteDifferences) {
  std::mt19937_64 rng(7);
  const Matrix s = RandomLogits(3, 4, rng);
  const Matrix t = RandomLogits(3, 4, rng);
  const std::vector<int> labels = {3, 1, 0};
  const LabelSet ids = {0, 1, 2, 3};
  const DistillConfig config = TightConfig(5.0);
  const DistillLossResult r = KlBaselineLoss(s, t, labels, ids, ids, config);
  double kl = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vector pt = testing::NaiveSoftmax(t.row(i).transpose(), config.tau);
    const Vector ps = testing::NaiveSoftmax(s.row(i).transpose(), config.tau);
    for (int c = 0; c < 4; ++c) kl += pt[c] * std::log(pt[c] / ps[c]);
  }
  EXPECT_NEAR(r.distill_loss, kl / 3, 1e-12);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      Matrix plus = s, minus = s;
      plus(i, j) += h;
      minus(i, j) -= h;
      const double fd = (KlBaselineLoss(plus, t, labels, ids, ids, config).loss -
                         KlBaselineLoss(minus, t, labels, ids, ids, config).loss) /
                        (2 * h);
      EXPECT_NEAR(r.dlogits(i, j), fd, 1e-7);
    }
  }
  EXPECT_EQ(KlBaselineLoss(s, t, labels, ids, ids, TightConfig(0.0)).loss,
            CrossEntropyLoss(s, labels).loss);
  EXPECT_EQ(CodeOf([&] { KlBaselineLoss(s, t, labels, ids, {0, 1, 2, 5}, config); }),
            ErrorCode::kInvalidConfiguration);
}

TEST(CostForPairTest, SameTaskDiagonalDominates) {
  const Fixture f;
  const CostMatrix m =
      BuildCostMatrixForPair(f.teacher, f.same.train, CenterProvenance::kEmpiricalMean);
  for (Index i = 0; i < m.rows(); ++i) EXPECT_LT(m(i, i), m.entries().row(i).mean());
  EXPECT_EQ(m.source_labels(), f.teacher.label_set());
  EXPECT_EQ(m.target_labels(), f.same.train.label_set);

  const CostMatrix far =
      BuildCostMatrixForPair(f.teacher, f.far.train, CenterProvenance::kEmpiricalMean);
  EXPECT_GT(far.entries().mean(), m.entries().mean());
}

TEST(CostForPairTest, ProvenanceSelectsTeacherCenters) {
  const Fixture f;
  const CostMatrix head =
      BuildCostMatrixForPair(f.teacher, f.far.train, CenterProvenance::kNormalizedHeadWeights);
  const CostMatrix expected =
      BuildCostMatrix(HeadWeightCenters(f.teacher), EmpiricalCenters(f.teacher, f.far.train));
  EXPECT_EQ(head.entries(), expected.entries());

  Classifier bare = f.teacher;
  bare.set_stored_centers(std::nullopt);
  EXPECT_EQ(CodeOf([&] {
              BuildCostMatrixForPair(bare, f.far.train, CenterProvenance::kEmpiricalMean);
            }),
            ErrorCode::kInvalidConfiguration);
}

DistillConfig RunConfig(DistillMode mode, double lambda) {
  DistillConfig config;
  config.mode = mode;
  config.lambda = lambda;
  config.teacher_center_provenance = CenterProvenance::kEmpiricalMean;
  config.unconverged_policy = UnconvergedPolicy::kUseLastIterate;
  config.sinkhorn_max_iters = 200;
  config.optimizer.epochs = 3;
  config.optimizer.seed = 8;
  return config;
}

TEST(RunDistillationTest, ZeroLambdaMatchesNoTeacher) {
  const Fixture f;
  const Classifier student =
      Classifier::Create(Architecture::Parse("linear", 6), f.far.train.label_set, 9);
  const DistillRun none = RunDistillation(f.teacher, student, f.far.train, f.far.test,
                                          RunConfig(DistillMode::kNone, 10.0));
  const DistillRun zero = RunDistillation(f.teacher, student, f.far.train, f.far.test,
                                          RunConfig(DistillMode::kSinkhorn, 0.0));
  ASSERT_EQ(none.trace.size(), 3u);
  ASSERT_EQ(zero.trace.size(), 3u);
  for (size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(none.trace[e].loss, zero.trace[e].loss);
    EXPECT_EQ(none.trace[e].aux_loss, 0.0);
  }
  EXPECT_EQ(none.student.Parameters(), zero.student.Parameters());
  EXPECT_FALSE(none.cost.has_value());
  EXPECT_TRUE(zero.cost.has_value());
}

TEST(RunDistillationTest, TeacherFrozenAndCostFixed) {
  const Fixture f;
  const Vector before = f.teacher.Parameters();
  const Classifier student =
      Classifier::Create(Architecture::Parse("linear", 6), f.far.train.label_set, 9);
  const DistillConfig config = RunConfig(DistillMode::kSinkhorn, 1.0);
  const DistillRun a = RunDistillation(f.teacher, student, f.far.train, f.far.test, config);
  EXPECT_EQ(f.teacher.Parameters(), before);
  ASSERT_TRUE(a.cost.has_value());
  EXPECT_EQ(a.cost->entries(),
            BuildCostMatrixForPair(f.teacher, f.far.train, CenterProvenance::kEmpiricalMean)
                .entries());
  EXPECT_GT(a.trace[0].aux_loss, 0.0);
  const DistillRun b = RunDistillation(f.teacher, student, f.far.train, f.far.test, config);
  EXPECT_EQ(a.student.Parameters(), b.student.Parameters());
  EXPECT_EQ(a.test_accuracy, b.test_accuracy);
}

TEST(RunDistillationTest, KlBaselineNeedsSameLabels) {
  const Fixture f;
  const Classifier student =
      Classifier::Create(Architecture::Parse("linear", 6), f.far.train.label_set, 9);
  EXPECT_EQ(CodeOf([&] {
              RunDistillation(f.teacher, student, f.far.train, f.far.test,
                              RunConfig(DistillMode::kKlBaseline, 1.0));
            }),
            ErrorCode::kInvalidConfiguration);
  const Classifier same =
      Classifier::Create(Architecture::Parse("linear", 6), f.same.train.label_set, 9);
  EXPECT_NO_THROW(RunDistillation(f.teacher, same, f.same.train, f.same.test,
                                  RunConfig(DistillMode::kKlBaseline, 1.0)));
}

TEST(RunDistillationTest, SmallStepFullBatchLossIsMonotone) {
  const Fixture f;
  const Classifier student =
      Classifier::Create(Architecture::Parse("linear", 6), f.far.train.label_set, 9);
  DistillConfig config = RunConfig(DistillMode::kSinkhorn, 1.0);
  config.sinkhorn_max_iters = 100000;
  config.sinkhorn_tol = 1e-12;
  config.unconverged_policy = UnconvergedPolicy::kError;
  config.optimizer.batch_size = static_cast<int>(f.far.train.size());
  config.optimizer.momentum = 0.0;
  config.optimizer.weight_decay = 0.0;
  config.optimizer.learning_rate = 1e-3;
  config.optimizer.epochs = 6;
  const DistillRun run = RunDistillation(f.teacher, student, f.far.train, f.far.test, config);
  for (size_t e = 1; e < run.trace.size(); ++e) {
    EXPECT_LE(run.trace[e].loss, run.trace[e - 1].loss);
  }
}

TEST(RunDistillationTest, CombinedGradientOnTinyModel) {
  // Two classes, two inputs, identity embedding: four head parameters.
  std::mt19937_64 rng(10);
  Matrix x = RandomLogits(5, 2, rng);
  const std::vector<int> labels = {0, 1, 1, 0, 1};
  Classifier student = Classifier::Create(Architecture::Parse("linear", 2), {0, 1}, 3);
  ASSERT_EQ(student.NumParameters(), 4);
  const Matrix teacher_logits = RandomLogits(5, 3, rng);
  const CostMatrix cost(testing::RandomCost(3, 2, rng));
  const DistillConfig config = TightConfig(10.0);
  const auto loss_at = [&](const Vector& params) {
    student.SetParameters(params);
    return DistillLoss(student.Logits(x), teacher_logits, labels, cost, config);
  };
  const Vector p = student.Parameters();
  const DistillLossResult base = loss_at(p);
  student.SetParameters(p);
  const Vector grad = student.Backward(x, base.dlogits);
  const double h = 1e-5;
  for (int k = 0; k < 4; ++k) {
    Vector plus = p, minus = p;
    plus[k] += h;
    minus[k] -= h;
    const double fd = (loss_at(plus).loss - loss_at(minus).loss) / (2 * h);
    EXPECT_LT(std::abs(grad[k] - fd), 1e-3 * std::max(std::abs(fd), 1e-3));
  }
}

}  // namespace
}  // namespace ckd
