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

#include "ckd/error.h"
#include "ckd/trainer.h"

namespace ckd {
namespace {

// Two Gaussian blobs with means +-(2, 2) and unit covariance.
LabeledDataset Blobs(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  LabeledDataset data;
  data.instances.resize(n, 2);
  data.label_set = {0, 1};
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    const double sign = y == 0 ? -1.0 : 1.0;
    data.instances(i, 0) = 2.0 * sign + normal(rng);
    data.instances(i, 1) = 2.0 * sign + normal(rng);
    data.labels.push_back(y);
  }
  return data;
}

TEST(CrossEntropyTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix logits(5, 4);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) logits(i, j) = normal(rng);
  }
  const std::vector<int> labels = {0, 3, 1, 1, 2};
  const BatchLoss base = CrossEntropyLoss(logits, labels);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      Matrix plus = logits, minus = logits;
      plus(i, j) += h;
      minus(i, j) -= h;
      const double fd =
          (CrossEntropyLoss(plus, labels).loss - CrossEntropyLoss(minus, labels).loss) / (2 * h);
      EXPECT_NEAR(base.dlogits(i, j), fd, 1e-8);
    }
  }
  double expected = 0.0;
  for (int i = 0; i < 5; ++i) {
    double z = 0.0;
    for (int j = 0; j < 4; ++j) z += std::exp(logits(i, j));
    expected -= std::log(std::exp(logits(i, labels[i])) / z);
  }
  EXPECT_NEAR(base.ce_loss, expected / 5, 1e-12);
}

TEST(TrainSupervisedTest, SeparableBlobs) {
  const LabeledDataset data = Blobs(200, 3);
  OptimizerConfig opt;
  opt.epochs = 100;
  opt.seed = 5;
  const Classifier init = Classifier::Create(Architecture::Parse("linear+bias", 2), {0, 1}, 9);
  const TrainResult result = TrainSupervised(init, data, opt);
  EXPECT_GE(result.trace.final_train_accuracy, 0.95);
  EXPECT_EQ(result.trace.epochs.size(), 100u);
  EXPECT_LT(result.trace.epochs.back().loss, result.trace.epochs.front().loss);
}

TEST(TrainSupervisedTest, ZeroEpochsLeavesParametersUnchanged) {
  const LabeledDataset data = Blobs(20, 4);
  OptimizerConfig opt;
  opt.epochs = 0;
  const Classifier init = Classifier::Create(Architecture::Parse("mlp4", 2), {0, 1}, 2);
  const TrainResult result = TrainSupervised(init, data, opt);
  EXPECT_EQ(result.model.Parameters(), init.Parameters());
  EXPECT_TRUE(result.trace.epochs.empty());
}

TEST(TrainSupervisedTest, FixedSeedIsBitwiseReproducible) {
  const LabeledDataset data = Blobs(64, 5);
  OptimizerConfig opt;
  opt.epochs = 7;
  opt.batch_size = 10;
  opt.lr_milestones = {3, 5};
  opt.seed = 77;
  const Classifier init = Classifier::Create(Architecture::Parse("mlp6", 2), {0, 1}, 3);
  const TrainResult a = TrainSupervised(init, data, opt);
  const TrainResult b = TrainSupervised(init, data, opt);
  EXPECT_EQ(a.model.Parameters(), b.model.Parameters());
  for (size_t e = 0; e < a.trace.epochs.size(); ++e) {
    EXPECT_EQ(a.trace.epochs[e].loss, b.trace.epochs[e].loss);
  }
  opt.seed = 78;
  EXPECT_NE(TrainSupervised(init, data, opt).model.Parameters(), a.model.Parameters());
}

TEST(TrainSupervisedTest, DivergenceIsReported) {
  const LabeledDataset data = Blobs(32, 6);
  OptimizerConfig opt;
  opt.learning_rate = 1e200;
  opt.epochs = 3;
  const Classifier init = Classifier::Create(Architecture::Parse("linear", 2), {0, 1}, 1);
  try {
    TrainSupervised(init, data, opt);
    FAIL() << "divergence not detected";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrainingDiverged);
  }
}

TEST(TrainSupervisedTest, RejectsBadConfigurationAndData) {
  const LabeledDataset data = Blobs(8, 7);
  const Classifier init = Classifier::Create(Architecture::Parse("linear", 2), {0, 1}, 1);
  OptimizerConfig opt;
  opt.batch_size = 0;
  EXPECT_THROW(TrainSupervised(init, data, opt), Error);
  const Classifier other = Classifier::Create(Architecture::Parse("linear", 2), {0, 2}, 1);
  EXPECT_THROW(TrainSupervised(other, data, OptimizerConfig()), Error);
}

TEST(RunTrainingLoopTest, SeesEveryRowOncePerEpoch) {
  const LabeledDataset data = Blobs(23, 8);
  OptimizerConfig opt;
  opt.epochs = 2;
  opt.batch_size = 5;
  Classifier model = Classifier::Create(Architecture::Parse("linear", 2), {0, 1}, 1);
  std::vector<int> seen(23, 0);
  const auto loss = [&](std::span<const Index> rows, const Matrix& logits) {
    for (Index r : rows) ++seen[static_cast<size_t>(r)];
    BatchLoss out;
    out.dlogits = Matrix::Zero(logits.rows(), logits.cols());
    return out;
  };
  RunTrainingLoop(model, data, opt, loss);
  for (int count : seen) EXPECT_EQ(count, 2);
}

}  // namespace
}  // namespace ckd
