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

#include "ckd/distill.h"

#include <cmath>
#include <string>

#include "ckd/centers.h"
#include "ckd/error.h"
#include "ckd/sinkhorn.h"
#include "ckd/softmax.h"

namespace ckd {
namespace {

void CheckBatch(const Matrix& student_logits, const Matrix& teacher_logits,
                std::span<const int> labels) {
  if (student_logits.rows() != teacher_logits.rows() ||
      static_cast<size_t>(student_logits.rows()) != labels.size()) {
    Fail(ErrorCode::kInvalidInput, "teacher, student and label batches are misaligned");
  }
  for (int y : labels) {
    if (y < 0 || y >= student_logits.cols()) {
      Fail(ErrorCode::kInvalidInput, "label index out of range for student logits");
    }
  }
}

void CheckConfig(const DistillConfig& config) {
  if (!(config.lambda >= 0.0) || !(config.tau > 0.0) || !(config.epsilon > 0.0)) {
    Fail(ErrorCode::kInvalidConfiguration, "lambda >= 0, tau > 0 and epsilon > 0 required");
  }
}

}  // namespace

std::string_view DistillModeName(DistillMode mode) {
  switch (mode) {
    case DistillMode::kSinkhorn: return "sinkhorn";
    case DistillMode::kKlBaseline: return "kl-baseline";
    case DistillMode::kNone: return "none";
  }
  return "none";
}

DistillMode ParseDistillMode(std::string_view name) {
  if (name == "sinkhorn") return DistillMode::kSinkhorn;
  if (name == "kl-baseline") return DistillMode::kKlBaseline;
  if (name == "none") return DistillMode::kNone;
  Fail(ErrorCode::kInvalidConfiguration, "unknown distillation mode '" + std::string(name) + "'");
}

SinkhornConfig DistillConfig::sinkhorn() const {
  SinkhornConfig c;
  c.epsilon = epsilon;
  c.tol = sinkhorn_tol;
  c.max_iters = sinkhorn_max_iters;
  c.domain = sinkhorn_domain;
  return c;
}

CostMatrix BuildCostMatrixForPair(const Classifier& teacher,
                                  const LabeledDataset& student_data,
                                  CenterProvenance provenance) {
  ClassCenters teacher_centers;
  if (provenance == CenterProvenance::kNormalizedHeadWeights) {
    teacher_centers = HeadWeightCenters(teacher);
  } else if (teacher.stored_centers()) {
    teacher_centers = *teacher.stored_centers();
  } else {
    Fail(ErrorCode::kInvalidConfiguration,
         "empirical-mean provenance needs centers stored with the teacher");
  }
  return BuildCostMatrix(teacher_centers, EmpiricalCenters(teacher, student_data));
}

DistillLossResult DistillLoss(const Matrix& student_logits,
                              const Matrix& teacher_logits,
                              std::span<const int> labels, const CostMatrix& cost,
                              const DistillConfig& config) {
  CheckBatch(student_logits, teacher_logits, labels);
  CheckConfig(config);
  if (teacher_logits.cols() != cost.rows() || student_logits.cols() != cost.cols()) {
    Fail(ErrorCode::kInvalidInput, "cost matrix does not match teacher/student label sets");
  }
  const BatchLoss ce = CrossEntropyLoss(student_logits, labels);
  DistillLossResult out;
  out.ce_loss = ce.ce_loss;
  out.dlogits = ce.dlogits;
  const Index n = student_logits.rows();
  if (config.lambda == 0.0 || n == 0) {
    out.loss = out.ce_loss;
    return out;
  }
  const SinkhornConfig sinkhorn = config.sinkhorn();
  const double grad_temperature = config.scale_gradient_by_temperature ? config.tau : 1.0;
  const double inv = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const ProbabilityVector p_t = TemperedSoftmax(teacher_logits.row(i).transpose(), config.tau);
    const ProbabilityVector p_s = TemperedSoftmax(student_logits.row(i).transpose(), config.tau);
    const SinkhornSolution solution = SolveSinkhorn(p_t, p_s, cost, sinkhorn);
    Vector grad;
    if (solution.converged) {
      grad = GradientWrtLogits(solution, p_s, grad_temperature);
    } else if (config.unconverged_policy == UnconvergedPolicy::kUseLastIterate) {
      ++out.unconverged;
      grad = LogitGradientFromPotential(solution.beta, p_s, grad_temperature);
    } else {
      Fail(ErrorCode::kSinkhornNotConverged,
           "instance " + std::to_string(i) + ": marginal violation " +
               std::to_string(solution.marginal_violation) + " after " +
               std::to_string(solution.iterations_used) + " iterations");
    }
    total += solution.primal_value;
    out.dlogits.row(i) += (config.lambda * inv) * grad.transpose();
  }
  out.distill_loss = total * inv;
  out.weighted_distill_loss = config.lambda * out.distill_loss;
  out.loss = out.ce_loss + out.weighted_distill_loss;
  return out;
}

DistillLossResult KlBaselineLoss(const Matrix& student_logits,
                                 const Matrix& teacher_logits,
                                 std::span<const int> labels,
                                 const LabelSet& teacher_labels,
                                 const LabelSet& student_labels,
                                 const DistillConfig& config) {
  if (teacher_labels != student_labels) {
    Fail(ErrorCode::kInvalidConfiguration,
         "KL distillation requires identical teacher and student label sets");
  }
  CheckBatch(student_logits, teacher_logits, labels);
  CheckConfig(config);
  if (teacher_logits.cols() != student_logits.cols()) {
    Fail(ErrorCode::kInvalidInput, "teacher and student logits differ in width");
  }
  const BatchLoss ce = CrossEntropyLoss(student_logits, labels);
  DistillLossResult out;
  out.ce_loss = ce.ce_loss;
  out.dlogits = ce.dlogits;
  const Index n = student_logits.rows();
  if (config.lambda == 0.0 || n == 0) {
    out.loss = out.ce_loss;
    return out;
  }
  const Matrix p_t = TemperedSoftmaxRows(teacher_logits, config.tau);
  const Matrix p_s = TemperedSoftmaxRows(student_logits, config.tau);
  const double inv = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    double kl = 0.0;
    for (Index c = 0; c < p_t.cols(); ++c) {
      kl += p_t(i, c) * (std::log(p_t(i, c)) - std::log(p_s(i, c)));
    }
    total += kl;
  }
  out.dlogits += (config.lambda * inv / config.tau) * (p_s - p_t);
  out.distill_loss = total * inv;
  out.weighted_distill_loss = config.lambda * out.distill_loss;
  out.loss = out.ce_loss + out.weighted_distill_loss;
  return out;
}

DistillRun RunDistillation(const Classifier& teacher, Classifier student,
                           const LabeledDataset& train, const LabeledDataset& test,
                           const DistillConfig& config) {
  CheckConfig(config);
  train.Validate();
  if (student.label_set() != train.label_set) {
    Fail(ErrorCode::kInvalidInput, "student label set differs from the training data");
  }
  if (config.mode != DistillMode::kNone && teacher.input_dim() != train.dim()) {
    Fail(ErrorCode::kInvalidInput, "teacher input dimension does not match the data");
  }
  if (config.mode == DistillMode::kKlBaseline && teacher.label_set() != student.label_set()) {
    Fail(ErrorCode::kInvalidConfiguration,
         "KL distillation requires identical teacher and student label sets");
  }

  DistillRun run{.student = student};
  run.config = config;
  run.seed = config.optimizer.seed;

  std::optional<CostMatrix> cost;
  Matrix teacher_logits;
  if (config.mode == DistillMode::kSinkhorn) {
    cost = BuildCostMatrixForPair(teacher, train, config.teacher_center_provenance);
  }
  if (config.mode != DistillMode::kNone) teacher_logits = teacher.Logits(train.instances);

  int unconverged = 0;
  const auto loss = [&](std::span<const Index> rows, const Matrix& logits) {
    std::vector<int> labels(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      labels[r] = train.labels[static_cast<size_t>(rows[r])];
    }
    if (config.mode == DistillMode::kNone) return CrossEntropyLoss(logits, labels);
    Matrix batch_teacher(static_cast<Index>(rows.size()), teacher_logits.cols());
    for (size_t r = 0; r < rows.size(); ++r) {
      batch_teacher.row(static_cast<Index>(r)) = teacher_logits.row(rows[r]);
    }
    const DistillLossResult result =
        config.mode == DistillMode::kSinkhorn
            ? DistillLoss(logits, batch_teacher, labels, *cost, config)
            : KlBaselineLoss(logits, batch_teacher, labels, teacher.label_set(),
                             train.label_set, config);
    unconverged += result.unconverged;
    return BatchLoss{result.loss, result.ce_loss, result.distill_loss,
                     result.weighted_distill_loss, result.dlogits};
  };
  TrainTrace trace = RunTrainingLoop(student, train, config.optimizer, loss);

  run.student = std::move(student);
  run.trace = std::move(trace.epochs);
  run.final_train_accuracy = trace.final_train_accuracy;
  run.test_accuracy = test.size() > 0 ? Accuracy(run.student, test) : 0.0;
  run.cost = std::move(cost);
  run.unconverged_solves = unconverged;
  return run;
}

}  // namespace ckd
