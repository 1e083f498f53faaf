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

#ifndef CKD_DISTILL_H_
#define CKD_DISTILL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ckd/classifier.h"
#include "ckd/trainer.h"
#include "ckd/transport.h"

namespace ckd {

enum class DistillMode {
  kSinkhorn,    // cross-entropy + lambda * Sinkhorn distance
  kKlBaseline,  // cross-entropy + lambda * KL, identical label sets only
  kNone,        // cross-entropy only
};

enum class UnconvergedPolicy {
  kError,           // throw kSinkhornNotConverged
  kUseLastIterate,  // use the last potential and count the event
};

std::string_view DistillModeName(DistillMode mode);
DistillMode ParseDistillMode(std::string_view name);

struct DistillConfig {
  double lambda = 10.0;
  double tau = 3.0;
  double epsilon = 0.1;
  double sinkhorn_tol = 1e-9;
  int sinkhorn_max_iters = 1000;
  SinkhornDomain sinkhorn_domain = SinkhornDomain::kAuto;
  // Apply the 1/tau factor of the softmax chain rule to the Sinkhorn logit
  // gradient.
  bool scale_gradient_by_temperature = true;
  OptimizerConfig optimizer;
  CenterProvenance teacher_center_provenance = CenterProvenance::kNormalizedHeadWeights;
  DistillMode mode = DistillMode::kSinkhorn;
  UnconvergedPolicy unconverged_policy = UnconvergedPolicy::kError;

  SinkhornConfig sinkhorn() const;
};

struct DistillLossResult {
  double loss = 0.0;            // mean over the batch
  double ce_loss = 0.0;
  double distill_loss = 0.0;    // mean Sinkhorn / KL term before lambda
  double weighted_distill_loss = 0.0;
  Matrix dlogits;               // gradient of `loss` w.r.t. student logits
  int unconverged = 0;
};

// Teacher centers from `provenance` (head weights, or the teacher's stored
// empirical centers), student centers as the mean teacher embedding of each
// student class, and Euclidean distances between them.
CostMatrix BuildCostMatrixForPair(const Classifier& teacher,
                                  const LabeledDataset& student_data,
                                  CenterProvenance provenance);

// Mean over the batch of CE(y, z_s) + lambda * S_eps(rho_tau(z_t), rho_tau(z_s)).
DistillLossResult DistillLoss(const Matrix& student_logits,
                              const Matrix& teacher_logits,
                              std::span<const int> labels, const CostMatrix& cost,
                              const DistillConfig& config);

// Mean over the batch of CE(y, z_s) + lambda * KL(rho_tau(z_t) || rho_tau(z_s)).
// The label sets must be identical (kInvalidConfiguration otherwise).
DistillLossResult KlBaselineLoss(const Matrix& student_logits,
                                 const Matrix& teacher_logits,
                                 std::span<const int> labels,
                                 const LabelSet& teacher_labels,
                                 const LabelSet& student_labels,
                                 const DistillConfig& config);

struct DistillRun {
  Classifier student;
  std::vector<EpochStats> trace{};
  double final_train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<CostMatrix> cost{};  // present in Sinkhorn mode
  DistillConfig config{};
  std::uint64_t seed = 0;
  int unconverged_solves = 0;
};

// Trains `student` (taken as the randomly initialized template) against a
// frozen teacher. The cost matrix is computed once before the first epoch.
// Seeded by config.optimizer.seed.
DistillRun RunDistillation(const Classifier& teacher, Classifier student,
                           const LabeledDataset& train, const LabeledDataset& test,
                           const DistillConfig& config);

}  // namespace ckd

#endif  // CKD_DISTILL_H_
