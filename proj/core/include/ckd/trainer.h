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

#ifndef CKD_TRAINER_H_
#define CKD_TRAINER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ckd/classifier.h"

namespace ckd {

// Mini-batch SGD with momentum and weight decay, step learning-rate decay.
struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 64;
  int epochs = 30;
  // Multiply the learning rate by lr_gamma at the start of each listed epoch.
  std::vector<int> lr_milestones;
  double lr_gamma = 0.2;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;              // total objective, mean over instances
  double ce_loss = 0.0;           // cross-entropy term
  double aux_loss = 0.0;          // auxiliary term before weighting
  double weighted_aux_loss = 0.0; // auxiliary term after weighting
  double train_accuracy = 0.0;    // after the epoch's updates
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
  double final_train_accuracy = 0.0;
};

// Loss over one mini-batch. `dlogits` must already include the 1/batch
// factor so that its parameter gradient is the gradient of the batch mean.
struct BatchLoss {
  double loss = 0.0;
  double ce_loss = 0.0;
  double aux_loss = 0.0;
  double weighted_aux_loss = 0.0;
  Matrix dlogits;
};

using BatchLossFn =
    std::function<BatchLoss(std::span<const Index> rows, const Matrix& logits)>;

// Mean cross-entropy of logits against label indices, with its gradient.
BatchLoss CrossEntropyLoss(const Matrix& logits, std::span<const int> labels);

// Shared epoch loop: shuffles with opt.seed, evaluates loss_fn on each
// mini-batch, applies SGD with momentum. Throws kTrainingDiverged on a
// non-finite loss. `model` is updated in place.
TrainTrace RunTrainingLoop(Classifier& model, const LabeledDataset& data,
                           const OptimizerConfig& opt, const BatchLossFn& loss_fn);

struct TrainResult {
  Classifier model;
  TrainTrace trace;
};

// Plain supervised training minimizing mean cross-entropy.
TrainResult TrainSupervised(Classifier model, const LabeledDataset& data,
                            const OptimizerConfig& opt);

}  // namespace ckd

#endif  // CKD_TRAINER_H_
