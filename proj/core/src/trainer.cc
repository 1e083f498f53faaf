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

#include "ckd/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ckd/error.h"
#include "ckd/softmax.h"

namespace ckd {

BatchLoss CrossEntropyLoss(const Matrix& logits, std::span<const int> labels) {
  const Index n = logits.rows();
  BatchLoss out;
  out.dlogits = Matrix::Zero(n, logits.cols());
  if (n == 0) return out;
  const Matrix log_probs = LogSoftmaxRows(logits);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    total -= log_probs(i, y);
    out.dlogits.row(i) = log_probs.row(i).array().exp();
    out.dlogits(i, y) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.dlogits *= inv;
  out.ce_loss = total * inv;
  out.loss = out.ce_loss;
  return out;
}

TrainTrace RunTrainingLoop(Classifier& model, const LabeledDataset& data,
                           const OptimizerConfig& opt, const BatchLossFn& loss_fn) {
  data.Validate();
  if (model.label_set() != data.label_set) {
    Fail(ErrorCode::kInvalidInput, "model and dataset label sets differ");
  }
  if (data.dim() != model.input_dim()) {
    Fail(ErrorCode::kInvalidInput, "dataset dimension does not match model input");
  }
  if (opt.batch_size <= 0 || opt.epochs < 0 || !(opt.learning_rate > 0.0)) {
    Fail(ErrorCode::kInvalidConfiguration, "bad optimizer configuration");
  }
  TrainTrace trace;
  if (opt.epochs == 0 || data.size() == 0) {
    if (data.size() > 0) trace.final_train_accuracy = Accuracy(model, data);
    return trace;
  }

  std::mt19937_64 rng(opt.seed);
  std::vector<Index> order(static_cast<size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Vector params = model.Parameters();
  Vector velocity = Vector::Zero(params.size());
  double lr = opt.learning_rate;
  const Index batch = opt.batch_size;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (std::find(opt.lr_milestones.begin(), opt.lr_milestones.end(), epoch) !=
        opt.lr_milestones.end()) {
      lr *= opt.lr_gamma;
    }
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (Index start = 0; start < data.size(); start += batch) {
      const Index count = std::min(batch, data.size() - start);
      std::span<const Index> rows(order.data() + start, static_cast<size_t>(count));
      Matrix x(count, data.dim());
      for (Index r = 0; r < count; ++r) x.row(r) = data.instances.row(rows[static_cast<size_t>(r)]);
      const BatchLoss batch_loss = loss_fn(rows, model.Logits(x));
      if (!std::isfinite(batch_loss.loss) || !batch_loss.dlogits.allFinite()) {
        Fail(ErrorCode::kTrainingDiverged,
             "non-finite loss at epoch " + std::to_string(epoch));
      }
      const double weight = static_cast<double>(count);
      stats.loss += batch_loss.loss * weight;
      stats.ce_loss += batch_loss.ce_loss * weight;
      stats.aux_loss += batch_loss.aux_loss * weight;
      stats.weighted_aux_loss += batch_loss.weighted_aux_loss * weight;

      Vector grad = model.Backward(x, batch_loss.dlogits);
      grad += opt.weight_decay * params;
      velocity = opt.momentum * velocity + grad;
      params -= lr * velocity;
      if (!params.allFinite()) {
        Fail(ErrorCode::kTrainingDiverged,
             "non-finite parameters at epoch " + std::to_string(epoch));
      }
      model.SetParameters(params);
    }
    const double n = static_cast<double>(data.size());
    stats.loss /= n;
    stats.ce_loss /= n;
    stats.aux_loss /= n;
    stats.weighted_aux_loss /= n;
    stats.train_accuracy = Accuracy(model, data);
    trace.epochs.push_back(stats);
  }
  trace.final_train_accuracy = trace.epochs.back().train_accuracy;
  return trace;
}

TrainResult TrainSupervised(Classifier model, const LabeledDataset& data,
                            const OptimizerConfig& opt) {
  const auto loss = [&data](std::span<const Index> rows, const Matrix& logits) {
    std::vector<int> labels(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      labels[r] = data.labels[static_cast<size_t>(rows[r])];
    }
    return CrossEntropyLoss(logits, labels);
  };
  TrainTrace trace = RunTrainingLoop(model, data, opt, loss);
  return TrainResult{std::move(model), std::move(trace)};
}

}  // namespace ckd
