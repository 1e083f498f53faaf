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

#include "ckd/softmax.h"

#include <cmath>
#include <limits>

#include "ckd/error.h"

namespace ckd {
namespace {

void CheckTemperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    Fail(ErrorCode::kInvalidInput, "temperature must be positive and finite");
  }
}

Vector SoftmaxValues(const Eigen::Ref<const Vector>& logits, double tau) {
  if (!logits.allFinite()) Fail(ErrorCode::kInvalidInput, "logits must be finite");
  const double peak = logits.maxCoeff();
  Vector e = ((logits.array() - peak) / tau).exp().matrix();
  e = e.cwiseMax(std::numeric_limits<double>::min());
  return e / e.sum();
}

}  // namespace

ProbabilityVector TemperedSoftmax(const Vector& logits, double tau) {
  CheckTemperature(tau);
  if (logits.size() == 0) Fail(ErrorCode::kInvalidInput, "logits are empty");
  return ProbabilityVector::Normalize(SoftmaxValues(logits, tau));
}

Matrix TemperedSoftmaxRows(const Matrix& logits, double tau) {
  CheckTemperature(tau);
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    out.row(i) = SoftmaxValues(logits.row(i).transpose(), tau).transpose();
  }
  return out;
}

Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    const double lse = peak + std::log((logits.row(i).array() - peak).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

}  // namespace ckd
