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

#include "ckd/transport.h"

#include <cmath>
#include <string>

#include "ckd/error.h"

namespace ckd {

ProbabilityVector ProbabilityVector::FromValues(Vector values) {
  if (values.size() == 0) {
    Fail(ErrorCode::kInvalidInput, "probability vector is empty");
  }
  for (Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      Fail(ErrorCode::kInvalidInput,
           "probability entry " + std::to_string(i) + " is negative or not finite");
    }
  }
  const double mass = values.sum();
  if (std::abs(mass - 1.0) > kMassTolerance) {
    Fail(ErrorCode::kInvalidInput,
         "probability vector sums to " + std::to_string(mass));
  }
  return ProbabilityVector(std::move(values));
}

ProbabilityVector ProbabilityVector::Normalize(Vector values) {
  if (values.size() == 0) {
    Fail(ErrorCode::kInvalidInput, "probability vector is empty");
  }
  if (!values.allFinite() || (values.array() < 0.0).any()) {
    Fail(ErrorCode::kInvalidInput, "cannot normalize a negative or non-finite vector");
  }
  const double mass = values.sum();
  if (!(mass > 0.0)) {
    Fail(ErrorCode::kInvalidInput, "cannot normalize a vector with zero mass");
  }
  values /= mass;
  return ProbabilityVector(std::move(values));
}

ProbabilityVector ProbabilityVector::Uniform(Index size) {
  if (size <= 0) Fail(ErrorCode::kInvalidInput, "uniform vector needs size > 0");
  return ProbabilityVector(Vector::Constant(size, 1.0 / static_cast<double>(size)));
}

namespace {

LabelSet Iota(Index n) {
  LabelSet labels(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = static_cast<LabelId>(i);
  return labels;
}

}  // namespace

CostMatrix::CostMatrix(Matrix entries, LabelSet source_labels,
                       LabelSet target_labels)
    : entries_(std::move(entries)),
      source_labels_(std::move(source_labels)),
      target_labels_(std::move(target_labels)) {
  if (entries_.rows() == 0 || entries_.cols() == 0) {
    Fail(ErrorCode::kInvalidInput, "cost matrix is empty");
  }
  if (static_cast<Index>(source_labels_.size()) != entries_.rows() ||
      static_cast<Index>(target_labels_.size()) != entries_.cols()) {
    Fail(ErrorCode::kInvalidInput, "cost matrix dimensions do not match label lists");
  }
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    Fail(ErrorCode::kInvalidInput, "cost entries must be finite and nonnegative");
  }
}

CostMatrix::CostMatrix(Matrix entries)
    : CostMatrix(entries, Iota(entries.rows()), Iota(entries.cols())) {}

GibbsKernel::GibbsKernel(const CostMatrix& cost, double epsilon)
    : cost_(cost.entries()), epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    Fail(ErrorCode::kInvalidInput, "epsilon must be positive");
  }
}

Matrix GibbsKernel::entries() const { return log_entries().array().exp().matrix(); }

}  // namespace ckd
