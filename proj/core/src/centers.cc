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

#include "ckd/centers.h"

#include <string>

#include "ckd/error.h"

namespace ckd {

ClassCenters EmpiricalCentersFromFeatures(const Matrix& features,
                                          const LabeledDataset& data) {
  data.Validate();
  if (features.rows() != data.size()) {
    Fail(ErrorCode::kInvalidInput, "feature rows do not match dataset size");
  }
  const Index classes = data.num_classes();
  Matrix sums = Matrix::Zero(classes, features.cols());
  std::vector<Index> counts(static_cast<size_t>(classes), 0);
  for (Index i = 0; i < data.size(); ++i) {
    const int y = data.labels[static_cast<size_t>(i)];
    sums.row(y) += features.row(i);
    ++counts[static_cast<size_t>(y)];
  }
  for (Index c = 0; c < classes; ++c) {
    if (counts[static_cast<size_t>(c)] == 0) {
      Fail(ErrorCode::kDegenerateClass,
           "class " + std::to_string(data.label_set[static_cast<size_t>(c)]) +
               " has no instances");
    }
    sums.row(c) /= static_cast<double>(counts[static_cast<size_t>(c)]);
  }
  return ClassCenters{std::move(sums), data.label_set, CenterProvenance::kEmpiricalMean};
}

ClassCenters EmpiricalCenters(const Classifier& model, const LabeledDataset& data) {
  return EmpiricalCentersFromFeatures(model.Embed(data.instances), data);
}

ClassCenters HeadWeightCenters(const Classifier& model) {
  const Matrix& head = model.head();
  Matrix centers(head.cols(), head.rows());
  for (Index m = 0; m < head.cols(); ++m) {
    const double norm = head.col(m).norm();
    if (!(norm > 0.0)) {
      Fail(ErrorCode::kDegenerateHead,
           "head column for class " +
               std::to_string(model.label_set()[static_cast<size_t>(m)]) + " is zero");
    }
    centers.row(m) = head.col(m).transpose() / norm;
  }
  return ClassCenters{std::move(centers), model.label_set(),
                      CenterProvenance::kNormalizedHeadWeights};
}

std::vector<int> NcmPredictIndicesFromFeatures(const Matrix& features,
                                               const ClassCenters& centers) {
  if (centers.centers.rows() == 0) Fail(ErrorCode::kInvalidInput, "no class centers");
  if (features.cols() != centers.centers.cols()) {
    Fail(ErrorCode::kInvalidInput, "feature and center dimensions differ");
  }
  std::vector<int> out(static_cast<size_t>(features.rows()));
  for (Index i = 0; i < features.rows(); ++i) {
    Index best = 0;
    double best_distance = (centers.centers.row(0) - features.row(i)).squaredNorm();
    for (Index m = 1; m < centers.centers.rows(); ++m) {
      const double distance = (centers.centers.row(m) - features.row(i)).squaredNorm();
      if (distance < best_distance) {
        best_distance = distance;
        best = m;
      }
    }
    out[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> NcmPredictIndices(const Classifier& model,
                                   const ClassCenters& centers, const Matrix& x) {
  return NcmPredictIndicesFromFeatures(model.Embed(x), centers);
}

LabelId NcmClassify(const Classifier& model, const ClassCenters& centers,
                    const Vector& x) {
  const Matrix row = x.transpose();
  const int index = NcmPredictIndices(model, centers, row).front();
  return centers.label_set[static_cast<size_t>(index)];
}

CostMatrix BuildCostMatrix(const ClassCenters& teacher_centers,
                           const ClassCenters& student_centers) {
  const Matrix& t = teacher_centers.centers;
  const Matrix& s = student_centers.centers;
  if (t.cols() != s.cols()) {
    Fail(ErrorCode::kInvalidInput, "teacher and student centers live in different spaces");
  }
  Matrix cost(t.rows(), s.rows());
  for (Index n = 0; n < s.rows(); ++n) {
    for (Index m = 0; m < t.rows(); ++m) cost(m, n) = (t.row(m) - s.row(n)).norm();
  }
  return CostMatrix(std::move(cost), teacher_centers.label_set, student_centers.label_set);
}

}  // namespace ckd
