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

#ifndef CKD_CENTERS_H_
#define CKD_CENTERS_H_

#include <vector>

#include "ckd/classifier.h"
#include "ckd/transport.h"

namespace ckd {

// Mean embedding phi(x) per class of `data`, using `model`'s embedding
// network. Every class in data.label_set must have at least one instance
// (kDegenerateClass otherwise).
ClassCenters EmpiricalCenters(const Classifier& model, const LabeledDataset& data);

// Same, from precomputed features (N x d).
ClassCenters EmpiricalCentersFromFeatures(const Matrix& features,
                                          const LabeledDataset& data);

// Unit-L2 normalized head columns W(:, m) / ||W(:, m)||.
ClassCenters HeadWeightCenters(const Classifier& model);

// Nearest class mean in embedding space; ties go to the lowest index.
// Returns the global label id.
LabelId NcmClassify(const Classifier& model, const ClassCenters& centers,
                    const Vector& x);
// Label-set indices for every row of x.
std::vector<int> NcmPredictIndices(const Classifier& model,
                                   const ClassCenters& centers, const Matrix& x);
std::vector<int> NcmPredictIndicesFromFeatures(const Matrix& features,
                                               const ClassCenters& centers);

// M_mn = ||e_T,m - e_S,n||_2 between teacher (rows) and student (columns)
// centers.
CostMatrix BuildCostMatrix(const ClassCenters& teacher_centers,
                           const ClassCenters& student_centers);

}  // namespace ckd

#endif  // CKD_CENTERS_H_
